// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "neaf/bench.hpp"
#include "neaf/xyz_io.hpp"
#include "test_support.hpp"

using namespace neaf;
using neaf::test::TempDir;

TEST_CASE("synth_cloud analytic normals") {
  SUBCASE("noiseless plane is flat with +z normals") {
    ShapeSpec spec;
    spec.kind = ShapeKind::Plane;
    spec.points = 200;
    spec.seed = 1;
    const LabeledCloud cloud = synth_cloud(spec);
    REQUIRE(cloud.size() == 200);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(cloud.points[i].z() == 0.0);
      CHECK(cloud.normals[i].z() == 1.0);
    }
  }

  SUBCASE("sphere normals are radial") {
    ShapeSpec spec;
    spec.kind = ShapeKind::Sphere;
    spec.points = 300;
    spec.radius = 2.5;
    spec.seed = 2;
    const LabeledCloud cloud = synth_cloud(spec);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(cloud.points[i].norm() == doctest::Approx(2.5).epsilon(1e-12));
      CHECK(cloud.normals[i].vec().isApprox(cloud.points[i] / 2.5, 1e-12));
    }
  }

  SUBCASE("cylinder normals are perpendicular to the axis") {
    ShapeSpec spec;
    spec.kind = ShapeKind::Cylinder;
    spec.points = 300;
    spec.radius = 0.7;
    spec.height = 3.0;
    spec.seed = 3;
    const LabeledCloud cloud = synth_cloud(spec);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(cloud.normals[i].z() == 0.0);
      const Vec3 lateral(cloud.points[i].x(), cloud.points[i].y(), 0.0);
      CHECK(lateral.norm() == doctest::Approx(0.7).epsilon(1e-12));
      CHECK(std::abs(cloud.points[i].z()) <= 1.5);
      CHECK(cloud.normals[i].vec().isApprox(lateral / 0.7, 1e-12));
    }
  }

  SUBCASE("torus normals point away from the ring") {
    ShapeSpec spec;
    spec.kind = ShapeKind::Torus;
    spec.points = 300;
    spec.major_radius = 1.0;
    spec.minor_radius = 0.25;
    spec.seed = 4;
    const LabeledCloud cloud = synth_cloud(spec);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      Vec3 ring(p.x(), p.y(), 0.0);
      ring *= 1.0 / ring.norm();
      const Vec3 expected = (p - ring).normalized();
      CHECK(cloud.normals[i].vec().isApprox(expected, 1e-9));
      // On the tube surface.
      CHECK((p - ring).norm() == doctest::Approx(0.25).epsilon(1e-9));
    }
  }
}

TEST_CASE("synth_cloud density modes") {
  ShapeSpec spec;
  spec.kind = ShapeKind::Plane;
  spec.points = 4000;
  spec.seed = 9;

  SUBCASE("stripes keep alternating parameter bands") {
    spec.density = DensityMode::Stripes;
    const LabeledCloud cloud = synth_cloud(spec);
    CHECK(cloud.size() < 2400);  // roughly half survives
    CHECK(cloud.size() > 1600);
    for (const Vec3& p : cloud.points) {
      const double u = p.x() / spec.extent + 0.5;  // back to [0, 1)
      const int band = int(std::floor(u * 10.0));
      CHECK(band % 2 == 0);
    }
  }

  SUBCASE("gradient acceptance grows along the parameter") {
    spec.density = DensityMode::Gradient;
    const LabeledCloud cloud = synth_cloud(spec);
    int low = 0, high = 0;
    for (const Vec3& p : cloud.points) {
      const double u = p.x() / spec.extent + 0.5;
      if (u < 0.25) ++low;
      if (u > 0.75) ++high;
    }
    CHECK(high > 3 * low);  // expected ratio is (0.875/0.125) = 7
    CHECK(cloud.size() > 1500);
    CHECK(cloud.size() < 2500);
  }

  SUBCASE("an unlucky tiny gradient cloud can reject everything") {
    spec.density = DensityMode::Gradient;
    spec.points = 1;
    bool saw_empty = false;
    for (std::uint64_t s = 0; s < 64 && !saw_empty; ++s) {
      spec.seed = s;
      try {
        (void)synth_cloud(spec);
      } catch (const EmptyResult&) {
        saw_empty = true;
      }
    }
    CHECK(saw_empty);
  }
}

TEST_CASE("synth_cloud noise scales with the bounding-box diagonal") {
  ShapeSpec clean;
  clean.kind = ShapeKind::Sphere;
  clean.points = 20000;
  clean.radius = 1.0;
  clean.seed = 77;
  ShapeSpec noisy = clean;
  noisy.noise_sigma = 0.012;

  const LabeledCloud a = synth_cloud(clean);
  const LabeledCloud b = synth_cloud(noisy);
  REQUIRE(a.size() == b.size());  // same sampling stream

  auto noise_std = [](const LabeledCloud& c0, const LabeledCloud& c1) {
    double ss = 0.0;
    for (std::size_t i = 0; i < c0.size(); ++i) {
      ss += (c1.points[i] - c0.points[i]).squaredNorm();
    }
    return std::sqrt(ss / (3.0 * double(c0.size())));
  };
  // Diagonal of a radius-1 sphere cloud is about 2*sqrt(3).
  const double diag = 2.0 * std::sqrt(3.0);
  const double measured = noise_std(a, b);
  CHECK(measured > 0.9 * 0.012 * diag);
  CHECK(measured < 1.1 * 0.012 * diag);

  // Doubling the shape scale doubles the absolute noise.
  ShapeSpec big_clean = clean;
  big_clean.radius = 2.0;
  ShapeSpec big_noisy = big_clean;
  big_noisy.noise_sigma = 0.012;
  const double measured_big = noise_std(synth_cloud(big_clean), synth_cloud(big_noisy));
  CHECK(measured_big / measured == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("evaluate") {
  ShapeSpec spec;
  spec.kind = ShapeKind::Sphere;
  spec.points = 500;
  spec.seed = 5;
  const LabeledCloud gt = synth_cloud(spec);

  SUBCASE("perfect and sign-flipped predictions score zero") {
    CHECK(evaluate(gt, gt, 0, 0).aggregate == 0.0);
    LabeledCloud flipped = gt;
    for (UnitVec3& n : flipped.normals) n = -n;
    CHECK(evaluate(flipped, gt, 0, 0).aggregate == 0.0);
    CHECK(evaluate(gt, flipped, 0, 0).aggregate == 0.0);
  }

  SUBCASE("half the points at 90 degrees") {
    LabeledCloud pred = gt;
    for (std::size_t i = 0; i < pred.size(); i += 2) {
      // Any direction orthogonal to the ground truth.
      const Vec3 n = pred.normals[i].vec();
      const Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
      pred.normals[i] = UnitVec3::normalized(n.cross(helper));
    }
    // sqrt(0.5) * 90 = 63.6396...
    CHECK(evaluate(pred, gt, 0, 0).aggregate ==
          doctest::Approx(90.0 / std::sqrt(2.0)).epsilon(1e-9));
  }

  SUBCASE("subsampling is seeded and bounded") {
    const EvalReport r1 = evaluate(gt, gt, 100, 42, true);
    CHECK(r1.per_cloud[0].points == 100);
    CHECK(r1.per_point_deg.size() == 100);
    const EvalReport r2 = evaluate(gt, gt, 5000, 42);
    CHECK(r2.per_cloud[0].points == gt.size());
  }

  SUBCASE("mismatches are rejected") {
    LabeledCloud off = gt;
    off.points[3] += Vec3(1e-6, 0, 0);
    CHECK_THROWS_AS(evaluate(off, gt, 0, 0), CoordinateMismatch);

    LabeledCloud shorter = gt;
    shorter.points.pop_back();
    shorter.normals.pop_back();
    CHECK_THROWS_AS(evaluate(shorter, gt, 0, 0), LengthMismatch);

    LabeledCloud bare = gt;
    bare.normals.clear();
    CHECK_THROWS_AS(evaluate(bare, gt, 0, 0), MissingNormals);
  }
}

TEST_CASE("suite manifest parsing") {
  TempDir dir;
  const auto path = dir.file("suite.txt");
  std::ofstream out(path);
  out << "# comment line\n";
  out << "kind=sphere points=500 noise=0.0065 density=stripes seed=3 radius=1.5\n";
  out << "kind=plane points=200 extent=4\n";
  out.close();

  const auto suite = read_suite(path);
  REQUIRE(suite.size() == 2);
  CHECK(suite[0].kind == ShapeKind::Sphere);
  CHECK(suite[0].noise_sigma == doctest::Approx(0.0065));
  CHECK(suite[0].density == DensityMode::Stripes);
  CHECK(suite[0].radius == 1.5);
  CHECK(suite[1].kind == ShapeKind::Plane);
  CHECK(suite[1].extent == 4.0);

  CHECK_THROWS_AS(parse_shape_spec("points=5"), ParseError);
  CHECK_THROWS_AS(parse_shape_spec("kind=cube"), ParseError);
  CHECK_THROWS_AS(parse_shape_spec("kind=plane points=abc"), ParseError);
  CHECK_THROWS_AS(parse_shape_spec("kind=plane nonsense"), ParseError);
}

TEST_CASE("run_benchmark on a noiseless plane") {
  const AngleFieldModel model = init_model(3);  // untrained: NeAF row is poor
  ShapeSpec spec;
  spec.kind = ShapeKind::Plane;
  spec.points = 300;
  spec.seed = 11;

  BenchmarkOptions opts;
  opts.k = 16;
  opts.baseline_k = 16;
  opts.infer.sample_count = 200;
  opts.infer.coarse_count = 4;
  opts.infer.refine_steps = 0;
  opts.eval_subsample = 0;

  const BenchmarkTable table = run_benchmark(model, {spec}, opts);
  REQUIRE(table.clouds.size() == 1);
  REQUIRE(table.methods.size() == 3);
  // PCA is exact on a noiseless plane.
  CHECK(table.rmse_deg(1, 0) < 0.1);
  CHECK(table.rmse_deg(2, 0) < 0.1);
  // Averages recompute from the cells.
  for (int m = 0; m < 3; ++m) {
    CHECK(table.averages[std::size_t(m)] == doctest::Approx(table.rmse_deg(m, 0)));
  }
  const std::string text = table.to_text();
  CHECK(text.find("NeAF") != std::string::npos);
  CHECK(text.find("average") != std::string::npos);
  const std::string csv = table.to_csv();
  CHECK(csv.find("method,") == 0);
}
