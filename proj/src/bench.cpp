// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "neaf/xyz_io.hpp"

namespace neaf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;
  double param = 0.0;  // first surface parameter, normalized to [0, 1)
};

SurfaceSample sample_surface(const ShapeSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SurfaceSample s;
  switch (spec.kind) {
    case ShapeKind::Plane: {
      const double u = uni(rng), v = uni(rng);
      s.point = Vec3((u - 0.5) * spec.extent, (v - 0.5) * spec.extent, 0.0);
      s.normal = Vec3(0, 0, 1);
      s.param = u;
      return s;
    }
    case ShapeKind::Sphere: {
      Vec3 d;
      do {
        d = Vec3(gauss(rng), gauss(rng), gauss(rng));
      } while (d.norm() < 1e-12);
      d.normalize();
      s.point = spec.radius * d;
      s.normal = d;
      s.param = (std::atan2(d.y(), d.x()) + std::numbers::pi) / kTwoPi;
      return s;
    }
    case ShapeKind::Cylinder: {
      const double t = uni(rng);
      const double theta = t * kTwoPi;
      const double z = (uni(rng) - 0.5) * spec.height;
      s.normal = Vec3(std::cos(theta), std::sin(theta), 0.0);
      s.point = Vec3(spec.radius * s.normal.x(), spec.radius * s.normal.y(), z);
      s.param = t;
      return s;
    }
    case ShapeKind::Torus: {
      // Rejection on the minor angle keeps the area measure uniform.
      const double R = spec.major_radius, r = spec.minor_radius;
      double u = 0.0, v = 0.0;
      while (true) {
        u = uni(rng) * kTwoPi;
        v = uni(rng) * kTwoPi;
        const double accept = (R + r * std::cos(v)) / (R + r);
        if (uni(rng) <= accept) break;
      }
      const Vec3 tube(std::cos(v) * std::cos(u), std::cos(v) * std::sin(u),
                      std::sin(v));
      s.point = Vec3((R + r * std::cos(v)) * std::cos(u),
                     (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
      s.normal = tube;
      s.param = u / kTwoPi;
      return s;
    }
  }
  throw std::invalid_argument("sample_surface: unknown shape kind");
}

bool density_keep(DensityMode mode, double param, std::mt19937_64& rng) {
  switch (mode) {
    case DensityMode::Uniform:
      return true;
    case DensityMode::Stripes:
      // Alternating bands of width 1/10 of the parameter range.
      return (int(std::floor(param * 10.0)) % 2) == 0;
    case DensityMode::Gradient: {
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      return uni(rng) < param;
    }
  }
  return true;
}

std::string density_name(DensityMode mode) {
  switch (mode) {
    case DensityMode::Uniform: return "uniform";
    case DensityMode::Stripes: return "stripes";
    case DensityMode::Gradient: return "gradient";
  }
  return "?";
}

std::string kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Plane: return "plane";
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Torus: return "torus";
  }
  return "?";
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::string ShapeSpec::label() const {
  std::ostringstream os;
  os << kind_name(kind);
  if (density != DensityMode::Uniform) os << '-' << density_name(density);
  if (noise_sigma > 0.0) os << "-n" << noise_sigma;
  os << "-s" << seed;
  return os.str();
}

LabeledCloud synth_cloud(const ShapeSpec& spec) {
  if (spec.points < 1 || spec.noise_sigma < 0.0 || spec.extent <= 0.0 ||
      spec.radius <= 0.0 || spec.height <= 0.0 || spec.major_radius <= 0.0 ||
      spec.minor_radius <= 0.0 || spec.minor_radius >= spec.major_radius) {
    throw std::invalid_argument("synth_cloud: invalid shape spec");
  }
  std::mt19937_64 rng(spec.seed);
  LabeledCloud cloud;
  cloud.points.reserve(std::size_t(spec.points));
  for (int i = 0; i < spec.points; ++i) {
    const SurfaceSample s = sample_surface(spec, rng);
    if (!density_keep(spec.density, s.param, rng)) continue;
    cloud.points.push_back(s.point);
    cloud.normals.push_back(UnitVec3::normalized(s.normal));
  }
  if (cloud.points.empty()) {
    throw EmptyResult("synth_cloud: density rejection removed all points");
  }
  if (spec.noise_sigma > 0.0) {
    Vec3 lo = cloud.points[0], hi = cloud.points[0];
    for (const Vec3& p : cloud.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double sigma = spec.noise_sigma * (hi - lo).norm();
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Vec3& p : cloud.points) {
      p += Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
  }
  return cloud;
}

EvalReport evaluate(const LabeledCloud& pred, const LabeledCloud& gt,
                    int subsample, std::uint64_t seed, bool keep_per_point) {
  if (pred.points.size() != gt.points.size()) {
    throw LengthMismatch("evaluate: clouds have different point counts");
  }
  if (!pred.has_normals() || !gt.has_normals()) {
    throw MissingNormals("evaluate: both clouds need normals");
  }
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    if (((pred.points[i] - gt.points[i]).array().abs() > 1e-9).any()) {
      throw CoordinateMismatch("evaluate: coordinates differ at point " +
                               std::to_string(i));
    }
  }
  std::vector<std::size_t> picks(pred.points.size());
  std::iota(picks.begin(), picks.end(), std::size_t(0));
  if (subsample > 0 && std::size_t(subsample) < picks.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(std::size_t(subsample));
    std::sort(picks.begin(), picks.end());
  }
  std::vector<UnitVec3> p, g;
  p.reserve(picks.size());
  g.reserve(picks.size());
  for (std::size_t i : picks) {
    p.push_back(pred.normals[i]);
    g.push_back(gt.normals[i]);
  }
  EvalReport report;
  report.per_cloud.push_back({"cloud", picks.size(), unoriented_rmse(p, g)});
  report.aggregate = report.per_cloud[0].rmse_deg;
  if (keep_per_point) {
    report.per_point_deg.reserve(picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) {
      report.per_point_deg.push_back(unoriented_angle_deg(p[i], g[i]));
    }
  }
  return report;
}

EvalReport evaluate(const std::filesystem::path& pred_file,
                    const std::filesystem::path& gt_file, int subsample,
                    std::uint64_t seed) {
  EvalReport report = evaluate(read_xyz(pred_file), read_xyz(gt_file),
                               subsample, seed, false);
  report.per_cloud[0].name = pred_file.filename().string();
  return report;
}

std::string BenchmarkTable::to_text() const {
  std::size_t method_width = 6;
  for (const std::string& m : methods) method_width = std::max(method_width, m.size());
  std::vector<std::size_t> widths;
  for (const std::string& c : clouds) widths.push_back(std::max<std::size_t>(c.size(), 9));
  std::ostringstream os;
  os << std::left << std::setw(int(method_width) + 2) << "method";
  for (std::size_t j = 0; j < clouds.size(); ++j) {
    os << std::right << std::setw(int(widths[j]) + 2) << clouds[j];
  }
  os << std::right << std::setw(11) << "average" << '\n';
  for (std::size_t i = 0; i < methods.size(); ++i) {
    os << std::left << std::setw(int(method_width) + 2) << methods[i];
    for (std::size_t j = 0; j < clouds.size(); ++j) {
      os << std::right << std::setw(int(widths[j]) + 2)
         << format_cell(rmse_deg(Eigen::Index(i), Eigen::Index(j)));
    }
    os << std::right << std::setw(11) << format_cell(averages[i]) << '\n';
  }
  return os.str();
}

std::string BenchmarkTable::to_csv() const {
  std::ostringstream os;
  os << "method";
  for (const std::string& c : clouds) os << ',' << c;
  os << ",average\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    os << methods[i];
    for (std::size_t j = 0; j < clouds.size(); ++j) {
      os << ',' << format_cell(rmse_deg(Eigen::Index(i), Eigen::Index(j)));
    }
    os << ',' << format_cell(averages[i]) << '\n';
  }
  return os.str();
}

BenchmarkTable run_benchmark(const AngleFieldModel& model,
                             const std::vector<ShapeSpec>& suite,
                             const BenchmarkOptions& opts) {
  if (suite.empty()) {
    throw std::invalid_argument("run_benchmark: empty suite");
  }
  BenchmarkTable table;
  table.methods = {"NeAF", "PCA", "Jet2"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  table.rmse_deg = Eigen::MatrixXd::Constant(3, Eigen::Index(suite.size()), nan);

  for (std::size_t c = 0; c < suite.size(); ++c) {
    const ShapeSpec& spec = suite[c];
    table.clouds.push_back(spec.label());
    LabeledCloud cloud;
    try {
      cloud = synth_cloud(spec);
    } catch (const std::exception& e) {
      std::cerr << "warning: generating " << spec.label() << " failed: "
                << e.what() << "\n";
      continue;
    }

    // Learned estimator.
    try {
      LabeledCloud pred = cloud;
      pred.normals = estimate_cloud_normals(model, cloud, opts.k, opts.infer,
                                            opts.threads);
      table.rmse_deg(0, Eigen::Index(c)) =
          evaluate(pred, cloud, opts.eval_subsample, opts.eval_seed).aggregate;
    } catch (const std::exception& e) {
      std::cerr << "warning: NeAF on " << spec.label() << " failed: "
                << e.what() << "\n";
    }

    // Classical baselines share the patch extraction.
    for (int b = 0; b < 2; ++b) {
      const BaselineMethod method{b == 0 ? BaselineKind::Pca : BaselineKind::Jet2,
                                  opts.baseline_k};
      try {
        const KdIndex index = build_index(cloud);
        LabeledCloud pred = cloud;
        pred.normals.clear();
        for (std::size_t i = 0; i < cloud.points.size(); ++i) {
          pred.normals.push_back(baseline_normal(
              method, extract_patch(index, cloud, Eigen::Index(i), method.k)));
        }
        table.rmse_deg(1 + b, Eigen::Index(c)) =
            evaluate(pred, cloud, opts.eval_subsample, opts.eval_seed).aggregate;
      } catch (const std::exception& e) {
        std::cerr << "warning: " << (b == 0 ? "PCA" : "Jet2") << " on "
                  << spec.label() << " failed: " << e.what() << "\n";
      }
    }
  }

  table.averages.assign(table.methods.size(), nan);
  for (Eigen::Index i = 0; i < 3; ++i) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index j = 0; j < table.rmse_deg.cols(); ++j) {
      if (!std::isnan(table.rmse_deg(i, j))) {
        sum += table.rmse_deg(i, j);
        ++n;
      }
    }
    if (n > 0) table.averages[std::size_t(i)] = sum / double(n);
    if (n < table.rmse_deg.cols()) {
      std::cerr << "warning: average for " << table.methods[std::size_t(i)]
                << " excludes " << (table.rmse_deg.cols() - n)
                << " failed cloud(s)\n";
    }
  }
  return table;
}

ShapeSpec parse_shape_spec(const std::string& line) {
  ShapeSpec spec;
  std::istringstream ls(line);
  std::string token;
  bool have_kind = false;
  while (ls >> token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos) {
      throw ParseError("suite: expected key=value, got '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "kind") {
        if (value == "plane") spec.kind = ShapeKind::Plane;
        else if (value == "sphere") spec.kind = ShapeKind::Sphere;
        else if (value == "cylinder") spec.kind = ShapeKind::Cylinder;
        else if (value == "torus") spec.kind = ShapeKind::Torus;
        else throw ParseError("suite: unknown kind '" + value + "'");
        have_kind = true;
      } else if (key == "points") spec.points = std::stoi(value);
      else if (key == "noise") spec.noise_sigma = std::stod(value);
      else if (key == "density") {
        if (value == "uniform") spec.density = DensityMode::Uniform;
        else if (value == "stripes") spec.density = DensityMode::Stripes;
        else if (value == "gradient") spec.density = DensityMode::Gradient;
        else throw ParseError("suite: unknown density '" + value + "'");
      } else if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "extent") spec.extent = std::stod(value);
      else if (key == "radius") spec.radius = std::stod(value);
      else if (key == "height") spec.height = std::stod(value);
      else if (key == "major") spec.major_radius = std::stod(value);
      else if (key == "minor") spec.minor_radius = std::stod(value);
      else throw ParseError("suite: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("suite: bad value for '" + key + "': " + value);
    } catch (const std::out_of_range&) {
      throw ParseError("suite: value out of range for '" + key + "': " + value);
    }
  }
  if (!have_kind) {
    throw ParseError("suite: line is missing kind=");
  }
  return spec;
}

std::vector<ShapeSpec> read_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::vector<ShapeSpec> suite;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    suite.push_back(parse_shape_spec(line));
  }
  if (suite.empty()) {
    throw ParseError(path.string() + ": no shape specs");
  }
  return suite;
}

}  // namespace neaf
