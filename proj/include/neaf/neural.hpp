// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "neaf/geometry.hpp"

namespace neaf {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrixXd>;
using ConstMatrixMap = Eigen::Map<const RowMatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Network architecture: a shared per-point encoder MLP (3 -> 64 -> 64 -> 256)
// with channel-wise max pooling, then an 8-layer decoder of width 256 whose
// input [feature; query] is re-concatenated to the hidden state before layer
// 5.  The scalar head is squashed to (0, pi/2) by a scaled sigmoid.
inline constexpr int kEncoderLayers = 3;
inline constexpr int kDecoderLayers = 8;
inline constexpr int kSkipLayer = 4;  // 0-based decoder layer fed [hidden; input]
inline constexpr Eigen::Index kFeatureDim = 256;
inline constexpr Eigen::Index kDecoderWidth = 256;
inline constexpr Eigen::Index kDecoderInputDim = kFeatureDim + 3;
inline constexpr std::array<Eigen::Index, 4> kEncoderWidths = {3, 64, 64, 256};
inline constexpr double kAlphaScale = std::numbers::pi / 2.0;

/// One named tensor inside the flat parameter vector (checkpoint order).
struct ParamEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;
};

const std::vector<ParamEntry>& model_layout();
Eigen::Index model_param_count();

/// All learnable parameters of the angle-field network, stored as one flat
/// vector so the optimizer, gradient clipping and checkpoints can treat the
/// model as a single dense array.  Weight matrices are row-major views into
/// the flat storage.
struct AngleFieldModel {
  Eigen::VectorXd params;

  AngleFieldModel() : params(Eigen::VectorXd::Zero(model_param_count())) {}

  ConstMatrixMap enc_w(int layer) const;
  ConstVectorMap enc_b(int layer) const;
  ConstMatrixMap dec_w(int layer) const;
  ConstVectorMap dec_b(int layer) const;
  MatrixMap enc_w(int layer);
  VectorMap enc_b(int layer);
  MatrixMap dec_w(int layer);
  VectorMap dec_b(int layer);
};

/// Uniform Glorot weights, zero biases; deterministic per seed.
AngleFieldModel init_model(std::uint64_t seed);

/// Activations recorded while encoding one patch.
struct EncoderTape {
  Eigen::MatrixXd coords;                                // k x 3
  std::array<Eigen::MatrixXd, kEncoderLayers> hidden;    // k x width, post-ReLU
  Eigen::VectorXi argmax;                                // winning row per channel
  Eigen::VectorXd feature;                               // pooled feature
};

/// Activations recorded while decoding one query vector.
struct DecoderTape {
  Eigen::VectorXd input;                                     // [feature; query]
  std::array<Eigen::VectorXd, kDecoderLayers - 1> hidden;    // post-ReLU
  double raw = 0.0;
  double alpha = 0.0;
};

/// One recorded forward evaluation plus gradient buffers.  The buffers are
/// zero-initialized per evaluation and filled by the backward passes.
struct GradTape {
  EncoderTape encoder;
  DecoderTape decoder;
  double alpha = 0.0;
  double upstream = 1.0;  // d(objective)/d(alpha); set by record_l1_loss
  Eigen::VectorXd param_grads;
  Vec3 query_grad = Vec3::Zero();
};

/// Encodes patch coordinates into the pooled feature.  Ties in the channel
/// max go to the lowest row index.  Throws NonFinite on overflow.
Eigen::VectorXd encode_patch(const AngleFieldModel& model,
                             const Eigen::Ref<const PointMatrix>& coords,
                             EncoderTape* tape = nullptr);

/// Decodes one query against a precomputed feature.  The query need not be
/// unit length (gradients are taken w.r.t. its raw components).
double decode_feature(const AngleFieldModel& model,
                      const Eigen::Ref<const Eigen::VectorXd>& feature,
                      const Vec3& query, DecoderTape* tape = nullptr);

/// Batched decode of many queries (columns) against one feature.
void decode_batch(const AngleFieldModel& model,
                  const Eigen::Ref<const Eigen::VectorXd>& feature,
                  const Eigen::Ref<const Eigen::Matrix3Xd>& queries,
                  Eigen::Ref<Eigen::VectorXd> alphas);

/// Full forward evaluation of the angle field on a patch and query.
/// The returned tape holds alpha and everything backward passes need.
GradTape forward(const AngleFieldModel& model, const Patch& patch,
                 const UnitVec3& query);

double loss_l1(double alpha_pred, double alpha_gt);

/// Records d(loss)/d(alpha) for an L1 fit to alpha_gt on the tape
/// (subgradient 0 at the kink).
void record_l1_loss(GradTape& tape, double alpha_gt);

/// Reverse pass: gradients of the recorded scalar (the loss if recorded,
/// otherwise alpha) w.r.t. every parameter, in flat layout order.
const Eigen::VectorXd& backward_params(const AngleFieldModel& model,
                                       GradTape& tape);

/// Gradient of alpha w.r.t. the three query components.
Vec3 backward_query(const AngleFieldModel& model, GradTape& tape);

/// Gradient of alpha w.r.t. the query for an existing decoder tape, without
/// touching parameter gradients.  Used by inference-time refinement.
Vec3 decoder_query_grad(const AngleFieldModel& model, const DecoderTape& tape);

/// Training micro-batch against one encoded patch: batched decoder forward
/// and backward over `queries` (columns), L1-fit to `alpha_gt`.  Accumulates
/// parameter gradients of the mean loss into `grads` and returns the loss.
double batch_loss_and_grads(const AngleFieldModel& model,
                            const EncoderTape& encoder,
                            const Eigen::Ref<const Eigen::Matrix3Xd>& queries,
                            const Eigen::Ref<const Eigen::VectorXd>& alpha_gt,
                            Eigen::VectorXd& grads);

/// Adam moment accumulators over a flat parameter vector.
struct AdamState {
  Eigen::VectorXd m, v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads, AdamState& state,
               double lr);

void adam_step(AngleFieldModel& model, const Eigen::VectorXd& grads,
               AdamState& state, double lr);

// Checkpoints: ASCII header (magic "NEAF1", one "name rows cols" line per
// tensor, blank line), then little-endian 64-bit floats, row-major, in
// header order.
void save_model(const AngleFieldModel& model, const std::filesystem::path& path);
AngleFieldModel load_model(const std::filesystem::path& path);

}  // namespace neaf
