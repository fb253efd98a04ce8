// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/neural.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace neaf {

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

const ParamEntry& enc_w_entry(int layer) { return model_layout()[std::size_t(2 * layer)]; }
const ParamEntry& enc_b_entry(int layer) { return model_layout()[std::size_t(2 * layer + 1)]; }
const ParamEntry& dec_w_entry(int layer) {
  return model_layout()[std::size_t(2 * kEncoderLayers + 2 * layer)];
}
const ParamEntry& dec_b_entry(int layer) {
  return model_layout()[std::size_t(2 * kEncoderLayers + 2 * layer + 1)];
}

MatrixMap map_w(Eigen::VectorXd& flat, const ParamEntry& e) {
  return MatrixMap(flat.data() + e.offset, e.rows, e.cols);
}
ConstMatrixMap map_w(const Eigen::VectorXd& flat, const ParamEntry& e) {
  return ConstMatrixMap(flat.data() + e.offset, e.rows, e.cols);
}
VectorMap map_b(Eigen::VectorXd& flat, const ParamEntry& e) {
  return VectorMap(flat.data() + e.offset, e.rows);
}
ConstVectorMap map_b(const Eigen::VectorXd& flat, const ParamEntry& e) {
  return ConstVectorMap(flat.data() + e.offset, e.rows);
}

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& h) {
  return (h.array() > 0.0).cast<double>();
}

// Reverse pass through the decoder for one recorded evaluation.  `grads`,
// `dfeature` and `dquery` are each optional.
void decoder_backward(const AngleFieldModel& m, const DecoderTape& t,
                      double dalpha, Eigen::VectorXd* grads,
                      Eigen::VectorXd* dfeature, Vec3* dquery) {
  const double s = sigmoid(t.raw);
  const double draw = dalpha * kAlphaScale * s * (1.0 - s);

  if (grads) {
    map_w(*grads, dec_w_entry(kDecoderLayers - 1)).row(0) +=
        draw * t.hidden[kDecoderLayers - 2].transpose();
    map_b(*grads, dec_b_entry(kDecoderLayers - 1))(0) += draw;
  }
  Eigen::VectorXd dh =
      m.dec_w(kDecoderLayers - 1).row(0).transpose() * draw;
  Eigen::VectorXd dx0 = Eigen::VectorXd::Zero(kDecoderInputDim);

  for (int l = kDecoderLayers - 2; l >= 0; --l) {
    const Eigen::VectorXd da =
        dh.cwiseProduct((t.hidden[std::size_t(l)].array() > 0.0).cast<double>().matrix());
    if (l == 0) {
      if (grads) {
        map_w(*grads, dec_w_entry(0)) += da * t.input.transpose();
        map_b(*grads, dec_b_entry(0)) += da;
      }
      dx0 += m.dec_w(0).transpose() * da;
    } else if (l == kSkipLayer) {
      if (grads) {
        Eigen::VectorXd in(kDecoderWidth + kDecoderInputDim);
        in << t.hidden[std::size_t(l - 1)], t.input;
        map_w(*grads, dec_w_entry(l)) += da * in.transpose();
        map_b(*grads, dec_b_entry(l)) += da;
      }
      const Eigen::VectorXd din = m.dec_w(l).transpose() * da;
      dh = din.head(kDecoderWidth);
      dx0 += din.tail(kDecoderInputDim);
    } else {
      if (grads) {
        map_w(*grads, dec_w_entry(l)) += da * t.hidden[std::size_t(l - 1)].transpose();
        map_b(*grads, dec_b_entry(l)) += da;
      }
      dh = m.dec_w(l).transpose() * da;
    }
  }
  if (dfeature) *dfeature = dx0.head(kFeatureDim);
  if (dquery) *dquery = dx0.tail(3);
}

void encoder_backward(const AngleFieldModel& m, const EncoderTape& t,
                      const Eigen::Ref<const Eigen::VectorXd>& dfeature,
                      Eigen::VectorXd& grads) {
  const Eigen::Index k = t.coords.rows();
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(k, kFeatureDim);
  for (Eigen::Index c = 0; c < kFeatureDim; ++c) {
    dh(t.argmax[c], c) = dfeature[c];  // channel max routes to the winning row
  }
  for (int l = kEncoderLayers - 1; l >= 0; --l) {
    const Eigen::MatrixXd da = dh.cwiseProduct(relu_mask(t.hidden[std::size_t(l)]));
    if (l == 0) {
      map_w(grads, enc_w_entry(0)) += da.transpose() * t.coords;
    } else {
      map_w(grads, enc_w_entry(l)) += da.transpose() * t.hidden[std::size_t(l - 1)];
    }
    map_b(grads, enc_b_entry(l)) += da.colwise().sum().transpose();
    if (l > 0) dh = da * m.enc_w(l);
  }
}

}  // namespace

const std::vector<ParamEntry>& model_layout() {
  static const std::vector<ParamEntry> layout = [] {
    std::vector<ParamEntry> entries;
    Eigen::Index offset = 0;
    auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
      entries.push_back({std::move(name), rows, cols, offset});
      offset += rows * cols;
    };
    for (int l = 0; l < kEncoderLayers; ++l) {
      const std::string id = "enc" + std::to_string(l + 1);
      add(id + ".weight", kEncoderWidths[std::size_t(l + 1)],
          kEncoderWidths[std::size_t(l)]);
      add(id + ".bias", kEncoderWidths[std::size_t(l + 1)], 1);
    }
    for (int l = 0; l < kDecoderLayers; ++l) {
      const std::string id = "dec" + std::to_string(l + 1);
      const Eigen::Index in = l == 0 ? kDecoderInputDim
                              : l == kSkipLayer ? kDecoderWidth + kDecoderInputDim
                                                : kDecoderWidth;
      const Eigen::Index out = l == kDecoderLayers - 1 ? 1 : kDecoderWidth;
      add(id + ".weight", out, in);
      add(id + ".bias", out, 1);
    }
    return entries;
  }();
  return layout;
}

Eigen::Index model_param_count() {
  const ParamEntry& last = model_layout().back();
  return last.offset + last.rows * last.cols;
}

ConstMatrixMap AngleFieldModel::enc_w(int layer) const { return map_w(params, enc_w_entry(layer)); }
ConstVectorMap AngleFieldModel::enc_b(int layer) const { return map_b(params, enc_b_entry(layer)); }
ConstMatrixMap AngleFieldModel::dec_w(int layer) const { return map_w(params, dec_w_entry(layer)); }
ConstVectorMap AngleFieldModel::dec_b(int layer) const { return map_b(params, dec_b_entry(layer)); }
MatrixMap AngleFieldModel::enc_w(int layer) { return map_w(params, enc_w_entry(layer)); }
VectorMap AngleFieldModel::enc_b(int layer) { return map_b(params, enc_b_entry(layer)); }
MatrixMap AngleFieldModel::dec_w(int layer) { return map_w(params, dec_w_entry(layer)); }
VectorMap AngleFieldModel::dec_b(int layer) { return map_b(params, dec_b_entry(layer)); }

AngleFieldModel init_model(std::uint64_t seed) {
  AngleFieldModel model;
  std::mt19937_64 rng(seed);
  for (const ParamEntry& e : model_layout()) {
    if (e.name.ends_with(".bias")) continue;  // biases stay zero
    const double bound = std::sqrt(6.0 / double(e.rows + e.cols));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index i = 0; i < e.rows * e.cols; ++i) {
      model.params[e.offset + i] = uniform(rng);
    }
  }
  return model;
}

Eigen::VectorXd encode_patch(const AngleFieldModel& model,
                             const Eigen::Ref<const PointMatrix>& coords,
                             EncoderTape* tape) {
  const Eigen::Index k = coords.rows();
  if (k < 1) {
    throw std::invalid_argument("encode_patch: empty patch");
  }
  Eigen::MatrixXd h =
      ((coords * model.enc_w(0).transpose()).rowwise() + model.enc_b(0).transpose())
          .cwiseMax(0.0);
  if (tape) {
    tape->coords = coords;
    tape->hidden[0] = h;
  }
  for (int l = 1; l < kEncoderLayers; ++l) {
    h = ((h * model.enc_w(l).transpose()).rowwise() + model.enc_b(l).transpose())
            .cwiseMax(0.0);
    if (tape) tape->hidden[std::size_t(l)] = h;
  }

  Eigen::VectorXd feature(kFeatureDim);
  Eigen::VectorXi argmax(kFeatureDim);
  for (Eigen::Index c = 0; c < kFeatureDim; ++c) {
    double best = h(0, c);
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < k; ++r) {
      if (h(r, c) > best) {  // strict: ties keep the lowest row index
        best = h(r, c);
        arg = r;
      }
    }
    feature[c] = best;
    argmax[c] = int(arg);
  }
  if (!feature.allFinite()) {
    throw NonFinite("encode_patch: non-finite feature");
  }
  if (tape) {
    tape->argmax = argmax;
    tape->feature = feature;
  }
  return feature;
}

double decode_feature(const AngleFieldModel& model,
                      const Eigen::Ref<const Eigen::VectorXd>& feature,
                      const Vec3& query, DecoderTape* tape) {
  Eigen::VectorXd x0(kDecoderInputDim);
  x0 << feature, query;

  Eigen::VectorXd h = ((model.dec_w(0) * x0) + model.dec_b(0)).cwiseMax(0.0);
  if (tape) tape->hidden[0] = h;
  for (int l = 1; l < kDecoderLayers - 1; ++l) {
    if (l == kSkipLayer) {
      Eigen::VectorXd in(kDecoderWidth + kDecoderInputDim);
      in << h, x0;
      h = ((model.dec_w(l) * in) + model.dec_b(l)).cwiseMax(0.0);
    } else {
      h = ((model.dec_w(l) * h) + model.dec_b(l)).cwiseMax(0.0);
    }
    if (tape) tape->hidden[std::size_t(l)] = h;
  }
  const double raw = (model.dec_w(kDecoderLayers - 1) * h)(0) +
                     model.dec_b(kDecoderLayers - 1)(0);
  if (!std::isfinite(raw)) {
    throw NonFinite("decode_feature: non-finite output");
  }
  const double alpha = kAlphaScale * sigmoid(raw);
  if (tape) {
    tape->input = x0;
    tape->raw = raw;
    tape->alpha = alpha;
  }
  return alpha;
}

void decode_batch(const AngleFieldModel& model,
                  const Eigen::Ref<const Eigen::VectorXd>& feature,
                  const Eigen::Ref<const Eigen::Matrix3Xd>& queries,
                  Eigen::Ref<Eigen::VectorXd> alphas) {
  const Eigen::Index total = queries.cols();
  if (alphas.size() != total) {
    throw LengthMismatch("decode_batch: output size mismatch");
  }
  constexpr Eigen::Index kChunk = 2048;
  for (Eigen::Index start = 0; start < total; start += kChunk) {
    const Eigen::Index n = std::min(kChunk, total - start);
    Eigen::MatrixXd x0(kDecoderInputDim, n);
    x0.topRows(kFeatureDim) = feature.replicate(1, n);
    x0.bottomRows(3) = queries.middleCols(start, n);

    Eigen::MatrixXd h =
        ((model.dec_w(0) * x0).colwise() + model.dec_b(0)).cwiseMax(0.0);
    for (int l = 1; l < kDecoderLayers - 1; ++l) {
      if (l == kSkipLayer) {
        Eigen::MatrixXd in(kDecoderWidth + kDecoderInputDim, n);
        in.topRows(kDecoderWidth) = h;
        in.bottomRows(kDecoderInputDim) = x0;
        h = ((model.dec_w(l) * in).colwise() + model.dec_b(l)).cwiseMax(0.0);
      } else {
        h = ((model.dec_w(l) * h).colwise() + model.dec_b(l)).cwiseMax(0.0);
      }
    }
    const Eigen::RowVectorXd raw =
        (model.dec_w(kDecoderLayers - 1) * h).row(0).array() +
        model.dec_b(kDecoderLayers - 1)(0);
    for (Eigen::Index j = 0; j < n; ++j) {
      alphas[start + j] = kAlphaScale * sigmoid(raw[j]);
    }
  }
  if (!alphas.allFinite()) {
    throw NonFinite("decode_batch: non-finite output");
  }
}

GradTape forward(const AngleFieldModel& model, const Patch& patch,
                 const UnitVec3& query) {
  GradTape tape;
  encode_patch(model, patch.coords, &tape.encoder);
  tape.alpha = decode_feature(model, tape.encoder.feature, query.vec(), &tape.decoder);
  tape.param_grads = Eigen::VectorXd::Zero(model_param_count());
  return tape;
}

double loss_l1(double alpha_pred, double alpha_gt) {
  return std::abs(alpha_pred - alpha_gt);
}

void record_l1_loss(GradTape& tape, double alpha_gt) {
  const double diff = tape.alpha - alpha_gt;
  tape.upstream = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
}

const Eigen::VectorXd& backward_params(const AngleFieldModel& model,
                                       GradTape& tape) {
  tape.param_grads.setZero(model_param_count());
  Eigen::VectorXd dfeature(kFeatureDim);
  decoder_backward(model, tape.decoder, tape.upstream, &tape.param_grads,
                   &dfeature, nullptr);
  encoder_backward(model, tape.encoder, dfeature, tape.param_grads);
  return tape.param_grads;
}

Vec3 backward_query(const AngleFieldModel& model, GradTape& tape) {
  Vec3 dq;
  decoder_backward(model, tape.decoder, 1.0, nullptr, nullptr, &dq);
  tape.query_grad = dq;
  return dq;
}

Vec3 decoder_query_grad(const AngleFieldModel& model, const DecoderTape& tape) {
  Vec3 dq;
  decoder_backward(model, tape, 1.0, nullptr, nullptr, &dq);
  return dq;
}

double batch_loss_and_grads(const AngleFieldModel& model,
                            const EncoderTape& encoder,
                            const Eigen::Ref<const Eigen::Matrix3Xd>& queries,
                            const Eigen::Ref<const Eigen::VectorXd>& alpha_gt,
                            Eigen::VectorXd& grads) {
  const Eigen::Index B = queries.cols();
  if (alpha_gt.size() != B || B < 1) {
    throw LengthMismatch("batch_loss_and_grads: query/target size mismatch");
  }
  if (grads.size() != model_param_count()) {
    throw LengthMismatch("batch_loss_and_grads: bad gradient buffer size");
  }

  Eigen::MatrixXd x0(kDecoderInputDim, B);
  x0.topRows(kFeatureDim) = encoder.feature.replicate(1, B);
  x0.bottomRows(3) = queries;

  std::array<Eigen::MatrixXd, kDecoderLayers - 1> h;
  Eigen::MatrixXd skip_in;  // input of the skip layer, kept for the backward pass
  h[0] = ((model.dec_w(0) * x0).colwise() + model.dec_b(0)).cwiseMax(0.0);
  for (int l = 1; l < kDecoderLayers - 1; ++l) {
    if (l == kSkipLayer) {
      skip_in.resize(kDecoderWidth + kDecoderInputDim, B);
      skip_in.topRows(kDecoderWidth) = h[std::size_t(l - 1)];
      skip_in.bottomRows(kDecoderInputDim) = x0;
      h[std::size_t(l)] =
          ((model.dec_w(l) * skip_in).colwise() + model.dec_b(l)).cwiseMax(0.0);
    } else {
      h[std::size_t(l)] =
          ((model.dec_w(l) * h[std::size_t(l - 1)]).colwise() + model.dec_b(l))
              .cwiseMax(0.0);
    }
  }
  const Eigen::RowVectorXd raw =
      (model.dec_w(kDecoderLayers - 1) * h[kDecoderLayers - 2]).row(0).array() +
      model.dec_b(kDecoderLayers - 1)(0);

  double loss = 0.0;
  Eigen::RowVectorXd draw(B);  // d(mean loss)/d(raw)
  for (Eigen::Index j = 0; j < B; ++j) {
    const double s = sigmoid(raw[j]);
    const double alpha = kAlphaScale * s;
    const double diff = alpha - alpha_gt[j];
    loss += std::abs(diff);
    const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    draw[j] = sgn / double(B) * kAlphaScale * s * (1.0 - s);
  }
  loss /= double(B);
  if (!std::isfinite(loss)) {
    throw NonFinite("batch_loss_and_grads: non-finite loss");
  }

  map_w(grads, dec_w_entry(kDecoderLayers - 1)) +=
      draw * h[kDecoderLayers - 2].transpose();
  map_b(grads, dec_b_entry(kDecoderLayers - 1))(0) += draw.sum();
  Eigen::MatrixXd dh = model.dec_w(kDecoderLayers - 1).transpose() * draw;
  Eigen::MatrixXd dx0 = Eigen::MatrixXd::Zero(kDecoderInputDim, B);

  for (int l = kDecoderLayers - 2; l >= 0; --l) {
    const Eigen::MatrixXd da = dh.cwiseProduct(relu_mask(h[std::size_t(l)]));
    if (l == 0) {
      map_w(grads, dec_w_entry(0)) += da * x0.transpose();
      map_b(grads, dec_b_entry(0)) += da.rowwise().sum();
      dx0 += model.dec_w(0).transpose() * da;
    } else if (l == kSkipLayer) {
      map_w(grads, dec_w_entry(l)) += da * skip_in.transpose();
      map_b(grads, dec_b_entry(l)) += da.rowwise().sum();
      const Eigen::MatrixXd din = model.dec_w(l).transpose() * da;
      dh = din.topRows(kDecoderWidth);
      dx0 += din.bottomRows(kDecoderInputDim);
    } else {
      map_w(grads, dec_w_entry(l)) += da * h[std::size_t(l - 1)].transpose();
      map_b(grads, dec_b_entry(l)) += da.rowwise().sum();
      dh = model.dec_w(l).transpose() * da;
    }
  }
  const Eigen::VectorXd dfeature = dx0.topRows(kFeatureDim).rowwise().sum();
  encoder_backward(model, encoder, dfeature, grads);
  return loss;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    throw LengthMismatch("adam_step: shape mismatch");
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
}

void adam_step(AngleFieldModel& model, const Eigen::VectorXd& grads,
               AdamState& state, double lr) {
  adam_step(Eigen::Ref<Eigen::VectorXd>(model.params), grads, state, lr);
}

}  // namespace neaf
