// mwer/model.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mwer/model.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mwer/common.h"
#include "mwer/rng.h"

namespace mwer {

namespace {

using nlohmann::json;

// out += M v (M is (rows, cols), v has cols entries, out has rows entries).
void MatVecAccum(const Matrix &m, std::span<const double> v,
                 std::span<double> out) {
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    auto row = m.Row(r);
    for (int c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

// out += M^T v (v has rows entries, out has cols entries).
void MatTVecAccum(const Matrix &m, std::span<const double> v,
                  std::span<double> out) {
  for (int r = 0; r < m.rows(); ++r) {
    auto row = m.Row(r);
    for (int c = 0; c < m.cols(); ++c) out[c] += row[c] * v[r];
  }
}

// grad += a (outer) b, where grad is (|a|, |b|).
void OuterAccum(std::span<const double> a, std::span<const double> b,
                Matrix *grad) {
  for (int r = 0; r < grad->rows(); ++r) {
    auto row = grad->Row(r);
    for (int c = 0; c < grad->cols(); ++c) row[c] += a[r] * b[c];
  }
}

void AddAccum(std::span<const double> v, std::span<double> out) {
  for (size_t i = 0; i < v.size(); ++i) out[i] += v[i];
}

void CheckDims(const ModelDims &d) {
  if (d.feat_dim < 1 || d.vocab_size < 2 || d.enc_hidden < 1 ||
      d.embed_dim < 1 || d.pred_hidden < 1 || d.joint_dim < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (d.blank_id < 0 || d.blank_id >= d.vocab_size) {
    throw std::invalid_argument("blank_id outside vocabulary");
  }
  if (d.eos_id >= d.vocab_size || (d.eos_id >= 0 && d.eos_id == d.blank_id)) {
    throw std::invalid_argument("eos_id must differ from blank_id and fit "
                                "the vocabulary");
  }
}

void CheckInputs(const ModelParams &params, const Matrix &features,
                 std::span<const int> labels) {
  if (features.rows() < 1) {
    throw std::invalid_argument("feature matrix has no frames");
  }
  if (features.cols() != params.dims.feat_dim) {
    throw std::invalid_argument(
        "feature width " + std::to_string(features.cols()) +
        " does not match model feat_dim " +
        std::to_string(params.dims.feat_dim));
  }
  for (int y : labels) {
    if (y == params.dims.blank_id || y < 0 || y >= params.dims.vocab_size) {
      throw std::invalid_argument("label id " + std::to_string(y) +
                                  " invalid for this model");
    }
  }
}

// tanh recurrent step shared by the batch forward pass and the scorer:
// next = tanh(w_in * input + w_rec * prev + bias). An empty prev stands for
// the zero initial state.
std::vector<double> RecurrentStep(const Matrix &w_in, const Matrix &w_rec,
                                  const Matrix &bias,
                                  std::span<const double> input,
                                  std::span<const double> prev) {
  std::vector<double> state(bias.Row(0).begin(), bias.Row(0).end());
  MatVecAccum(w_in, input, state);
  if (!prev.empty()) MatVecAccum(w_rec, prev, state);
  for (double &v : state) v = std::tanh(v);
  return state;
}

std::vector<double> JointLogits(const ModelParams &p,
                                std::span<const double> enc,
                                std::span<const double> pred,
                                std::vector<double> *joint_tanh_out) {
  std::vector<double> hidden(p.joint_bias.Row(0).begin(),
                             p.joint_bias.Row(0).end());
  MatVecAccum(p.joint_w_enc, enc, hidden);
  MatVecAccum(p.joint_w_pred, pred, hidden);
  for (double &v : hidden) v = std::tanh(v);

  std::vector<double> logits(p.out_bias.Row(0).begin(),
                             p.out_bias.Row(0).end());
  MatVecAccum(p.out_w, hidden, logits);
  if (joint_tanh_out) *joint_tanh_out = std::move(hidden);
  return logits;
}

Matrix EncoderStates(const ModelParams &p, const Matrix &features) {
  Matrix states(features.rows(), p.dims.enc_hidden);
  std::vector<double> prev;
  for (int t = 0; t < features.rows(); ++t) {
    std::vector<double> h =
        RecurrentStep(p.enc_w_in, p.enc_w_rec, p.enc_bias, features.Row(t),
                      prev);
    std::copy(h.begin(), h.end(), states.Row(t).begin());
    prev = std::move(h);
  }
  return states;
}

// Predictor states for [start, y_1, ..., y_U]; row u conditions lattice
// column u.
Matrix PredictorStates(const ModelParams &p, std::span<const int> labels) {
  const int U = static_cast<int>(labels.size());
  Matrix states(U + 1, p.dims.pred_hidden);
  std::vector<double> prev;
  for (int u = 0; u <= U; ++u) {
    const int input_id = (u == 0) ? p.dims.blank_id : labels[u - 1];
    std::vector<double> g = RecurrentStep(p.pred_w_in, p.pred_w_rec,
                                          p.pred_bias,
                                          p.embedding.Row(input_id), prev);
    std::copy(g.begin(), g.end(), states.Row(u).begin());
    prev = std::move(g);
  }
  return states;
}

}  // namespace

bool operator==(const ModelDims &a, const ModelDims &b) {
  return a.feat_dim == b.feat_dim && a.vocab_size == b.vocab_size &&
         a.blank_id == b.blank_id && a.eos_id == b.eos_id &&
         a.enc_hidden == b.enc_hidden && a.embed_dim == b.embed_dim &&
         a.pred_hidden == b.pred_hidden && a.joint_dim == b.joint_dim;
}

std::vector<std::pair<std::string, Matrix *>> ModelParams::Tensors() {
  return {
      {"enc_w_in", &enc_w_in},     {"enc_w_rec", &enc_w_rec},
      {"enc_bias", &enc_bias},     {"embedding", &embedding},
      {"pred_w_in", &pred_w_in},   {"pred_w_rec", &pred_w_rec},
      {"pred_bias", &pred_bias},   {"joint_w_enc", &joint_w_enc},
      {"joint_w_pred", &joint_w_pred}, {"joint_bias", &joint_bias},
      {"out_w", &out_w},           {"out_bias", &out_bias},
  };
}

std::vector<std::pair<std::string, const Matrix *>> ModelParams::Tensors()
    const {
  std::vector<std::pair<std::string, const Matrix *>> out;
  for (auto &[name, tensor] : const_cast<ModelParams *>(this)->Tensors()) {
    out.emplace_back(name, tensor);
  }
  return out;
}

ModelParams ZeroParams(const ModelDims &dims) {
  CheckDims(dims);
  ModelParams p;
  p.dims = dims;
  p.enc_w_in = Matrix(dims.enc_hidden, dims.feat_dim);
  p.enc_w_rec = Matrix(dims.enc_hidden, dims.enc_hidden);
  p.enc_bias = Matrix(1, dims.enc_hidden);
  p.embedding = Matrix(dims.vocab_size, dims.embed_dim);
  p.pred_w_in = Matrix(dims.pred_hidden, dims.embed_dim);
  p.pred_w_rec = Matrix(dims.pred_hidden, dims.pred_hidden);
  p.pred_bias = Matrix(1, dims.pred_hidden);
  p.joint_w_enc = Matrix(dims.joint_dim, dims.enc_hidden);
  p.joint_w_pred = Matrix(dims.joint_dim, dims.pred_hidden);
  p.joint_bias = Matrix(1, dims.joint_dim);
  p.out_w = Matrix(dims.vocab_size, dims.joint_dim);
  p.out_bias = Matrix(1, dims.vocab_size);
  return p;
}

ModelParams InitParams(uint64_t seed, const ModelDims &dims) {
  ModelParams p = ZeroParams(dims);
  Rng rng(seed);
  for (auto &[name, tensor] : p.Tensors()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(tensor->cols()));
    for (double &v : tensor->data()) v = rng.Uniform(-bound, bound);
  }
  return p;
}

LogitLattice ForwardLattice(const ModelParams &params, const Matrix &features,
                            std::span<const int> labels) {
  CheckInputs(params, features, labels);
  const Matrix enc = EncoderStates(params, features);
  const Matrix pred = PredictorStates(params, labels);
  const int T = enc.rows();
  const int U = pred.rows() - 1;
  Tensor3 logits(T, U + 1, params.dims.vocab_size);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      std::vector<double> z =
          JointLogits(params, enc.Row(t), pred.Row(u), nullptr);
      std::copy(z.begin(), z.end(), logits.Row(t, u).begin());
    }
  }
  return LogitLattice(std::move(logits), params.dims.blank_id);
}

ModelParams BackwardLattice(const ModelParams &params, const Matrix &features,
                            std::span<const int> labels,
                            const Tensor3 &grad_logits) {
  CheckInputs(params, features, labels);
  const int T = features.rows();
  const int U = static_cast<int>(labels.size());
  if (grad_logits.dim0() != T || grad_logits.dim1() != U + 1 ||
      grad_logits.dim2() != params.dims.vocab_size) {
    throw std::invalid_argument("grad_logits shape does not match lattice");
  }

  const Matrix enc = EncoderStates(params, features);
  const Matrix pred = PredictorStates(params, labels);
  ModelParams grads = ZeroParams(params.dims);
  Matrix d_enc(T, params.dims.enc_hidden);
  Matrix d_pred(U + 1, params.dims.pred_hidden);

  // Joint and output projection.
  std::vector<double> d_hidden(params.dims.joint_dim);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      std::vector<double> joint_tanh;
      JointLogits(params, enc.Row(t), pred.Row(u), &joint_tanh);
      auto dz = grad_logits.Row(t, u);

      OuterAccum(dz, joint_tanh, &grads.out_w);
      AddAccum(dz, grads.out_bias.Row(0));

      std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
      MatTVecAccum(params.out_w, dz, d_hidden);
      for (int j = 0; j < params.dims.joint_dim; ++j) {
        d_hidden[j] *= 1.0 - joint_tanh[j] * joint_tanh[j];
      }

      OuterAccum(d_hidden, enc.Row(t), &grads.joint_w_enc);
      OuterAccum(d_hidden, pred.Row(u), &grads.joint_w_pred);
      AddAccum(d_hidden, grads.joint_bias.Row(0));
      MatTVecAccum(params.joint_w_enc, d_hidden, d_enc.Row(t));
      MatTVecAccum(params.joint_w_pred, d_hidden, d_pred.Row(u));
    }
  }

  // Encoder back through time.
  std::vector<double> d_state(params.dims.enc_hidden);
  for (int t = T - 1; t >= 0; --t) {
    auto h = enc.Row(t);
    for (int i = 0; i < params.dims.enc_hidden; ++i) {
      d_state[i] = d_enc(t, i) * (1.0 - h[i] * h[i]);
    }
    OuterAccum(d_state, features.Row(t), &grads.enc_w_in);
    if (t > 0) {
      OuterAccum(d_state, enc.Row(t - 1), &grads.enc_w_rec);
      MatTVecAccum(params.enc_w_rec, d_state, d_enc.Row(t - 1));
    }
    AddAccum(d_state, grads.enc_bias.Row(0));
  }

  // Predictor back through label positions, into the embedding table.
  std::vector<double> d_pstate(params.dims.pred_hidden);
  std::vector<double> d_embed(params.dims.embed_dim);
  for (int u = U; u >= 0; --u) {
    auto g = pred.Row(u);
    for (int i = 0; i < params.dims.pred_hidden; ++i) {
      d_pstate[i] = d_pred(u, i) * (1.0 - g[i] * g[i]);
    }
    const int input_id = (u == 0) ? params.dims.blank_id : labels[u - 1];
    OuterAccum(d_pstate, params.embedding.Row(input_id), &grads.pred_w_in);
    if (u > 0) {
      OuterAccum(d_pstate, pred.Row(u - 1), &grads.pred_w_rec);
      MatTVecAccum(params.pred_w_rec, d_pstate, d_pred.Row(u - 1));
    }
    AddAccum(d_pstate, grads.pred_bias.Row(0));

    std::fill(d_embed.begin(), d_embed.end(), 0.0);
    MatTVecAccum(params.pred_w_in, d_pstate, d_embed);
    AddAccum(d_embed, grads.embedding.Row(input_id));
  }

  return grads;
}

void SaveCheckpoint(const ModelParams &params, const std::string &path) {
  json j;
  j["format_version"] = 1;
  j["dims"] = {{"feat_dim", params.dims.feat_dim},
               {"vocab_size", params.dims.vocab_size},
               {"blank_id", params.dims.blank_id},
               {"eos_id", params.dims.eos_id},
               {"enc_hidden", params.dims.enc_hidden},
               {"embed_dim", params.dims.embed_dim},
               {"pred_hidden", params.dims.pred_hidden},
               {"joint_dim", params.dims.joint_dim}};
  json tensors;
  for (const auto &[name, tensor] : params.Tensors()) {
    tensors[name] = tensor->data();
  }
  j["params"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out << j.dump();
  out << "\n";
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

ModelParams LoadCheckpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw DataError("checkpoint " + path + ": " + e.what());
  }

  auto require_int = [&](const json &obj, const std::string &ctx,
                         const std::string &key) -> int {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
      throw DataError("checkpoint " + path + ": " + ctx + "." + key +
                      " missing or not an integer");
    }
    return obj[key].get<int>();
  };

  if (!j.contains("format_version") || j["format_version"] != 1) {
    throw DataError("checkpoint " + path + ": format_version != 1");
  }
  if (!j.contains("dims") || !j["dims"].is_object()) {
    throw DataError("checkpoint " + path + ": dims missing");
  }
  const json &jd = j["dims"];
  ModelDims dims;
  dims.feat_dim = require_int(jd, "dims", "feat_dim");
  dims.vocab_size = require_int(jd, "dims", "vocab_size");
  dims.blank_id = require_int(jd, "dims", "blank_id");
  dims.eos_id = require_int(jd, "dims", "eos_id");
  dims.enc_hidden = require_int(jd, "dims", "enc_hidden");
  dims.embed_dim = require_int(jd, "dims", "embed_dim");
  dims.pred_hidden = require_int(jd, "dims", "pred_hidden");
  dims.joint_dim = require_int(jd, "dims", "joint_dim");

  ModelParams params;
  try {
    params = ZeroParams(dims);
  } catch (const std::invalid_argument &e) {
    throw DataError("checkpoint " + path + ": dims: " + e.what());
  }
  if (!j.contains("params") || !j["params"].is_object()) {
    throw DataError("checkpoint " + path + ": params missing");
  }
  const json &jp = j["params"];
  for (auto &[name, tensor] : params.Tensors()) {
    if (!jp.contains(name) || !jp[name].is_array()) {
      throw DataError("checkpoint " + path + ": params." + name +
                      " missing or not an array");
    }
    const json &arr = jp[name];
    if (arr.size() != tensor->data().size()) {
      throw DataError("checkpoint " + path + ": params." + name +
                      ": expected " + std::to_string(tensor->data().size()) +
                      " values, got " + std::to_string(arr.size()));
    }
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) {
        throw DataError("checkpoint " + path + ": params." + name + "[" +
                        std::to_string(i) + "] is not a number");
      }
      tensor->data()[i] = arr[i].get<double>();
    }
    if (!AllFinite(tensor->data())) {
      throw DataError("checkpoint " + path + ": params." + name +
                      " contains non-finite values");
    }
  }
  return params;
}

namespace {
Matrix CheckedEncoderStates(const ModelParams &params,
                            const Matrix &features) {
  CheckInputs(params, features, {});
  return EncoderStates(params, features);
}
}  // namespace

ModelScorer::ModelScorer(const ModelParams &params, const Matrix &features)
    : params_(params), enc_states_(CheckedEncoderStates(params, features)) {}

TransducerScorer::State ModelScorer::StartState() const {
  return RecurrentStep(params_.pred_w_in, params_.pred_w_rec,
                       params_.pred_bias,
                       params_.embedding.Row(params_.dims.blank_id), {});
}

TransducerScorer::State ModelScorer::Advance(const State &state,
                                             int token) const {
  if (token == params_.dims.blank_id || token < 0 ||
      token >= params_.dims.vocab_size) {
    throw std::invalid_argument("cannot advance predictor on token " +
                                std::to_string(token));
  }
  return RecurrentStep(params_.pred_w_in, params_.pred_w_rec,
                       params_.pred_bias, params_.embedding.Row(token), state);
}

std::vector<double> ModelScorer::Logits(int frame, const State &state) const {
  return JointLogits(params_, enc_states_.Row(frame), state, nullptr);
}

}  // namespace mwer
