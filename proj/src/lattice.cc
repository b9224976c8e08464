// mwer/lattice.cc
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

#include "mwer/lattice.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mwer/common.h"

namespace mwer {

namespace {

void CheckLatticeShape(const Tensor3 &values, int blank_id) {
  if (values.dim0() < 1 || values.dim1() < 1 || values.dim2() < 2) {
    throw std::invalid_argument(
        "lattice shape must satisfy T >= 1, U >= 0, K >= 2; got (" +
        std::to_string(values.dim0()) + ", " + std::to_string(values.dim1()) +
        ", " + std::to_string(values.dim2()) + ")");
  }
  if (blank_id < 0 || blank_id >= values.dim2()) {
    throw std::invalid_argument("blank_id " + std::to_string(blank_id) +
                                " outside vocabulary of size " +
                                std::to_string(values.dim2()));
  }
}

void CheckLabels(const LogPosteriorLattice &post, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != post.num_labels()) {
    throw std::invalid_argument(
        "label sequence length " + std::to_string(labels.size()) +
        " does not match lattice U = " + std::to_string(post.num_labels()));
  }
  for (int y : labels) {
    if (y == post.blank_id()) {
      throw std::invalid_argument("label sequence contains the blank id " +
                                  std::to_string(post.blank_id()));
    }
    if (y < 0 || y >= post.vocab_size()) {
      throw std::invalid_argument("label id " + std::to_string(y) +
                                  " outside vocabulary of size " +
                                  std::to_string(post.vocab_size()));
    }
  }
}

}  // namespace

LogitLattice::LogitLattice(Tensor3 values, int blank_id)
    : values_(std::move(values)), blank_id_(blank_id) {
  CheckLatticeShape(values_, blank_id_);
  if (!AllFinite(values_.data())) {
    throw std::invalid_argument("logit lattice contains non-finite values");
  }
}

LogPosteriorLattice::LogPosteriorLattice(Tensor3 log_probs, int blank_id,
                                         double temperature)
    : log_probs_(std::move(log_probs)), blank_id_(blank_id),
      temperature_(temperature) {
  CheckLatticeShape(log_probs_, blank_id_);
  for (int t = 0; t < log_probs_.dim0(); ++t) {
    for (int u = 0; u < log_probs_.dim1(); ++u) {
      double acc = kNegInf;
      for (double lp : log_probs_.Row(t, u)) acc = LogSumExp(acc, lp);
      if (!(std::abs(acc) < 1e-10)) {
        throw std::invalid_argument(
            "posterior lattice row (" + std::to_string(t) + ", " +
            std::to_string(u) + ") is not normalized: logsumexp = " +
            std::to_string(acc));
      }
    }
  }
}

LogPosteriorLattice Normalize(const LogitLattice &lattice,
                              double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive, got " +
                                std::to_string(temperature));
  }
  const Tensor3 &values = lattice.values();
  Tensor3 log_probs(values.dim0(), values.dim1(), values.dim2());
  for (int t = 0; t < values.dim0(); ++t) {
    for (int u = 0; u < values.dim1(); ++u) {
      auto in = values.Row(t, u);
      auto out = log_probs.Row(t, u);
      double max = kNegInf;
      for (int k = 0; k < static_cast<int>(in.size()); ++k) {
        out[k] = in[k] / temperature;
        max = std::max(max, out[k]);
      }
      double sum = 0.0;
      for (double v : out) sum += std::exp(v - max);
      const double lse = max + std::log(sum);
      for (double &v : out) v -= lse;
    }
  }
  return LogPosteriorLattice(std::move(log_probs), lattice.blank_id(),
                             temperature);
}

AlphaBeta ForwardBackward(const LogPosteriorLattice &post,
                          std::span<const int> labels) {
  CheckLabels(post, labels);
  const int T = post.num_frames();
  const int U = post.num_labels();
  const int blank = post.blank_id();

  Matrix alpha(T, U + 1, kNegInf);
  alpha(0, 0) = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double acc = kNegInf;
      if (t > 0) acc = LogSumExp(acc, alpha(t - 1, u) + post(t - 1, u, blank));
      if (u > 0) {
        acc = LogSumExp(acc, alpha(t, u - 1) + post(t, u - 1, labels[u - 1]));
      }
      alpha(t, u) = acc;
    }
  }

  Matrix beta(T, U + 1, kNegInf);
  beta(T - 1, U) = post(T - 1, U, blank);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double acc = kNegInf;
      if (t < T - 1) acc = LogSumExp(acc, beta(t + 1, u) + post(t, u, blank));
      if (u < U) acc = LogSumExp(acc, beta(t, u + 1) + post(t, u, labels[u]));
      beta(t, u) = acc;
    }
  }

  return AlphaBeta{std::move(alpha), std::move(beta)};
}

double SequenceLogProb(const LogPosteriorLattice &post,
                       std::span<const int> labels) {
  CheckLabels(post, labels);
  const int T = post.num_frames();
  const int U = post.num_labels();
  const int blank = post.blank_id();

  // Forward pass only; one row of state at a time.
  std::vector<double> prev(U + 1, kNegInf);
  std::vector<double> cur(U + 1, kNegInf);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) {
        cur[0] = 0.0;
        continue;
      }
      double acc = kNegInf;
      if (t > 0) acc = LogSumExp(acc, prev[u] + post(t - 1, u, blank));
      if (u > 0) acc = LogSumExp(acc, cur[u - 1] + post(t, u - 1, labels[u - 1]));
      cur[u] = acc;
    }
    std::swap(prev, cur);
  }
  return prev[U] + post(T - 1, U, blank);
}

SequenceLogProbGradResult SequenceLogProbWithGrad(const LogitLattice &lattice,
                                                  std::span<const int> labels,
                                                  double temperature) {
  const LogPosteriorLattice post = Normalize(lattice, temperature);
  const AlphaBeta ab = ForwardBackward(post, labels);
  const int T = post.num_frames();
  const int U = post.num_labels();
  const int K = post.vocab_size();
  const int blank = post.blank_id();
  const double log_z = ab.alpha(T - 1, U) + post(T - 1, U, blank);

  // Transition occupancies gamma(t,u,k) = P(path of y uses edge (t,u,k) | y):
  //   blank edge   alpha(t,u) + lp(blank|t,u) + beta(t+1,u) - log_z
  //   label edge   alpha(t,u) + lp(y_{u+1}|t,u) + beta(t,u+1) - log_z
  // with the terminal blank at (T-1, U) carrying no beta factor. Composing
  // d log P / d lp with the softmax Jacobian gives, per (t,u) row,
  //   d log P / d logit_k = (gamma_k - p_k * sum_j gamma_j) / temperature.
  Tensor3 grad(T, U + 1, K, 0.0);
  if (!std::isfinite(log_z)) {
    // The occupancy ratios are undefined; callers decide whether a zero
    // probability is an error. Gradients stay zero.
    return SequenceLogProbGradResult{log_z, std::move(grad)};
  }
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      double gamma_blank = kNegInf;
      if (t < T - 1) {
        gamma_blank = ab.alpha(t, u) + post(t, u, blank) + ab.beta(t + 1, u);
      } else if (u == U) {
        gamma_blank = ab.alpha(t, u) + post(t, u, blank);
      }
      double gamma_label = kNegInf;
      if (u < U) {
        gamma_label =
            ab.alpha(t, u) + post(t, u, labels[u]) + ab.beta(t, u + 1);
      }

      const double g_blank =
          gamma_blank == kNegInf ? 0.0 : std::exp(gamma_blank - log_z);
      const double g_label =
          gamma_label == kNegInf ? 0.0 : std::exp(gamma_label - log_z);
      const double row_mass = g_blank + g_label;
      if (row_mass == 0.0) continue;  // node off the support of y

      auto out = grad.Row(t, u);
      auto lp = post.log_probs().Row(t, u);
      for (int k = 0; k < K; ++k) {
        out[k] = -std::exp(lp[k]) * row_mass;
      }
      out[blank] += g_blank;
      if (u < U) out[labels[u]] += g_label;
      for (int k = 0; k < K; ++k) out[k] /= temperature;
    }
  }
  return SequenceLogProbGradResult{log_z, std::move(grad)};
}

RnntLossResult RnntLossAndGrad(const LogitLattice &lattice,
                               std::span<const int> labels,
                               double temperature) {
  SequenceLogProbGradResult r =
      SequenceLogProbWithGrad(lattice, labels, temperature);
  if (!std::isfinite(r.log_prob)) {
    // Some required transition has probability zero; the loss is +inf and
    // no gradient is defined.
    throw NumericError("transducer loss is non-finite (log P(y|x) = " +
                       std::to_string(r.log_prob) + ")");
  }
  for (double &g : r.logit_grad.data()) g = -g;
  return RnntLossResult{-r.log_prob, std::move(r.logit_grad)};
}

std::vector<AlignmentPath> EnumerateAlignments(int num_frames,
                                               int num_labels) {
  if (num_frames < 1 || num_labels < 0) {
    throw std::invalid_argument("alignment grid needs T >= 1, U >= 0");
  }
  if (num_frames + num_labels > 24) {
    throw std::invalid_argument(
        "alignment enumeration capped at T + U <= 24; got " +
        std::to_string(num_frames + num_labels));
  }

  std::vector<AlignmentPath> out;
  AlignmentPath path;
  path.moves.reserve(num_frames + num_labels);
  // Depth-first over the grid; the final move is always the terminal blank,
  // so labels may only occupy the first T + U - 1 slots.
  auto recurse = [&](auto &&self, int t_used, int u_used) -> void {
    if (t_used == num_frames && u_used == num_labels) {
      out.push_back(path);
      return;
    }
    if (t_used < num_frames) {
      // A blank that exhausts the frames must be the terminal move.
      if (t_used + 1 < num_frames || u_used == num_labels) {
        path.moves.push_back(kBlankMove);
        self(self, t_used + 1, u_used);
        path.moves.pop_back();
      }
    }
    if (u_used < num_labels && t_used < num_frames) {
      path.moves.push_back(u_used);
      self(self, t_used, u_used + 1);
      path.moves.pop_back();
    }
  };
  recurse(recurse, 0, 0);
  return out;
}

bool IsValidAlignment(const AlignmentPath &path, int num_frames,
                      int num_labels) {
  if (static_cast<int>(path.moves.size()) != num_frames + num_labels) {
    return false;
  }
  int t = 0, u = 0;
  for (int move : path.moves) {
    if (t >= num_frames) return false;  // walked off the frame axis
    if (move == kBlankMove) {
      ++t;
    } else {
      if (move != u) return false;  // labels must appear in order
      ++u;
    }
  }
  return t == num_frames && u == num_labels &&
         path.moves.back() == kBlankMove;
}

}  // namespace mwer
