// mwer/gradcheck.cc
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

#include "mwer/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mwer/decoder.h"
#include "mwer/lattice.h"
#include "mwer/model.h"
#include "mwer/mwer_loss.h"
#include "mwer/rng.h"

namespace mwer {

namespace {

double RelError(double analytic, double numeric, double floor) {
  if (std::abs(analytic) <= floor) return 0.0;
  return std::abs(analytic - numeric) /
         std::max(std::abs(analytic), std::abs(numeric));
}

std::vector<int> RandomLabels(Rng &rng, int count, int vocab, int blank) {
  std::vector<int> labels;
  while (static_cast<int>(labels.size()) < count) {
    const int k = rng.UniformInt(0, vocab - 1);
    if (k != blank) labels.push_back(k);
  }
  return labels;
}

ModelDims CheckDims() {
  ModelDims d;
  d.feat_dim = 3;
  d.vocab_size = 4;
  d.blank_id = 0;
  d.enc_hidden = 4;
  d.embed_dim = 3;
  d.pred_hidden = 4;
  d.joint_dim = 4;
  return d;
}

double LatticeCheck(Rng &rng, double h) {
  const int T = 4, U = 2, K = 5;
  Tensor3 base(T, U + 1, K);
  for (double &v : base.data()) v = rng.Uniform(-2.0, 2.0);
  const std::vector<int> y = RandomLabels(rng, U, K, 0);
  const double temp = rng.Uniform() < 0.5 ? 1.0 : 1.2;

  RnntLossResult r = RnntLossAndGrad(LogitLattice(base, 0), y, temp);
  double worst = 0.0;
  for (size_t e = 0; e < base.data().size(); ++e) {
    Tensor3 plus = base, minus = base;
    plus.data()[e] += h;
    minus.data()[e] -= h;
    const double lp =
        SequenceLogProb(Normalize(LogitLattice(std::move(plus), 0), temp), y);
    const double lm =
        SequenceLogProb(Normalize(LogitLattice(std::move(minus), 0), temp), y);
    const double numeric = (-lp + lm) / (2.0 * h);
    worst = std::max(worst, RelError(r.logit_grad.data()[e], numeric, 1e-8));
  }
  return worst;
}

double ModelCheck(Rng &rng, double h) {
  ModelParams params = InitParams(rng.NextU64(), CheckDims());
  Matrix features(4, 3);
  for (double &v : features.data()) v = rng.Uniform(-1.0, 1.0);
  const std::vector<int> y = RandomLabels(rng, 2, 4, 0);

  const auto loss_at = [&](const ModelParams &p) {
    return RnntLossAndGrad(ForwardLattice(p, features, y), y, 1.0).loss;
  };
  RnntLossResult loss =
      RnntLossAndGrad(ForwardLattice(params, features, y), y, 1.0);
  ModelParams grads = BackwardLattice(params, features, y, loss.logit_grad);

  double worst = 0.0;
  auto tensors = params.Tensors();
  auto grad_tensors = grads.Tensors();
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    auto &data = tensors[ti].second->data();
    for (int probe = 0; probe < 8; ++probe) {
      const size_t e = rng.UniformInt(data.size());
      const double saved = data[e];
      data[e] = saved + h;
      const double plus = loss_at(params);
      data[e] = saved - h;
      const double minus = loss_at(params);
      data[e] = saved;
      worst = std::max(worst,
                       RelError(grad_tensors[ti].second->data()[e],
                                (plus - minus) / (2.0 * h), 1e-8));
    }
  }
  return worst;
}

double MwerCheck(Rng &rng, double h) {
  ModelParams params = InitParams(rng.NextU64(), CheckDims());
  Matrix features(3, 3);
  for (double &v : features.data()) v = rng.Uniform(-1.0, 1.0);
  const std::vector<int> reference = RandomLabels(rng, 2, 4, 0);

  // Hypothesis set from a real decode; held fixed under perturbation.
  ModelScorer scorer(params, features);
  DecodeConfig decode;
  decode.beam_size = 3;
  NBestList nbest = BeamSearch(scorer, decode);
  nbest.utterance_id = "gradcheck";
  nbest.reference = reference;

  const auto loss_at = [&](const ModelParams &p) {
    const LatticeEvalFn evaluate = [&](std::span<const int> tokens) {
      return ForwardLattice(p, features, tokens);
    };
    return MwerFullGrad(evaluate, nbest).loss;
  };

  const LatticeEvalFn evaluate = [&](std::span<const int> tokens) {
    return ForwardLattice(params, features, tokens);
  };
  MwerGradients g = MwerFullGrad(evaluate, nbest);
  ModelParams grads = ZeroParams(params.dims);
  for (size_t i = 0; i < g.hypotheses.size(); ++i) {
    ModelParams hyp = BackwardLattice(params, features, g.hypotheses[i].tokens,
                                      g.lattice_grads[i]);
    auto src = hyp.Tensors();
    auto dst = grads.Tensors();
    for (size_t ti = 0; ti < src.size(); ++ti) {
      for (size_t e = 0; e < src[ti].second->data().size(); ++e) {
        dst[ti].second->data()[e] += src[ti].second->data()[e];
      }
    }
  }

  double worst = 0.0;
  auto tensors = params.Tensors();
  auto grad_tensors = grads.Tensors();
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    auto &data = tensors[ti].second->data();
    for (int probe = 0; probe < 5; ++probe) {
      const size_t e = rng.UniformInt(data.size());
      const double saved = data[e];
      data[e] = saved + h;
      const double plus = loss_at(params);
      data[e] = saved - h;
      const double minus = loss_at(params);
      data[e] = saved;
      worst = std::max(worst,
                       RelError(grad_tensors[ti].second->data()[e],
                                (plus - minus) / (2.0 * h), 1e-7));
    }
  }
  return worst;
}

}  // namespace

GradCheckReport RunGradChecks(const GradCheckOptions &options) {
  Rng rng(options.seed);
  GradCheckReport report;
  for (int i = 0; i < options.lattice_instances; ++i) {
    report.lattice_max_rel_error =
        std::max(report.lattice_max_rel_error, LatticeCheck(rng, options.step));
  }
  for (int i = 0; i < options.model_instances; ++i) {
    report.model_max_rel_error =
        std::max(report.model_max_rel_error, ModelCheck(rng, options.step));
  }
  for (int i = 0; i < options.mwer_instances; ++i) {
    report.mwer_max_rel_error =
        std::max(report.mwer_max_rel_error, MwerCheck(rng, options.step));
  }
  report.lattice_ok = report.lattice_max_rel_error < options.lattice_tolerance;
  report.model_ok = report.model_max_rel_error < options.model_tolerance;
  report.mwer_ok = report.mwer_max_rel_error < options.mwer_tolerance;
  return report;
}

}  // namespace mwer
