// mwer/trainer.cc
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

#include "mwer/trainer.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "mwer/common.h"
#include "mwer/edit_distance.h"
#include "mwer/rng.h"

namespace mwer {

namespace {

// Strips EOS for error counting; -1 strips nothing.
std::vector<int> Stripped(std::span<const int> tokens, int strip_token) {
  std::vector<int> out;
  for (int t : tokens) {
    if (t != strip_token) out.push_back(t);
  }
  return out;
}

void AccumulateScaled(const ModelParams &src, double scale,
                      ModelParams *dst) {
  auto src_tensors = src.Tensors();
  auto dst_tensors = dst->Tensors();
  for (size_t i = 0; i < src_tensors.size(); ++i) {
    const auto &from = src_tensors[i].second->data();
    auto &to = dst_tensors[i].second->data();
    for (size_t e = 0; e < from.size(); ++e) to[e] += scale * from[e];
  }
}

void ClipGlobalNorm(ModelParams *grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto &[name, tensor] : grads->Tensors()) {
    for (double v : tensor->data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto &[name, tensor] : grads->Tensors()) {
    for (double &v : tensor->data()) v *= scale;
  }
}

Dataset WithEos(const Dataset &dataset, int eos_id) {
  Dataset out = dataset;
  for (Utterance &utt : out) utt.reference.push_back(eos_id);
  return out;
}

int ResolveEos(const ModelDims &dims, bool append_eos) {
  if (!append_eos) return -1;
  if (dims.eos_id < 0) {
    throw std::invalid_argument(
        "append_eos requires a model with an EOS token");
  }
  return dims.eos_id;
}

// Expected-error gradient accumulation for one batch of utterances whose
// N-best lists are already available. Returns the mean loss over
// contributing utterances; empty or unusable lists are skipped.
double MwerBatchGrads(const ModelParams &params,
                      std::span<const Utterance> batch,
                      std::span<const NBestList> lists,
                      const MwerOptions &options, ModelParams *grads,
                      double *mean_expected_errors, int *skipped) {
  double loss_sum = 0.0;
  double err_sum = 0.0;
  int contributing = 0;
  std::vector<ModelParams> per_utt;
  for (size_t i = 0; i < batch.size(); ++i) {
    const Utterance &utt = batch[i];
    if (lists[i].hypotheses.empty()) {
      ++*skipped;
      continue;
    }
    const LatticeEvalFn evaluate = [&](std::span<const int> tokens) {
      return ForwardLattice(params, utt.features, tokens);
    };
    MwerGradients g = MwerFullGrad(evaluate, lists[i], options);
    ModelParams utt_grads = ZeroParams(params.dims);
    for (size_t h = 0; h < g.hypotheses.size(); ++h) {
      ModelParams hyp_grads = BackwardLattice(
          params, utt.features, g.hypotheses[h].tokens, g.lattice_grads[h]);
      AccumulateScaled(hyp_grads, 1.0, &utt_grads);
    }
    per_utt.push_back(std::move(utt_grads));
    loss_sum += g.loss;
    err_sum += g.expected_errors;
    ++contributing;
  }
  if (contributing == 0) return 0.0;
  // Fixed utterance order keeps the reduction bit-reproducible.
  for (const ModelParams &utt_grads : per_utt) {
    AccumulateScaled(utt_grads, 1.0 / contributing, grads);
  }
  *mean_expected_errors = err_sum / contributing;
  return loss_sum / contributing;
}

}  // namespace

double LrAt(const TrainSchedule &schedule, int64_t step) {
  if (step < 0) throw std::invalid_argument("schedule step must be >= 0");
  const int64_t warmup = schedule.warmup_steps;
  const int64_t plateau_end = warmup + schedule.constant_steps;
  if (step < warmup) {
    return schedule.lr_constant * static_cast<double>(step) /
           static_cast<double>(warmup);
  }
  if (step <= plateau_end || schedule.decay_steps <= 0) {
    if (step <= plateau_end) return schedule.lr_constant;
    return schedule.lr_final;
  }
  const int64_t into_decay = step - plateau_end;
  if (into_decay >= schedule.decay_steps) return schedule.lr_final;
  const double progress = static_cast<double>(into_decay) /
                          static_cast<double>(schedule.decay_steps);
  return schedule.lr_constant *
         std::pow(schedule.lr_final / schedule.lr_constant, progress);
}

AdamState::AdamState(const ModelDims &dims, const AdamConfig &config)
    : config_(config), first_moment_(ZeroParams(dims)),
      second_moment_(ZeroParams(dims)) {}

void AdamState::Step(ModelParams *params, const ModelParams &grads,
                     double lr) {
  ++steps_;
  const double bias1 = 1.0 - std::pow(config_.beta1, steps_);
  const double bias2 = 1.0 - std::pow(config_.beta2, steps_);
  auto p = params->Tensors();
  auto g = grads.Tensors();
  auto m = first_moment_.Tensors();
  auto v = second_moment_.Tensors();
  for (size_t i = 0; i < p.size(); ++i) {
    auto &pd = p[i].second->data();
    const auto &gd = g[i].second->data();
    auto &md = m[i].second->data();
    auto &vd = v[i].second->data();
    if (pd.size() != gd.size()) {
      throw std::invalid_argument("gradient shape does not match parameters");
    }
    for (size_t e = 0; e < pd.size(); ++e) {
      md[e] = config_.beta1 * md[e] + (1.0 - config_.beta1) * gd[e];
      vd[e] = config_.beta2 * vd[e] + (1.0 - config_.beta2) * gd[e] * gd[e];
      const double m_hat = md[e] / bias1;
      const double v_hat = vd[e] / bias2;
      pd[e] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

std::vector<NBestList> DecodeDataset(const ModelParams &params,
                                     std::span<const Utterance> utterances,
                                     const DecodeConfig &config, int workers) {
  std::vector<NBestList> results(utterances.size());
  const int n = static_cast<int>(utterances.size());
  const int pool = std::max(1, std::min(workers, n));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        ModelScorer scorer(params, utterances[i].features);
        NBestList list = BeamSearch(scorer, config);
        list.utterance_id = utterances[i].id;
        list.reference = utterances[i].reference;
        results[i] = std::move(list);
      } catch (const std::exception &e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error_message = "utterance '" + utterances[i].id + "': " + e.what();
        failed.store(true);
        return;
      }
    }
  };

  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int w = 0; w < pool; ++w) threads.emplace_back(work);
    for (std::thread &t : threads) t.join();
  }
  if (failed.load()) throw NumericError("decode failed: " + error_message);
  return results;
}

DevMetrics EvalDev(const ModelParams &params,
                   std::span<const Utterance> utterances,
                   const DecodeConfig &config, int strip_token, int workers) {
  DevMetrics metrics;
  if (utterances.empty()) return metrics;
  std::vector<NBestList> lists =
      DecodeDataset(params, utterances, config, workers);
  double err_sum = 0.0;
  int scored = 0;
  for (size_t i = 0; i < lists.size(); ++i) {
    const std::vector<int> ref =
        Stripped(utterances[i].reference, strip_token);
    metrics.ref_tokens += static_cast<int64_t>(ref.size());
    if (lists[i].hypotheses.empty()) continue;
    const ErrorCount top1 = EditDistance(
        Stripped(lists[i].hypotheses[0].tokens, strip_token), ref);
    metrics.substitutions += top1.substitutions;
    metrics.insertions += top1.insertions;
    metrics.deletions += top1.deletions;

    // Expected errors under the exact-rescored N-best distribution.
    ModelScorer scorer(params, utterances[i].features);
    NBestList exact = lists[i];
    bool finite = true;
    for (Hypothesis &hyp : exact.hypotheses) {
      hyp.log_score = ExactScore(scorer, hyp.tokens, 1.0);
      hyp.source = ScoreSource::kExact;
      finite = finite && std::isfinite(hyp.log_score);
    }
    if (!finite) continue;
    SortHypotheses(&exact.hypotheses);
    err_sum += MwerLoss(exact, strip_token).expected_errors;
    ++scored;
  }
  metrics.mean_expected_errors = scored == 0 ? 0.0 : err_sum / scored;
  return metrics;
}

TrainResult TrainRnnt(const Dataset &train, const ModelParams &seed_params,
                      const RnntTrainConfig &config) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (config.batch_size < 1 || config.steps < 0) {
    throw std::invalid_argument("batch_size must be >= 1 and steps >= 0");
  }
  const int eos = ResolveEos(seed_params.dims, config.append_eos);
  const Dataset working = eos >= 0 ? WithEos(train, eos) : train;

  TrainResult result;
  result.params = seed_params;
  AdamState adam(seed_params.dims);
  Rng shuffle_rng(config.seed);

  std::vector<int> order(working.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  size_t cursor = order.size();  // forces an epoch boundary on first use

  for (int step = 0; step < config.steps; ++step) {
    ModelParams grads = ZeroParams(result.params.dims);
    double loss_sum = 0.0;
    int count = 0;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= order.size()) {
        cursor = 0;
        if (config.shuffle) shuffle_rng.Shuffle(&order);
      }
      const Utterance &utt = working[order[cursor++]];
      try {
        LogitLattice lattice =
            ForwardLattice(result.params, utt.features, utt.reference);
        RnntLossResult loss = RnntLossAndGrad(lattice, utt.reference, 1.0);
        ModelParams utt_grads = BackwardLattice(
            result.params, utt.features, utt.reference, loss.logit_grad);
        AccumulateScaled(utt_grads, 1.0, &grads);
        loss_sum += loss.loss;
        ++count;
      } catch (const NumericError &e) {
        throw NumericError("step " + std::to_string(step) + ", utterance '" +
                           utt.id + "': " + e.what());
      }
    }
    if (count > 1) {
      for (auto &[name, tensor] : grads.Tensors()) {
        for (double &v : tensor->data()) v /= count;
      }
    }
    ClipGlobalNorm(&grads, config.grad_clip_norm);
    adam.Step(&result.params, grads, LrAt(config.schedule, step));
    result.loss_curve.push_back(loss_sum / std::max(count, 1));
  }
  return result;
}

namespace {

// Shared inner step for both expected-error training modes; `lists` are the
// N-best sets for this batch (freshly decoded or reloaded from disk).
void MwerTrainStep(std::span<const Utterance> batch,
                   std::span<const NBestList> lists,
                   const MwerTrainConfig &config, int64_t step,
                   ModelParams *params, AdamState *adam, TrainResult *result) {
  ModelParams grads = ZeroParams(params->dims);
  double mean_err = 0.0;
  const double loss = MwerBatchGrads(*params, batch, lists, config.mwer,
                                     &grads, &mean_err,
                                     &result->skipped_utterances);
  ClipGlobalNorm(&grads, config.grad_clip_norm);
  adam->Step(params, grads, LrAt(config.schedule, step));
  result->loss_curve.push_back(loss);
}

}  // namespace

TrainResult TrainMwerOnTheFly(const Dataset &train, const Dataset &dev,
                              const ModelParams &seed_params,
                              const MwerTrainConfig &config) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (config.batch_size < 1) {
    throw std::invalid_argument("batch_size must be >= 1");
  }
  const int eos = ResolveEos(seed_params.dims, config.append_eos);
  const Dataset working = eos >= 0 ? WithEos(train, eos) : train;
  const Dataset dev_working = eos >= 0 ? WithEos(dev, eos) : dev;

  TrainResult result;
  result.params = seed_params;
  AdamState adam(seed_params.dims);
  size_t cursor = 0;

  for (int step = 0; step < config.steps; ++step) {
    std::vector<Utterance> batch;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= working.size()) cursor = 0;
      batch.push_back(working[cursor++]);
    }
    const std::vector<NBestList> lists =
        DecodeDataset(result.params, batch, config.decode, config.workers);
    MwerTrainStep(batch, lists, config, step, &result.params, &adam, &result);

    if (!dev_working.empty() && config.dev_every > 0 &&
        (step + 1) % config.dev_every == 0) {
      result.dev_curve.push_back(
          DevPoint{step + 1,
                   EvalDev(result.params, dev_working, config.decode,
                           config.mwer.strip_token, config.workers)});
    }
  }
  return result;
}

TrainResult TrainMwerSemi(const Dataset &train, const Dataset &dev,
                          const ModelParams &seed_params, const SemiPlan &plan,
                          const MwerTrainConfig &config,
                          const std::string &out_dir, const Vocab *vocab) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (plan.num_splits < 1 || plan.epochs < 1) {
    throw std::invalid_argument("plan needs num_splits >= 1 and epochs >= 1");
  }
  if (!out_dir.empty() && vocab == nullptr) {
    throw std::invalid_argument("persisting N-best lists requires a vocab");
  }
  const int eos = ResolveEos(seed_params.dims, config.append_eos);
  const Dataset working = eos >= 0 ? WithEos(train, eos) : train;
  const Dataset dev_working = eos >= 0 ? WithEos(dev, eos) : dev;

  // Batches are contiguous in dataset order; splits are contiguous ranges
  // of whole batches so a one-batch split degenerates to on-the-fly
  // training.
  const int num_batches =
      static_cast<int>((working.size() + config.batch_size - 1) /
                       config.batch_size);
  if (plan.num_splits > num_batches) {
    throw std::invalid_argument(
        "plan has more splits than batches (" +
        std::to_string(plan.num_splits) + " > " +
        std::to_string(num_batches) + ")");
  }

  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  TrainResult result;
  result.params = seed_params;
  AdamState adam(seed_params.dims);
  int64_t step = 0;

  nlohmann::json manifest_splits = nlohmann::json::array();

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    for (int split = 1; split <= plan.num_splits; ++split) {
      const int batch_begin = (split - 1) * num_batches / plan.num_splits;
      const int batch_end = split * num_batches / plan.num_splits;
      const size_t utt_begin =
          static_cast<size_t>(batch_begin) * config.batch_size;
      const size_t utt_end = std::min(
          working.size(), static_cast<size_t>(batch_end) * config.batch_size);
      std::span<const Utterance> split_utts(working.data() + utt_begin,
                                            utt_end - utt_begin);

      // Phase 1: offline decode of the whole split with the frozen model.
      std::vector<NBestList> lists =
          DecodeDataset(result.params, split_utts, config.decode,
                        config.workers);
      if (!out_dir.empty()) {
        const std::string nbest_path =
            out_dir + "/nbest.e" + std::to_string(epoch) + ".s" +
            std::to_string(split) + ".jsonl";
        SaveNBestFile(lists, *vocab, nbest_path);
        // Train from the persisted artifact so the file is authoritative.
        lists = LoadNBestFile(nbest_path, *vocab);
        std::map<std::string, const NBestList *> by_id;
        for (const NBestList &list : lists) by_id[list.utterance_id] = &list;
        std::vector<NBestList> ordered;
        ordered.reserve(split_utts.size());
        for (const Utterance &utt : split_utts) {
          auto it = by_id.find(utt.id);
          if (it == by_id.end()) {
            throw DataError("persisted N-best file " + nbest_path +
                            " is missing utterance '" + utt.id + "'");
          }
          ordered.push_back(*it->second);
          by_id.erase(it);
        }
        if (!by_id.empty()) {
          throw DataError("persisted N-best file " + nbest_path +
                          " references unknown utterance '" +
                          by_id.begin()->first + "'");
        }
        lists = std::move(ordered);
      }

      // Phase 2: expected-error training over the split, batch by batch.
      if (config.adam_reset_per_split) {
        adam = AdamState(seed_params.dims, adam.config());
      }
      for (int b = batch_begin; b < batch_end; ++b) {
        const size_t lo = static_cast<size_t>(b) * config.batch_size;
        const size_t hi =
            std::min(working.size(), lo + config.batch_size);
        std::span<const Utterance> batch(working.data() + lo, hi - lo);
        std::span<const NBestList> batch_lists(
            lists.data() + (lo - utt_begin), hi - lo);
        MwerTrainStep(batch, batch_lists, config, step, &result.params, &adam,
                      &result);
        ++step;
      }

      if (!out_dir.empty()) {
        SaveCheckpoint(result.params, out_dir + "/model.e" +
                                          std::to_string(epoch) + ".s" +
                                          std::to_string(split) + ".json");
      }
      if (epoch == 1) {
        nlohmann::json ids = nlohmann::json::array();
        for (const Utterance &utt : split_utts) ids.push_back(utt.id);
        manifest_splits.push_back(ids);
      }
      if (!dev_working.empty()) {
        result.dev_curve.push_back(
            DevPoint{step, EvalDev(result.params, dev_working, config.decode,
                                   config.mwer.strip_token, config.workers)});
      }
    }
  }

  if (!out_dir.empty()) {
    nlohmann::json manifest;
    manifest["epochs"] = plan.epochs;
    manifest["num_splits"] = plan.num_splits;
    manifest["batch_size"] = config.batch_size;
    manifest["beam_size"] = config.decode.beam_size;
    manifest["decode_temperature"] = config.decode.temperature;
    manifest["recompute_temperature"] = config.mwer.temperature;
    manifest["workers"] = config.workers;
    manifest["adam_reset_per_split"] = config.adam_reset_per_split;
    manifest["splits"] = std::move(manifest_splits);
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
  }
  return result;
}

}  // namespace mwer
