// mwer/cli.cc
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

#include "mwer/cli.h"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "mwer/common.h"
#include "mwer/dataset.h"
#include "mwer/gradcheck.h"
#include "mwer/model.h"
#include "mwer/rescore.h"
#include "mwer/synth.h"
#include "mwer/trainer.h"
#include "mwer/vocab.h"
#include "mwer/wer.h"

namespace mwer {

namespace {

using nlohmann::json;

// Binds --config JSON keys to option targets. Values apply only to options
// the user did not pass on the command line; unknown keys and type
// mismatches are data errors with a field path.
class ConfigBinder {
 public:
  template <typename T>
  void Bind(CLI::App *cmd, const std::string &key, T *target) {
    appliers_[key] = [key, target](const json &value) {
      try {
        *target = value.get<T>();
      } catch (const json::exception &) {
        throw DataError("config." + key + ": unexpected value type");
      }
    };
    commands_[key] = cmd;
  }

  void Apply(const json &config) const {
    if (!config.is_object()) {
      throw DataError("config: expected a JSON object");
    }
    for (const auto &[key, value] : config.items()) {
      auto it = appliers_.find(key);
      if (it == appliers_.end()) {
        throw DataError("config: unknown field '" + key + "'");
      }
      const CLI::Option *opt = commands_.at(key)->get_option("--" + key);
      if (opt->count() > 0) continue;  // explicit flag wins
      it->second(value);
    }
  }

 private:
  std::map<std::string, std::function<void(const json &)>> appliers_;
  std::map<std::string, CLI::App *> commands_;
};

json LoadConfigFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception &e) {
    throw DataError("config file " + path + ": " + e.what());
  }
}

struct DataDir {
  Dataset train;
  Dataset dev;
  Dataset test;
  Vocab vocab;
};

DataDir LoadDataDir(const std::string &dir, bool need_test = false) {
  Vocab vocab = Vocab::Load(dir + "/vocab.json");
  DataDir data{Dataset{}, Dataset{}, Dataset{}, vocab};
  data.train = LoadDataset(dir + "/train.jsonl", vocab);
  data.dev = LoadDataset(dir + "/dev.jsonl", vocab);
  if (need_test) data.test = LoadDataset(dir + "/test.jsonl", vocab);
  return data;
}

// Shared flag bundles ------------------------------------------------------

struct ScheduleFlags {
  int warmup = 0;
  int constant = 0;
  int decay = 0;
  double lr_constant = 0.0;
  double lr_final = 0.0;

  void Register(CLI::App *cmd, ConfigBinder *binder,
                const TrainSchedule &defaults) {
    warmup = defaults.warmup_steps;
    constant = defaults.constant_steps;
    decay = defaults.decay_steps;
    lr_constant = defaults.lr_constant;
    lr_final = defaults.lr_final;
    binder->Bind(cmd, "warmup",
                 &warmup);
    cmd->add_option("--warmup", warmup, "linear warmup steps");
    binder->Bind(cmd, "constant", &constant);
    cmd->add_option("--constant", constant, "constant-phase steps");
    binder->Bind(cmd, "decay", &decay);
    cmd->add_option("--decay", decay, "exponential-decay steps");
    binder->Bind(cmd, "lr-constant", &lr_constant);
    cmd->add_option("--lr-constant", lr_constant, "plateau learning rate");
    binder->Bind(cmd, "lr-final", &lr_final);
    cmd->add_option("--lr-final", lr_final, "learning rate at decay end");
  }

  TrainSchedule Build() const {
    return TrainSchedule{warmup, constant, decay, lr_constant, lr_final};
  }
};

struct DimsFlags {
  int enc_hidden = 16;
  int embed_dim = 8;
  int pred_hidden = 16;
  int joint_dim = 16;

  void Register(CLI::App *cmd, ConfigBinder *binder) {
    binder->Bind(cmd, "enc-hidden", &enc_hidden);
    cmd->add_option("--enc-hidden", enc_hidden, "encoder hidden size");
    binder->Bind(cmd, "embed-dim", &embed_dim);
    cmd->add_option("--embed-dim", embed_dim, "predictor embedding size");
    binder->Bind(cmd, "pred-hidden", &pred_hidden);
    cmd->add_option("--pred-hidden", pred_hidden, "predictor hidden size");
    binder->Bind(cmd, "joint-dim", &joint_dim);
    cmd->add_option("--joint-dim", joint_dim, "joint projection size");
  }
};

// Subcommand runners -------------------------------------------------------

int RunGenSynth(const SynthSpec &spec, const std::string &out_dir,
                std::ostream &out) {
  SynthTask task = GenSynth(spec);
  WriteSynthTask(task, spec, out_dir);
  out << "wrote " << task.train.size() << " train / " << task.dev.size()
      << " dev / " << task.test.size() << " test utterances to " << out_dir
      << "\n";
  return kExitOk;
}

struct TrainRnntArgs {
  std::string data_dir;
  std::string out_path;
  std::string init_from;
  RnntTrainConfig config;
  DimsFlags dims;
  int log_every = 100;
};

int RunTrainRnnt(const TrainRnntArgs &args, std::ostream &out) {
  DataDir data = LoadDataDir(args.data_dir);
  ModelParams params;
  if (!args.init_from.empty()) {
    params = LoadCheckpoint(args.init_from);
  } else {
    ModelDims dims;
    dims.feat_dim = data.train.empty() ? 1 : data.train[0].features.cols();
    dims.vocab_size = data.vocab.size();
    dims.blank_id = data.vocab.blank_id();
    dims.eos_id = data.vocab.eos_id();
    dims.enc_hidden = args.dims.enc_hidden;
    dims.embed_dim = args.dims.embed_dim;
    dims.pred_hidden = args.dims.pred_hidden;
    dims.joint_dim = args.dims.joint_dim;
    params = InitParams(args.config.seed, dims);
  }

  TrainResult result = TrainRnnt(data.train, params, args.config);
  for (size_t i = 0; i < result.loss_curve.size(); ++i) {
    if (args.log_every > 0 && (i + 1) % args.log_every == 0) {
      out << "step " << (i + 1) << " loss " << result.loss_curve[i] << " lr "
          << LrAt(args.config.schedule, static_cast<int64_t>(i)) << "\n";
    }
  }
  SaveCheckpoint(result.params, args.out_path);
  out << "saved model to " << args.out_path << "\n";

  if (!data.dev.empty()) {
    DecodeConfig decode;
    const int strip =
        args.config.append_eos ? result.params.dims.eos_id : -1;
    decode.include_eos = args.config.append_eos;
    DevMetrics dev = EvalDev(result.params, data.dev, decode, strip, 1);
    out << "dev WER " << dev.wer() << " (sub " << dev.substitutions << " ins "
        << dev.insertions << " del " << dev.deletions << ")\n";
  }
  return kExitOk;
}

struct DecodeArgs {
  std::string model_path;
  std::string data_path;
  std::string vocab_path;
  std::string nbest_out;
  DecodeConfig config;
  int workers = 1;
};

int RunDecode(const DecodeArgs &args, std::ostream &out) {
  Vocab vocab = Vocab::Load(args.vocab_path);
  Dataset data = LoadDataset(args.data_path, vocab);
  ModelParams params = LoadCheckpoint(args.model_path);
  std::vector<NBestList> lists =
      DecodeDataset(params, data, args.config, args.workers);
  SaveNBestFile(lists, vocab, args.nbest_out);
  out << "decoded " << lists.size() << " utterances (beam "
      << args.config.beam_size << ", temperature " << args.config.temperature
      << ") to " << args.nbest_out << "\n";
  return kExitOk;
}

struct TrainMwerArgs {
  std::string data_dir;
  std::string model_path;
  std::string out_path;
  std::string run_dir;
  std::string mode = "onthefly";
  int splits = 8;
  int epochs = 1;
  MwerTrainConfig config;
};

int RunTrainMwer(const TrainMwerArgs &args, std::ostream &out) {
  DataDir data = LoadDataDir(args.data_dir);
  ModelParams params = LoadCheckpoint(args.model_path);

  MwerTrainConfig config = args.config;
  if (config.append_eos) {
    config.mwer.strip_token = params.dims.eos_id;
    config.decode.include_eos = true;
  }

  TrainResult result;
  if (args.mode == "onthefly") {
    result = TrainMwerOnTheFly(data.train, data.dev, params, config);
  } else if (args.mode == "semi") {
    if (args.run_dir.empty()) {
      throw CLI::ValidationError("--run-dir is required for --mode semi");
    }
    SemiPlan plan;
    plan.num_splits = args.splits;
    plan.epochs = args.epochs;
    result = TrainMwerSemi(data.train, data.dev, params, plan, config,
                           args.run_dir, &data.vocab);
  } else {
    throw CLI::ValidationError("--mode must be onthefly or semi");
  }

  SaveCheckpoint(result.params, args.out_path);
  out << "trained " << result.loss_curve.size() << " steps ("
      << result.skipped_utterances << " utterances skipped); saved model to "
      << args.out_path << "\n";
  for (const DevPoint &point : result.dev_curve) {
    out << "dev @ step " << point.step << ": expected errors "
        << point.metrics.mean_expected_errors << ", WER "
        << point.metrics.wer() << " (del " << point.metrics.deletions
        << ")\n";
  }
  return kExitOk;
}

struct RescoreArgs {
  std::string method = "rnnt";
  std::string nbest_in;
  std::string nbest_out;
  std::string vocab_path;
  std::string model_path;
  std::string data_path;
  std::string lm_path;
  RescoreConfig config;
  double temperature = 1.0;
};

int RunRescore(const RescoreArgs &args, std::ostream &out) {
  Vocab vocab = Vocab::Load(args.vocab_path);
  std::vector<NBestList> lists = LoadNBestFile(args.nbest_in, vocab);
  const bool use_rnnt = args.method == "rnnt" || args.method == "both";
  const bool use_lm = args.method == "lm" || args.method == "both";
  if (!use_rnnt && !use_lm) {
    throw CLI::ValidationError("--method must be rnnt, lm or both");
  }

  if (use_rnnt) {
    if (args.model_path.empty() || args.data_path.empty()) {
      throw CLI::ValidationError(
          "--method rnnt/both needs --model and --data");
    }
    ModelParams params = LoadCheckpoint(args.model_path);
    Dataset data = LoadDataset(args.data_path, vocab);
    std::map<std::string, const Utterance *> by_id;
    for (const Utterance &utt : data) by_id[utt.id] = &utt;
    for (NBestList &list : lists) {
      auto it = by_id.find(list.utterance_id);
      if (it == by_id.end()) {
        throw DataError("no features for utterance '" + list.utterance_id +
                        "'");
      }
      ModelScorer scorer(params, it->second->features);
      list = RnntRescore(std::move(list), scorer, args.temperature);
    }
  }
  if (use_lm) {
    if (args.lm_path.empty()) {
      throw CLI::ValidationError("--method lm/both needs --lm");
    }
    NGramLM lm = NGramLM::Load(args.lm_path);
    for (NBestList &list : lists) {
      list = LmRescore(std::move(list), lm, args.config, vocab);
    }
  }
  SaveNBestFile(lists, vocab, args.nbest_out);
  out << "rescored " << lists.size() << " lists (" << args.method << ") to "
      << args.nbest_out << "\n";
  return kExitOk;
}

struct TrainLmArgs {
  std::string data_dir;
  std::string out_path;
  int order = 3;
  double delta = 0.1;
};

int RunTrainLm(const TrainLmArgs &args, std::ostream &out) {
  DataDir data = LoadDataDir(args.data_dir);
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(data.train.size());
  for (const Utterance &utt : data.train) {
    corpus.push_back(data.vocab.Names(utt.reference, /*strip_eos=*/true));
  }
  NGramLM lm(args.order, args.delta);
  lm.Train(corpus);
  lm.Save(args.out_path);
  out << "trained order-" << args.order << " LM on " << corpus.size()
      << " sentences; saved to " << args.out_path << "\n";
  return kExitOk;
}

struct EvalWerArgs {
  std::string nbest_path;
  std::string refs_path;
  std::string vocab_path;
  std::string json_out;
  double baseline_wer = 0.0;  // 0 means "not provided"
  bool strip_eos = false;
};

int RunEvalWer(const EvalWerArgs &args, std::ostream &out) {
  Vocab vocab = Vocab::Load(args.vocab_path);
  std::vector<NBestList> hyps = LoadNBestFile(args.nbest_path, vocab);
  Dataset refs = LoadDataset(args.refs_path, vocab);
  const int strip = args.strip_eos ? vocab.eos_id() : -1;
  std::optional<double> baseline;
  if (args.baseline_wer > 0.0) baseline = args.baseline_wer;
  WerReport report = ComputeWer(hyps, refs, strip, baseline);
  PrintWerReport(out, report);
  if (!args.json_out.empty()) {
    std::ofstream json_file(args.json_out);
    if (!json_file) {
      throw DataError("cannot open report file: " + args.json_out);
    }
    json_file << WerReportToJson(report).dump(2) << "\n";
  }
  return kExitOk;
}

struct GradCheckArgs {
  GradCheckOptions options;
};

int RunGradCheck(const GradCheckArgs &args, std::ostream &out) {
  GradCheckReport report = RunGradChecks(args.options);
  out << "lattice gradient max rel error: " << report.lattice_max_rel_error
      << (report.lattice_ok ? " (ok)" : " (FAIL)") << "\n";
  out << "model gradient max rel error: " << report.model_max_rel_error
      << (report.model_ok ? " (ok)" : " (FAIL)") << "\n";
  out << "expected-error gradient max rel error: "
      << report.mwer_max_rel_error << (report.mwer_ok ? " (ok)" : " (FAIL)")
      << "\n";
  if (!report.ok()) {
    throw NumericError("finite-difference gradient check failed");
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string> &argv, std::ostream &out) {
  CLI::App app{"sequence transducer training with expected word error "
               "minimization"};
  app.require_subcommand(1);
  ConfigBinder binder;

  // Every command accepts --seed and --config.
  uint64_t seed = 0;
  std::string config_path;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--config", config_path, "JSON config file");
  };

  int exit_code = kExitOk;
  auto finish = [&](const std::function<int()> &body) {
    if (!config_path.empty()) binder.Apply(LoadConfigFile(config_path));
    exit_code = body();
  };

  // gen-synth ---------------------------------------------------------------
  SynthSpec synth_spec;
  std::string synth_out;
  CLI::App *gen = app.add_subcommand("gen-synth",
                                     "generate a synthetic template task");
  gen->add_option("--out", synth_out, "output directory")->required();
  add_common(gen);
  binder.Bind(gen, "num-train", &synth_spec.num_train);
  gen->add_option("--num-train", synth_spec.num_train, "training utterances");
  binder.Bind(gen, "num-dev", &synth_spec.num_dev);
  gen->add_option("--num-dev", synth_spec.num_dev, "dev utterances");
  binder.Bind(gen, "num-test", &synth_spec.num_test);
  gen->add_option("--num-test", synth_spec.num_test, "test utterances");
  binder.Bind(gen, "vocab", &synth_spec.vocab_size);
  gen->add_option("--vocab", synth_spec.vocab_size, "real token count");
  binder.Bind(gen, "min-tokens", &synth_spec.min_tokens);
  gen->add_option("--min-tokens", synth_spec.min_tokens, "shortest utterance");
  binder.Bind(gen, "max-tokens", &synth_spec.max_tokens);
  gen->add_option("--max-tokens", synth_spec.max_tokens, "longest utterance");
  binder.Bind(gen, "frames-per-token", &synth_spec.frames_per_token);
  gen->add_option("--frames-per-token", synth_spec.frames_per_token,
                  "template frames per token");
  binder.Bind(gen, "feat-dim", &synth_spec.feat_dim);
  gen->add_option("--feat-dim", synth_spec.feat_dim, "feature width");
  binder.Bind(gen, "noise", &synth_spec.noise);
  gen->add_option("--noise", synth_spec.noise, "additive noise level");
  binder.Bind(gen, "confusability", &synth_spec.confusability);
  gen->add_option("--confusability", synth_spec.confusability,
                  "template blending within confusion pairs (0..1)");
  binder.Bind(gen, "confusion-pairs", &synth_spec.confusion_pairs);
  gen->add_option("--confusion-pairs", synth_spec.confusion_pairs,
                  "number of confusable token pairs");
  binder.Bind(gen, "eos", &synth_spec.add_eos);
  gen->add_flag("--eos", synth_spec.add_eos, "reserve an EOS token");
  gen->callback([&] {
    finish([&] {
      synth_spec.seed = seed;
      return RunGenSynth(synth_spec, synth_out, out);
    });
  });

  // train-rnnt --------------------------------------------------------------
  TrainRnntArgs rnnt_args;
  ScheduleFlags rnnt_schedule;
  CLI::App *train_rnnt =
      app.add_subcommand("train-rnnt", "maximum-likelihood training");
  train_rnnt->add_option("--data", rnnt_args.data_dir,
                         "task directory (gen-synth layout)")->required();
  train_rnnt->add_option("--out", rnnt_args.out_path, "output checkpoint")
      ->required();
  train_rnnt->add_option("--init-from", rnnt_args.init_from,
                         "continue from a checkpoint");
  add_common(train_rnnt);
  binder.Bind(train_rnnt, "steps", &rnnt_args.config.steps);
  train_rnnt->add_option("--steps", rnnt_args.config.steps, "training steps");
  binder.Bind(train_rnnt, "batch", &rnnt_args.config.batch_size);
  train_rnnt->add_option("--batch", rnnt_args.config.batch_size,
                         "utterances per step");
  binder.Bind(train_rnnt, "eos", &rnnt_args.config.append_eos);
  train_rnnt->add_flag("--eos", rnnt_args.config.append_eos,
                       "append EOS to references");
  binder.Bind(train_rnnt, "grad-clip", &rnnt_args.config.grad_clip_norm);
  train_rnnt->add_option("--grad-clip", rnnt_args.config.grad_clip_norm,
                         "max global gradient norm (0 = off)");
  binder.Bind(train_rnnt, "log-every", &rnnt_args.log_every);
  train_rnnt->add_option("--log-every", rnnt_args.log_every,
                         "loss print cadence");
  rnnt_schedule.Register(train_rnnt, &binder, RnntTrainConfig{}.schedule);
  rnnt_args.dims.Register(train_rnnt, &binder);
  train_rnnt->callback([&] {
    finish([&] {
      rnnt_args.config.seed = seed;
      rnnt_args.config.schedule = rnnt_schedule.Build();
      return RunTrainRnnt(rnnt_args, out);
    });
  });

  // decode --------------------------------------------------------------
  DecodeArgs decode_args;
  CLI::App *decode = app.add_subcommand("decode", "beam-search decoding");
  decode->add_option("--model", decode_args.model_path, "model checkpoint")
      ->required();
  decode->add_option("--data", decode_args.data_path, "utterance JSONL file")
      ->required();
  decode->add_option("--vocab", decode_args.vocab_path, "vocabulary file")
      ->required();
  decode->add_option("--nbest-out", decode_args.nbest_out,
                     "output N-best JSONL")->required();
  add_common(decode);
  binder.Bind(decode, "beam", &decode_args.config.beam_size);
  decode->add_option("--beam", decode_args.config.beam_size, "beam size");
  binder.Bind(decode, "temperature", &decode_args.config.temperature);
  decode->add_option("--temperature", decode_args.config.temperature,
                     "softmax temperature");
  binder.Bind(decode, "max-symbols", &decode_args.config.max_symbols_per_frame);
  decode->add_option("--max-symbols", decode_args.config.max_symbols_per_frame,
                     "emitted-symbol cap per frame");
  binder.Bind(decode, "eos", &decode_args.config.include_eos);
  decode->add_flag("--eos", decode_args.config.include_eos,
                   "finalize hypotheses on EOS");
  binder.Bind(decode, "workers", &decode_args.workers);
  decode->add_option("--workers", decode_args.workers, "decode threads");
  decode->callback([&] {
    finish([&] { return RunDecode(decode_args, out); });
  });

  // train-mwer ----------------------------------------------------------
  TrainMwerArgs mwer_args;
  ScheduleFlags mwer_schedule;
  CLI::App *train_mwer = app.add_subcommand(
      "train-mwer", "expected word error fine-tuning of a seed model");
  train_mwer->add_option("--data", mwer_args.data_dir, "task directory")
      ->required();
  train_mwer->add_option("--model", mwer_args.model_path, "seed checkpoint")
      ->required();
  train_mwer->add_option("--out", mwer_args.out_path, "output checkpoint")
      ->required();
  add_common(train_mwer);
  binder.Bind(train_mwer, "mode", &mwer_args.mode);
  train_mwer->add_option("--mode", mwer_args.mode, "onthefly or semi");
  binder.Bind(train_mwer, "splits", &mwer_args.splits);
  train_mwer->add_option("--splits", mwer_args.splits,
                         "number of data splits (semi)");
  binder.Bind(train_mwer, "epochs", &mwer_args.epochs);
  train_mwer->add_option("--epochs", mwer_args.epochs, "epochs (semi)");
  binder.Bind(train_mwer, "workers", &mwer_args.config.workers);
  train_mwer->add_option("--workers", mwer_args.config.workers,
                         "decode threads");
  train_mwer->add_option("--run-dir", mwer_args.run_dir,
                         "artifact directory for semi mode");
  binder.Bind(train_mwer, "steps", &mwer_args.config.steps);
  train_mwer->add_option("--steps", mwer_args.config.steps,
                         "training steps (onthefly)");
  binder.Bind(train_mwer, "batch", &mwer_args.config.batch_size);
  train_mwer->add_option("--batch", mwer_args.config.batch_size,
                         "utterances per step");
  binder.Bind(train_mwer, "beam", &mwer_args.config.decode.beam_size);
  train_mwer->add_option("--beam", mwer_args.config.decode.beam_size,
                         "N-best beam size");
  binder.Bind(train_mwer, "temperature",
              &mwer_args.config.decode.temperature);
  train_mwer->add_option("--temperature",
                         mwer_args.config.decode.temperature,
                         "decode-time softmax temperature");
  binder.Bind(train_mwer, "recompute-temperature",
              &mwer_args.config.mwer.temperature);
  train_mwer->add_option("--recompute-temperature",
                         mwer_args.config.mwer.temperature,
                         "temperature for exact score recomputation");
  binder.Bind(train_mwer, "add-reference",
              &mwer_args.config.mwer.add_reference);
  train_mwer->add_flag("--add-reference",
                       mwer_args.config.mwer.add_reference,
                       "force the reference into each N-best list");
  binder.Bind(train_mwer, "eos", &mwer_args.config.append_eos);
  train_mwer->add_flag("--eos", mwer_args.config.append_eos,
                       "EOS-aware training (append to refs, strip for R)");
  binder.Bind(train_mwer, "grad-clip", &mwer_args.config.grad_clip_norm);
  train_mwer->add_option("--grad-clip", mwer_args.config.grad_clip_norm,
                         "max global gradient norm (0 = off)");
  binder.Bind(train_mwer, "dev-every", &mwer_args.config.dev_every);
  train_mwer->add_option("--dev-every", mwer_args.config.dev_every,
                         "dev monitoring cadence (onthefly)");
  binder.Bind(train_mwer, "adam-reset-per-split",
              &mwer_args.config.adam_reset_per_split);
  train_mwer->add_flag("--adam-reset-per-split",
                       mwer_args.config.adam_reset_per_split,
                       "restart optimizer moments at each split");
  mwer_schedule.Register(train_mwer, &binder, MwerTrainConfig{}.schedule);
  train_mwer->callback([&] {
    finish([&] {
      mwer_args.config.schedule = mwer_schedule.Build();
      return RunTrainMwer(mwer_args, out);
    });
  });

  // rescore -------------------------------------------------------------
  RescoreArgs rescore_args;
  bool no_length_norm = false;
  CLI::App *rescore = app.add_subcommand("rescore", "second-pass re-ranking");
  rescore->add_option("--nbest", rescore_args.nbest_in, "input N-best JSONL")
      ->required();
  rescore->add_option("--nbest-out", rescore_args.nbest_out,
                      "output N-best JSONL")->required();
  rescore->add_option("--vocab", rescore_args.vocab_path, "vocabulary file")
      ->required();
  add_common(rescore);
  binder.Bind(rescore, "method", &rescore_args.method);
  rescore->add_option("--method", rescore_args.method, "rnnt, lm or both");
  rescore->add_option("--model", rescore_args.model_path,
                      "model checkpoint (rnnt/both)");
  rescore->add_option("--data", rescore_args.data_path,
                      "utterance JSONL with features (rnnt/both)");
  rescore->add_option("--lm", rescore_args.lm_path, "LM file (lm/both)");
  binder.Bind(rescore, "lambda", &rescore_args.config.lm_weight);
  rescore->add_option("--lambda", rescore_args.config.lm_weight, "LM weight");
  binder.Bind(rescore, "temperature", &rescore_args.temperature);
  rescore->add_option("--temperature", rescore_args.temperature,
                      "rescoring softmax temperature");
  rescore->add_flag("--no-length-norm", no_length_norm,
                    "disable LM length normalization");
  rescore->callback([&] {
    finish([&] {
      rescore_args.config.length_normalize = !no_length_norm;
      return RunRescore(rescore_args, out);
    });
  });

  // train-lm ------------------------------------------------------------
  TrainLmArgs lm_args;
  CLI::App *train_lm = app.add_subcommand(
      "train-lm", "count n-gram LM over training references");
  train_lm->add_option("--data", lm_args.data_dir, "task directory")
      ->required();
  train_lm->add_option("--out", lm_args.out_path, "output LM file")
      ->required();
  add_common(train_lm);
  binder.Bind(train_lm, "order", &lm_args.order);
  train_lm->add_option("--order", lm_args.order, "n-gram order");
  binder.Bind(train_lm, "delta", &lm_args.delta);
  train_lm->add_option("--delta", lm_args.delta, "add-delta smoothing");
  train_lm->callback([&] {
    finish([&] { return RunTrainLm(lm_args, out); });
  });

  // eval-wer ------------------------------------------------------------
  EvalWerArgs wer_args;
  CLI::App *eval_wer = app.add_subcommand("eval-wer", "corpus WER report");
  eval_wer->add_option("--nbest", wer_args.nbest_path, "hypothesis JSONL")
      ->required();
  eval_wer->add_option("--refs", wer_args.refs_path, "reference JSONL")
      ->required();
  eval_wer->add_option("--vocab", wer_args.vocab_path, "vocabulary file")
      ->required();
  add_common(eval_wer);
  binder.Bind(eval_wer, "baseline-wer", &wer_args.baseline_wer);
  eval_wer->add_option("--baseline-wer", wer_args.baseline_wer,
                       "baseline WER for normalization");
  eval_wer->add_option("--json-out", wer_args.json_out,
                       "machine-readable report path");
  binder.Bind(eval_wer, "strip-eos", &wer_args.strip_eos);
  eval_wer->add_flag("--strip-eos", wer_args.strip_eos,
                     "strip the EOS token before scoring");
  eval_wer->callback([&] {
    finish([&] { return RunEvalWer(wer_args, out); });
  });

  // gradcheck -----------------------------------------------------------
  GradCheckArgs grad_args;
  CLI::App *gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference verification of all gradients");
  add_common(gradcheck);
  binder.Bind(gradcheck, "lattice-instances",
              &grad_args.options.lattice_instances);
  gradcheck->add_option("--lattice-instances",
                        grad_args.options.lattice_instances,
                        "loss-vs-logits instances");
  binder.Bind(gradcheck, "model-instances",
              &grad_args.options.model_instances);
  gradcheck->add_option("--model-instances", grad_args.options.model_instances,
                        "loss-vs-parameters instances");
  binder.Bind(gradcheck, "mwer-instances", &grad_args.options.mwer_instances);
  gradcheck->add_option("--mwer-instances", grad_args.options.mwer_instances,
                        "expected-error chain instances");
  gradcheck->callback([&] {
    finish([&] {
      grad_args.options.seed = seed;
      return RunGradCheck(grad_args, out);
    });
  });

  // ----------------------------------------------------------------------
  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return kExitOk;  // --help
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError &e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return exit_code;
}

}  // namespace mwer
