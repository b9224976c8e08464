// tests/io_test.cc

#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "doctest.h"
#include "mwer/common.h"
#include "mwer/dataset.h"
#include "mwer/edit_distance.h"
#include "mwer/rng.h"
#include "mwer/synth.h"
#include "mwer/vocab.h"
#include "mwer/wer.h"

namespace mwer {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const std::string &path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

TEST_CASE("vocab: round trip and validation") {
  Vocab vocab({"<blank>", "a", "b", "<eos>"}, 0, 3);
  const std::string path = "/tmp/mwer_vocab_test.json";
  vocab.Save(path);
  Vocab loaded = Vocab::Load(path);
  CHECK(loaded.size() == 4);
  CHECK(loaded.blank_id() == 0);
  CHECK(loaded.eos_id() == 3);
  CHECK(loaded.Id("b") == 2);
  CHECK(loaded.Name(1) == "a");
  CHECK_THROWS_AS(loaded.Id("zzz"), DataError);
  fs::remove(path);

  CHECK_THROWS_AS(Vocab({"a", "a"}, 0), std::invalid_argument);
  CHECK_THROWS_AS(Vocab({"a", "b"}, 0, 0), std::invalid_argument);
}

TEST_CASE("dataset and nbest files: bit-exact round trip") {
  Rng rng(201);
  Vocab vocab({"<blank>", "a", "b", "c"}, 0);

  Dataset dataset;
  for (int i = 0; i < 5; ++i) {
    Utterance utt;
    utt.id = "utt-" + std::to_string(i);
    utt.features = Matrix(3, 2);
    for (double &v : utt.features.data()) v = rng.Uniform(-3.0, 3.0);
    utt.reference = {rng.UniformInt(1, 3), rng.UniformInt(1, 3)};
    dataset.push_back(std::move(utt));
  }
  const std::string data_path = "/tmp/mwer_dataset_test.jsonl";
  SaveDataset(dataset, vocab, data_path);
  Dataset loaded = LoadDataset(data_path, vocab);
  REQUIRE(loaded.size() == dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    CHECK(loaded[i].id == dataset[i].id);
    CHECK(loaded[i].reference == dataset[i].reference);
    CHECK(loaded[i].features.data() == dataset[i].features.data());
  }

  // Re-saving the loaded data must be byte-identical (lossless reals).
  const std::string again = "/tmp/mwer_dataset_test2.jsonl";
  SaveDataset(loaded, vocab, again);
  CHECK(Slurp(data_path) == Slurp(again));
  fs::remove(data_path);
  fs::remove(again);

  std::vector<NBestList> lists;
  for (int i = 0; i < 4; ++i) {
    NBestList list;
    list.utterance_id = "utt-" + std::to_string(i);
    list.reference = {1, 2};
    for (int h = 0; h < 3; ++h) {
      list.hypotheses.push_back(Hypothesis{
          {rng.UniformInt(1, 3)}, rng.Uniform(-20.0, 0.0),
          h == 0 ? ScoreSource::kExact : ScoreSource::kBeam});
    }
    SortHypotheses(&list.hypotheses);
    lists.push_back(std::move(list));
  }
  const std::string nbest_path = "/tmp/mwer_nbest_test.jsonl";
  SaveNBestFile(lists, vocab, nbest_path);
  auto loaded_lists = LoadNBestFile(nbest_path, vocab);
  REQUIRE(loaded_lists.size() == lists.size());
  for (size_t i = 0; i < lists.size(); ++i) {
    CHECK(loaded_lists[i].utterance_id == lists[i].utterance_id);
    CHECK(loaded_lists[i].reference == lists[i].reference);
    REQUIRE(loaded_lists[i].hypotheses.size() == lists[i].hypotheses.size());
    for (size_t h = 0; h < lists[i].hypotheses.size(); ++h) {
      CHECK(loaded_lists[i].hypotheses[h].tokens ==
            lists[i].hypotheses[h].tokens);
      CHECK(loaded_lists[i].hypotheses[h].log_score ==
            lists[i].hypotheses[h].log_score);
      CHECK(loaded_lists[i].hypotheses[h].source ==
            lists[i].hypotheses[h].source);
    }
  }
  const std::string nbest_again = "/tmp/mwer_nbest_test2.jsonl";
  SaveNBestFile(loaded_lists, vocab, nbest_again);
  CHECK(Slurp(nbest_path) == Slurp(nbest_again));
  fs::remove(nbest_path);
  fs::remove(nbest_again);
}

TEST_CASE("dataset loader: malformed lines carry file and line context") {
  Vocab vocab({"<blank>", "a"}, 0);
  const std::string path = "/tmp/mwer_bad_dataset.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"u0","features":[[0.5]],"reference":["a"]})" << "\n";
    out << R"({"id":"u1","features":[[0.5],[0.25,0.5]],"reference":[]})"
        << "\n";
  }
  try {
    LoadDataset(path, vocab);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("gen_synth: deterministic, shaped, refuses tiny vocabularies") {
  SynthSpec spec;
  spec.num_train = 12;
  spec.num_dev = 4;
  spec.num_test = 4;
  spec.vocab_size = 6;
  spec.confusion_pairs = 2;
  spec.confusability = 0.7;
  spec.seed = 7;

  const std::string dir_a = "/tmp/mwer_synth_a";
  const std::string dir_b = "/tmp/mwer_synth_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  WriteSynthTask(GenSynth(spec), spec, dir_a);
  WriteSynthTask(GenSynth(spec), spec, dir_b);
  for (const char *name :
       {"train.jsonl", "dev.jsonl", "test.jsonl", "vocab.json", "task.json"}) {
    CHECK(Slurp(dir_a + "/" + std::string(name)) ==
          Slurp(dir_b + "/" + std::string(name)));
  }

  SynthTask task = GenSynth(spec);
  CHECK(task.train.size() == 12);
  CHECK(task.vocab.size() == 7);  // blank + 6 tokens
  for (const Utterance &utt : task.train) {
    CHECK(utt.features.rows() ==
          static_cast<int>(utt.reference.size()) * spec.frames_per_token);
    const int len = static_cast<int>(utt.reference.size());
    CHECK(len >= spec.min_tokens);
    CHECK(len <= spec.max_tokens);
  }

  SynthSpec tiny = spec;
  tiny.vocab_size = 1;
  CHECK_THROWS_AS(GenSynth(tiny), std::invalid_argument);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("compute_wer: hand cases and id mismatch errors") {
  Vocab vocab({"<blank>", "a", "b", "c", "d"}, 0);
  Dataset refs;
  {
    Utterance utt;
    utt.id = "u0";
    utt.features = Matrix(1, 1);
    utt.reference = {1, 2, 3, 4};  // a b c d
    refs.push_back(utt);
  }

  NBestList exact;
  exact.utterance_id = "u0";
  exact.hypotheses.push_back(Hypothesis{{1, 2, 3, 4}, -1.0,
                                        ScoreSource::kBeam});
  std::vector<NBestList> perfect = {exact};
  WerReport zero = ComputeWer(perfect, refs);
  CHECK(zero.wer() == 0.0);
  CHECK(zero.total_errors() == 0);

  NBestList half = exact;
  half.hypotheses[0].tokens = {1, 2};  // "a b" vs "a b c d"
  std::vector<NBestList> halves = {half};
  WerReport report = ComputeWer(halves, refs, -1, 0.5);
  CHECK(report.wer() == doctest::Approx(0.5));
  CHECK(report.deletions == 2);
  CHECK(*report.normalized_wer == doctest::Approx(1.0));

  // Baseline against itself normalizes to exactly 1.
  WerReport self = ComputeWer(halves, refs, -1, report.wer());
  CHECK(*self.normalized_wer == doctest::Approx(1.0).epsilon(1e-12));

  NBestList stranger = exact;
  stranger.utterance_id = "zz";
  std::vector<NBestList> extra = {exact, stranger};
  CHECK_THROWS_AS(ComputeWer(extra, refs), DataError);
  std::vector<NBestList> none;
  CHECK_THROWS_AS(ComputeWer(none, refs), DataError);
}

TEST_CASE("compute_wer: agrees with an independent per-utterance scorer") {
  // Second implementation: plain O(nm) DP tracking only the distance.
  const auto ref_distance = [](const std::vector<int> &a,
                               const std::vector<int> &b) {
    std::vector<std::vector<int>> d(a.size() + 1,
                                    std::vector<int>(b.size() + 1, 0));
    for (size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
    for (size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
      for (size_t j = 1; j <= b.size(); ++j) {
        const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
        d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
      }
    }
    return d[a.size()][b.size()];
  };

  Rng rng(211);
  Dataset refs;
  std::vector<NBestList> hyps;
  int64_t expected_errors = 0;
  int64_t expected_tokens = 0;
  for (int i = 0; i < 30; ++i) {
    Utterance utt;
    utt.id = "u" + std::to_string(i);
    utt.features = Matrix(1, 1);
    for (int j = rng.UniformInt(0, 5); j > 0; --j) {
      utt.reference.push_back(rng.UniformInt(1, 4));
    }
    NBestList list;
    list.utterance_id = utt.id;
    std::vector<int> hyp;
    for (int j = rng.UniformInt(0, 5); j > 0; --j) {
      hyp.push_back(rng.UniformInt(1, 4));
    }
    list.hypotheses.push_back(Hypothesis{hyp, -1.0, ScoreSource::kBeam});
    expected_errors += ref_distance(hyp, utt.reference);
    expected_tokens += static_cast<int64_t>(utt.reference.size());
    refs.push_back(std::move(utt));
    hyps.push_back(std::move(list));
  }
  WerReport report = ComputeWer(hyps, refs);
  CHECK(report.total_errors() == expected_errors);
  CHECK(report.ref_tokens == expected_tokens);
}

}  // namespace
}  // namespace mwer
