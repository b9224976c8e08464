// tests/model_test.cc

#include "mwer/model.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "mwer/common.h"
#include "mwer/lattice.h"
#include "mwer/rng.h"
#include "test_util.h"

namespace mwer {
namespace {

ModelDims TinyDims(int K = 4) {
  ModelDims d;
  d.feat_dim = 3;
  d.vocab_size = K;
  d.blank_id = 0;
  d.enc_hidden = 4;
  d.embed_dim = 3;
  d.pred_hidden = 4;
  d.joint_dim = 4;
  return d;
}

Matrix RandomFeatures(Rng &rng, int T, int F) {
  Matrix m(T, F);
  for (double &v : m.data()) v = rng.Uniform(-1.0, 1.0);
  return m;
}

TEST_CASE("forward_lattice: zero weights give uniform posteriors") {
  ModelParams params = ZeroParams(TinyDims());
  Matrix features(2, 3, 0.5);
  std::vector<int> y = {1};
  LogitLattice lattice = ForwardLattice(params, features, y);
  for (double v : lattice.values().data()) CHECK(v == 0.0);
  LogPosteriorLattice post = Normalize(lattice, 1.0);
  CHECK(post(1, 1, 2) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("forward_lattice: empty reference uses the start state only") {
  Rng rng(3);
  ModelParams params = InitParams(7, TinyDims());
  Matrix features = RandomFeatures(rng, 3, 3);
  LogitLattice lattice = ForwardLattice(params, features, {});
  CHECK(lattice.num_frames() == 3);
  CHECK(lattice.num_labels() == 0);
  CHECK(lattice.vocab_size() == 4);
}

TEST_CASE("forward_lattice: deterministic and validates inputs") {
  Rng rng(5);
  ModelParams params = InitParams(11, TinyDims());
  Matrix features = RandomFeatures(rng, 4, 3);
  std::vector<int> y = {2, 3};
  LogitLattice a = ForwardLattice(params, features, y);
  LogitLattice b = ForwardLattice(params, features, y);
  CHECK(a.values().data() == b.values().data());  // bit-identical

  Matrix wrong_width(4, 2, 0.0);
  CHECK_THROWS_AS(ForwardLattice(params, wrong_width, y),
                  std::invalid_argument);
  std::vector<int> with_blank = {0};
  CHECK_THROWS_AS(ForwardLattice(params, features, with_blank),
                  std::invalid_argument);
}

TEST_CASE("init_params: seeded and bounded") {
  ModelParams a = InitParams(123, TinyDims());
  ModelParams b = InitParams(123, TinyDims());
  ModelParams c = InitParams(124, TinyDims());
  bool any_diff = false;
  for (size_t i = 0; i < a.Tensors().size(); ++i) {
    auto ta = a.Tensors()[i].second, tb = b.Tensors()[i].second,
         tc = c.Tensors()[i].second;
    CHECK(ta->data() == tb->data());
    if (ta->data() != tc->data()) any_diff = true;
    const double bound = 1.0 / std::sqrt(static_cast<double>(ta->cols()));
    for (double v : ta->data()) CHECK(std::abs(v) <= bound);
  }
  CHECK(any_diff);
}

TEST_CASE("backward_lattice: zero logit grads give zero parameter grads") {
  Rng rng(9);
  ModelParams params = InitParams(17, TinyDims());
  Matrix features = RandomFeatures(rng, 3, 3);
  std::vector<int> y = {1};
  Tensor3 zeros(3, 2, 4, 0.0);
  ModelParams grads = BackwardLattice(params, features, y, zeros);
  for (const auto &[name, tensor] : grads.Tensors()) {
    for (double v : tensor->data()) CHECK(v == 0.0);
  }
}

TEST_CASE("backward_lattice: parameter grads match finite differences") {
  Rng rng(13);
  ModelDims dims = TinyDims();
  ModelParams params = InitParams(29, dims);
  Matrix features = RandomFeatures(rng, 4, 3);
  std::vector<int> y = {1, 2};

  const auto loss_at = [&](const ModelParams &p) {
    LogitLattice lattice = ForwardLattice(p, features, y);
    return RnntLossAndGrad(lattice, y, 1.0).loss;
  };

  LogitLattice lattice = ForwardLattice(params, features, y);
  RnntLossResult loss = RnntLossAndGrad(lattice, y, 1.0);
  ModelParams grads = BackwardLattice(params, features, y, loss.logit_grad);

  const double h = 1e-5;
  auto tensors = params.Tensors();
  auto grad_tensors = grads.Tensors();
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    Matrix *tensor = tensors[ti].second;
    const Matrix *grad = grad_tensors[ti].second;
    std::vector<double> analytic, numeric;
    // Up to 20 randomly chosen entries per tensor.
    const size_t n = tensor->data().size();
    for (int probe = 0; probe < 20; ++probe) {
      const size_t e = rng.UniformInt(n);
      const double saved = tensor->data()[e];
      tensor->data()[e] = saved + h;
      const double plus = loss_at(params);
      tensor->data()[e] = saved - h;
      const double minus = loss_at(params);
      tensor->data()[e] = saved;
      analytic.push_back(grad->data()[e]);
      numeric.push_back((plus - minus) / (2.0 * h));
    }
    CHECK(test::MaxRelError(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("backward_lattice: rejects mismatched grad shape") {
  Rng rng(15);
  ModelParams params = InitParams(31, TinyDims());
  Matrix features = RandomFeatures(rng, 3, 3);
  std::vector<int> y = {1};
  Tensor3 bad(3, 3, 4, 0.0);
  CHECK_THROWS_AS(BackwardLattice(params, features, y, bad),
                  std::invalid_argument);
}

TEST_CASE("prefix consistency: encoder is causal, predictor depends on "
          "consumed labels only") {
  Rng rng(21);
  ModelParams params = InitParams(37, TinyDims());
  Matrix features = RandomFeatures(rng, 5, 3);
  std::vector<int> y = {1, 2, 3};
  LogitLattice full = ForwardLattice(params, features, y);

  // Truncating trailing frames must not change earlier rows.
  Matrix head(3, 3);
  for (int t = 0; t < 3; ++t) {
    for (int f = 0; f < 3; ++f) head(t, f) = features(t, f);
  }
  LogitLattice trunc = ForwardLattice(params, head, y);
  for (int t = 0; t < 3; ++t) {
    for (int u = 0; u <= 3; ++u) {
      for (int k = 0; k < 4; ++k) CHECK(trunc(t, u, k) == full.values()(t, u, k));
    }
  }

  // Truncating trailing labels must not change earlier columns.
  std::vector<int> y_head = {1, 2};
  LogitLattice fewer = ForwardLattice(params, features, y_head);
  for (int t = 0; t < 5; ++t) {
    for (int u = 0; u <= 2; ++u) {
      for (int k = 0; k < 4; ++k) CHECK(fewer(t, u, k) == full.values()(t, u, k));
    }
  }
}

TEST_CASE("checkpoint: round trip is bit exact, corrupt files are rejected") {
  ModelParams params = InitParams(41, TinyDims(5));
  const std::string path = "/tmp/mwer_model_test_ckpt.json";
  SaveCheckpoint(params, path);
  ModelParams loaded = LoadCheckpoint(path);
  CHECK(loaded.dims == params.dims);
  auto orig = params.Tensors();
  auto copy = loaded.Tensors();
  for (size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i].second->data() == copy[i].second->data());
  }

  CHECK_THROWS_AS(LoadCheckpoint("/tmp/does_not_exist_mwer.json"), DataError);

  // Truncated parameter array.
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    auto pos = text.find("\"enc_bias\":[");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"enc_bias\":[1.0,");
    std::ofstream out(path);
    out << text;
  }
  CHECK_THROWS_AS(LoadCheckpoint(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("model scorer: incremental path matches the batch lattice") {
  Rng rng(25);
  ModelParams params = InitParams(43, TinyDims());
  Matrix features = RandomFeatures(rng, 4, 3);
  std::vector<int> y = {2, 1};
  LogitLattice lattice = ForwardLattice(params, features, y);

  ModelScorer scorer(params, features);
  TransducerScorer::State state = scorer.StartState();
  for (int u = 0; u <= 2; ++u) {
    for (int t = 0; t < 4; ++t) {
      std::vector<double> z = scorer.Logits(t, state);
      for (int k = 0; k < 4; ++k) CHECK(z[k] == lattice(t, u, k));
    }
    if (u < 2) state = scorer.Advance(state, y[u]);
  }

  CHECK_THROWS_AS(scorer.Advance(state, 0), std::invalid_argument);
  Matrix empty(0, 3);
  CHECK_THROWS_AS(ModelScorer(params, empty), std::invalid_argument);
}

}  // namespace
}  // namespace mwer
