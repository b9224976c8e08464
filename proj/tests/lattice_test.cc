// tests/lattice_test.cc

#include "mwer/lattice.h"

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mwer/common.h"
#include "mwer/rng.h"
#include "test_util.h"

namespace mwer {
namespace {

LogPosteriorLattice UniformPosterior(int T, int U, int K, int blank_id = 0) {
  Tensor3 lp(T, U + 1, K, -std::log(static_cast<double>(K)));
  return LogPosteriorLattice(std::move(lp), blank_id, 1.0);
}

TEST_CASE("normalize: uniform zero logits give ln(1/K)") {
  LogitLattice lattice(Tensor3(2, 2, 3, 0.0), 0);
  LogPosteriorLattice post = Normalize(lattice, 1.0);
  for (int t = 0; t < 2; ++t) {
    for (int u = 0; u < 2; ++u) {
      for (int k = 0; k < 3; ++k) {
        CHECK(post(t, u, k) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("normalize: high temperature approaches uniform") {
  Tensor3 v(1, 1, 3, 0.0);
  v(0, 0, 0) = 2.0;
  LogitLattice lattice(std::move(v), 0);
  LogPosteriorLattice post = Normalize(lattice, 1e6);
  double lo = post(0, 0, 0), hi = post(0, 0, 0);
  for (int k = 0; k < 3; ++k) {
    lo = std::min(lo, post(0, 0, k));
    hi = std::max(hi, post(0, 0, k));
  }
  CHECK(hi - lo < 1e-5);
}

TEST_CASE("normalize: rows logsumexp to zero for random lattices") {
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    LogitLattice lattice = test::RandomLattice(rng, 4, 3, 5);
    const double temp = rng.Uniform(0.3, 2.0);
    LogPosteriorLattice post = Normalize(lattice, temp);
    for (int t = 0; t < post.num_frames(); ++t) {
      for (int u = 0; u <= post.num_labels(); ++u) {
        double acc = kNegInf;
        for (int k = 0; k < post.vocab_size(); ++k) {
          acc = LogSumExp(acc, post(t, u, k));
        }
        CHECK(std::abs(acc) < 1e-10);
      }
    }
  }
}

TEST_CASE("normalize: rejects bad inputs") {
  CHECK_THROWS_AS(Normalize(LogitLattice(Tensor3(1, 1, 2, 0.0), 0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Normalize(LogitLattice(Tensor3(1, 1, 2, 0.0), 0), -1.0),
                  std::invalid_argument);
  Tensor3 bad(1, 1, 2, 0.0);
  bad(0, 0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(LogitLattice(std::move(bad), 0), std::invalid_argument);
  CHECK_THROWS_AS(LogitLattice(Tensor3(1, 1, 2, 0.0), 5),
                  std::invalid_argument);
}

TEST_CASE("forward_backward: single blank emission") {
  LogPosteriorLattice post = UniformPosterior(1, 0, 3);
  AlphaBeta ab = ForwardBackward(post, {});
  CHECK(ab.alpha(0, 0) == 0.0);
  CHECK(ab.beta(0, 0) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
  CHECK(SequenceLogProb(post, {}) ==
        doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("forward_backward: T=2 U=1 uniform matches the two hand paths") {
  // Paths (y, blank, blank) and (blank, y, blank): 2 * (1/3)^3.
  LogPosteriorLattice post = UniformPosterior(2, 1, 3);
  std::vector<int> y = {1};
  const double expected = std::log(2.0 / 27.0);
  CHECK(SequenceLogProb(post, y) == doctest::Approx(expected).epsilon(1e-12));
  AlphaBeta ab = ForwardBackward(post, y);
  CHECK(ab.beta(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ab.alpha(1, 1) + post(1, 1, 0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("forward_backward: input validation") {
  LogPosteriorLattice post = UniformPosterior(2, 1, 3);
  std::vector<int> with_blank = {0};
  CHECK_THROWS_AS(ForwardBackward(post, with_blank), std::invalid_argument);
  std::vector<int> too_long = {1, 2};
  CHECK_THROWS_AS(ForwardBackward(post, too_long), std::invalid_argument);
  std::vector<int> out_of_range = {7};
  CHECK_THROWS_AS(SequenceLogProb(post, out_of_range), std::invalid_argument);
}

TEST_CASE("sequence_log_prob: empty reference is the blank-only path") {
  Rng rng(5);
  LogitLattice lattice = test::RandomLattice(rng, 4, 0, 3);
  LogPosteriorLattice post = Normalize(lattice, 1.0);
  double expected = 0.0;
  for (int t = 0; t < 4; ++t) expected += post(t, 0, 0);
  CHECK(SequenceLogProb(post, {}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sequence_log_prob: -inf propagates for impossible transitions") {
  // One-hot posterior that always emits blank; any label is impossible.
  Tensor3 lp(2, 2, 3, kNegInf);
  for (int t = 0; t < 2; ++t) {
    for (int u = 0; u < 2; ++u) lp(t, u, 0) = 0.0;
  }
  LogPosteriorLattice post(std::move(lp), 0, 1.0);
  std::vector<int> y = {1};
  CHECK(SequenceLogProb(post, y) == kNegInf);
}

TEST_CASE("oracle: forward log-prob equals brute force over alignments") {
  Rng rng(17);
  for (int T = 1; T <= 5; ++T) {
    for (int U = 0; U <= 4; ++U) {
      for (int K : {2, 5}) {
        if (U > 0 && K < 2) continue;
        LogitLattice lattice = test::RandomLattice(rng, T, U, K);
        LogPosteriorLattice post = Normalize(lattice, 1.0);
        std::vector<int> y = test::RandomLabels(rng, U, K);
        const double dp = SequenceLogProb(post, y);
        const double brute = test::BruteForceSequenceLogProb(post, y);
        CHECK(std::abs(dp - brute) < 1e-10);
      }
    }
  }
}

TEST_CASE("property: alpha-beta product is constant across diagonals") {
  // Every alignment crosses each anti-diagonal t + u = n exactly once, so
  // logsumexp over a diagonal of alpha + beta reproduces log P(y|x). (A sum
  // over a fixed t instead would count each path once per label it emits in
  // that frame.)
  Rng rng(23);
  for (int iter = 0; iter < 25; ++iter) {
    const int T = rng.UniformInt(1, 6);
    const int U = rng.UniformInt(0, 4);
    const int K = rng.UniformInt(2, 5);
    LogitLattice lattice = test::RandomLattice(rng, T, U, K);
    LogPosteriorLattice post = Normalize(lattice, 1.0);
    std::vector<int> y = test::RandomLabels(rng, U, K);
    AlphaBeta ab = ForwardBackward(post, y);
    const double log_prob = SequenceLogProb(post, y);
    for (int n = 0; n < T + U; ++n) {
      double acc = kNegInf;
      for (int u = std::max(0, n - T + 1); u <= std::min(n, U); ++u) {
        const int t = n - u;
        acc = LogSumExp(acc, ab.alpha(t, u) + ab.beta(t, u));
      }
      CHECK(std::abs(acc - log_prob) < 1e-9);
    }
  }
}

TEST_CASE("property: sequence log-prob is never positive") {
  Rng rng(29);
  for (int iter = 0; iter < 50; ++iter) {
    const int T = rng.UniformInt(1, 5);
    const int U = rng.UniformInt(0, 3);
    const int K = rng.UniformInt(2, 5);
    LogitLattice lattice = test::RandomLattice(rng, T, U, K, 0, 4.0);
    LogPosteriorLattice post = Normalize(lattice, 1.0);
    std::vector<int> y = test::RandomLabels(rng, U, K);
    CHECK(SequenceLogProb(post, y) <= 0.0);
  }
}

TEST_CASE("rnnt_loss: one-step case is plain cross-entropy") {
  Tensor3 v(1, 1, 2, 0.0);
  v(0, 0, 0) = 0.7;   // blank logit
  v(0, 0, 1) = -0.4;  // token logit
  LogitLattice lattice(std::move(v), 0);
  RnntLossResult r = RnntLossAndGrad(lattice, {}, 1.0);

  const double p_blank = 1.0 / (1.0 + std::exp(-(0.7 - (-0.4))));
  CHECK(r.loss == doctest::Approx(-std::log(p_blank)).epsilon(1e-12));
  CHECK(r.logit_grad(0, 0, 0) ==
        doctest::Approx(p_blank - 1.0).epsilon(1e-12));
  CHECK(r.logit_grad(0, 0, 1) ==
        doctest::Approx(1.0 - p_blank).epsilon(1e-12));
}

TEST_CASE("rnnt_loss: gradient rows sum to zero") {
  Rng rng(31);
  LogitLattice lattice = test::RandomLattice(rng, 4, 2, 5);
  std::vector<int> y = {1, 3};
  RnntLossResult r = RnntLossAndGrad(lattice, y, 1.0);
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u <= 2; ++u) {
      double sum = 0.0;
      for (int k = 0; k < 5; ++k) sum += r.logit_grad(t, u, k);
      CHECK(std::abs(sum) < 1e-12);
    }
  }
}

TEST_CASE("rnnt_loss: analytic gradient matches central differences") {
  Rng rng(37);
  for (int iter = 0; iter < 5; ++iter) {
    const double temp = (iter % 2 == 0) ? 1.0 : 1.2;
    Tensor3 base = test::RandomLogits(rng, 4, 2, 5);
    std::vector<int> y = test::RandomLabels(rng, 2, 5);

    RnntLossResult r = RnntLossAndGrad(LogitLattice(base, 0), y, temp);

    std::vector<double> numeric(base.data().size());
    const double h = 1e-5;
    for (size_t i = 0; i < base.data().size(); ++i) {
      Tensor3 plus = base, minus = base;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      const double lp_plus =
          SequenceLogProb(Normalize(LogitLattice(std::move(plus), 0), temp), y);
      const double lp_minus = SequenceLogProb(
          Normalize(LogitLattice(std::move(minus), 0), temp), y);
      numeric[i] = (-lp_plus + lp_minus) / (2.0 * h);
    }
    CHECK(test::MaxRelError(r.logit_grad.data(), numeric) < 1e-4);
  }
}

TEST_CASE("enumerate_alignments: counts and structure") {
  CHECK(EnumerateAlignments(1, 0).size() == 1);
  CHECK(EnumerateAlignments(2, 1).size() == 2);
  CHECK(EnumerateAlignments(3, 2).size() == 6);
  CHECK(EnumerateAlignments(5, 4).size() == 70);  // C(8, 4)

  auto paths = EnumerateAlignments(3, 2);
  std::set<std::vector<int>> seen;
  for (const AlignmentPath &p : paths) {
    CHECK(IsValidAlignment(p, 3, 2));
    CHECK(seen.insert(p.moves).second);  // no duplicates
  }
  CHECK_THROWS_AS(EnumerateAlignments(20, 10), std::invalid_argument);
}

TEST_CASE("enumerate_alignments: T=2 U=1 lists the two hand paths") {
  auto paths = EnumerateAlignments(2, 1);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].moves == std::vector<int>{kBlankMove, 0, kBlankMove});
  CHECK(paths[1].moves == std::vector<int>{0, kBlankMove, kBlankMove});
}

}  // namespace
}  // namespace mwer
