// Randomized properties checked over many generated cases.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "noisyrank/data.hpp"
#include "noisyrank/error.hpp"
#include "noisyrank/losses.hpp"
#include "noisyrank/metrics.hpp"
#include "noisyrank/noise.hpp"
#include "noisyrank/risk_lab.hpp"
#include "noisyrank/training.hpp"
#include "oracles.hpp"

using namespace noisyrank;

namespace {

constexpr int kCases = 500;

const LossKind kDifferentiable[] = {LossKind::Hinge, LossKind::Logistic, LossKind::Exponential,
                                    LossKind::SymmetrizedLogistic};

}  // namespace

TEST_CASE("metrics agree with brute-force oracles, ties included") {
  Rng rng(101);
  for (int c = 0; c < kCases; ++c) {
    const auto q = oracle::random_query(rng, 10, c % 2 == 0);
    const RankedQuery view{q.scores, q.labels, ""};
    CHECK(auc(view) == oracle::auc(q.scores, q.labels));
    CHECK(average_precision(view) == oracle::average_precision(q.scores, q.labels));
    for (std::size_t k : {1, 2, 5, 10}) {
      CHECK(dcg_at_k(view, k) == doctest::Approx(oracle::dcg(q.scores, q.labels, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("metrics are invariant under increasing score transforms") {
  Rng rng(102);
  for (int c = 0; c < kCases; ++c) {
    const auto q = oracle::random_query(rng, 10, c % 3 == 0);
    std::vector<double> t;
    for (double s : q.scores) t.push_back(std::exp(2.0 * s) + 1.0);
    const RankedQuery a{q.scores, q.labels, ""};
    const RankedQuery b{t, q.labels, ""};
    CHECK(auc(a) == auc(b));
    CHECK(average_precision(a) == average_precision(b));
    CHECK(ndcg_at_k(a, 10) == ndcg_at_k(b, 10));
  }
}

TEST_CASE("metric ranges") {
  Rng rng(103);
  for (int c = 0; c < kCases; ++c) {
    const auto q = oracle::random_query(rng, 10, c % 2 == 0);
    const RankedQuery v{q.scores, q.labels, ""};
    if (auto x = auc(v)) CHECK((*x >= -1.0 && *x <= 0.0));
    if (auto x = average_precision(v)) CHECK((*x >= -1.0 && *x < 0.0));
    if (auto x = ndcg_at_k(v, 3)) CHECK((*x >= -1.0 - 1e-12 && *x <= 0.0));
  }
}

TEST_CASE("loss derivatives match finite differences") {
  Rng rng(104);
  for (auto kind : kDifferentiable) {
    const MarginLoss loss(kind);
    for (int c = 0; c < kCases; ++c) {
      const double a = rng.uniform(-6.0, 6.0);
      if (std::abs(a - 1.0) < 1e-3) continue;  // hinge kink
      const double h = 1e-6;
      const double fd = (loss.value(a + h) - loss.value(a - h)) / (2 * h);
      CHECK(oracle::rel_error(loss.derivative(a), fd) < 1e-6);
    }
  }
}

TEST_CASE("declared symmetry constants hold on their domains") {
  Rng rng(105);
  for (auto kind : {LossKind::ZeroOne, LossKind::Hinge, LossKind::AbsoluteError,
                    LossKind::SymmetrizedLogistic, LossKind::Logistic, LossKind::Exponential}) {
    const MarginLoss loss(kind);
    const auto c = loss.symmetry_constant();
    if (!c) continue;
    const MarginDomain d = loss.symmetry_domain();
    for (int i = 0; i < kCases; ++i) {
      const double lim = std::min(std::abs(d.lo), std::min(d.hi, 50.0));
      double a = rng.uniform(-lim, lim);
      if (a == 0.0) a = 0.5;
      CHECK(loss.value(a) + loss.value(-a) == doctest::Approx(*c).epsilon(1e-12));
    }
  }
}

TEST_CASE("losses are nonnegative and nonincreasing in the margin") {
  Rng rng(106);
  for (auto kind : {LossKind::ZeroOne, LossKind::Hinge, LossKind::Logistic, LossKind::Exponential,
                    LossKind::SymmetrizedLogistic}) {
    const MarginLoss loss(kind);
    for (int i = 0; i < kCases; ++i) {
      const double a = rng.uniform(-20.0, 20.0);
      const double b = a + rng.uniform(0.0, 5.0);
      CHECK(loss.value(a) >= 0.0);
      CHECK(loss.value(b) <= loss.value(a));
    }
  }
}

TEST_CASE("batch gradients match finite differences at random weights") {
  Rng rng(107);
  for (auto kind : kDifferentiable) {
    for (auto mode : {Mode::Pointwise, Mode::Pairwise}) {
      for (int c = 0; c < 20; ++c) {
        const auto batch = oracle::random_batch(rng, 1 + rng.below(4), 3);
        LinearScorer m = LinearScorer::zeros(3);
        for (auto& w : m.weights) w = rng.normal() * 0.5;
        m.bias = rng.normal() * 0.5;
        const LossConfig cfg{kind, mode};
        const Gradient g = empirical_gradient(m, batch, cfg);
        const auto fd = oracle::fd_gradient(m, batch, cfg);
        for (std::size_t p = 0; p < fd.size(); ++p) CHECK(oracle::rel_error(g.values[p], fd[p]) < 1e-5);
        CHECK(g.risk == doctest::Approx(batch_risk(m, batch, cfg)));
      }
    }
  }
}

TEST_CASE("pointwise noisy expectation is affine for symmetric losses") {
  Rng rng(108);
  for (int c = 0; c < 50; ++c) {
    SyntheticSpec s;
    s.num_queries = 3 + rng.below(5);
    s.seed = rng.next_u64();
    const Dataset ds = generate_synthetic(s);
    const PerturbedOracleScorer f(rng.uniform(0.0, 2.0), rng.bernoulli(0.5) ? 10.0 : 1.0, c);
    const double gamma = rng.uniform(0.0, 1.0);
    for (auto kind : {LossKind::ZeroOne, LossKind::SymmetrizedLogistic}) {
      const MarginLoss loss(kind);
      const double clean = empirical_risk(f, ds, loss, Mode::Pointwise, LabelSet::Clean).value;
      CHECK(expected_noisy_risk(f, ds, loss, Mode::Pointwise, gamma) ==
            doctest::Approx((2 * gamma - 1) * clean + (1 - gamma)).epsilon(1e-12));
    }
  }
}

TEST_CASE("corruption with gamma zero is an involution") {
  Rng rng(109);
  for (int c = 0; c < kCases; ++c) {
    std::vector<int> y(1 + rng.below(30));
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
    const NoiseSpec flip(0.0, rng.next_u64());
    CHECK(corrupt_labels(corrupt_labels(y, flip).noisy, flip).noisy == y);
  }
}

TEST_CASE("splits partition the queries") {
  Rng rng(110);
  for (int c = 0; c < 100; ++c) {
    SyntheticSpec s;
    s.num_queries = 2 + rng.below(40);
    s.docs_per_query = 2;
    s.seed = rng.next_u64();
    const Dataset ds = generate_synthetic(s);
    const double frac = rng.uniform(0.05, 0.95);
    const std::size_t n = ds.queries.size();
    const auto holdout = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - frac) + 1e-9));
    if (holdout == 0 || holdout == n) {
      CHECK_THROWS_AS(split(ds, frac, 1), InputError);
      continue;
    }
    const Split p = split(ds, frac, rng.next_u64());
    CHECK(p.holdout.queries.size() == holdout);
    CHECK(p.train.queries.size() + p.holdout.queries.size() == n);
    std::vector<int> seen(n, 0);
    for (const auto* part : {&p.train, &p.holdout}) {
      for (const auto& q : part->queries) ++seen[std::stoul(q.query_id) - 1];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  }
}

TEST_CASE("LETOR files round-trip for random datasets") {
  Rng rng(111);
  for (int c = 0; c < 50; ++c) {
    Dataset ds;
    ds.feature_dim = 1 + rng.below(6);
    ds.provenance = Provenance::LetorFile;
    const std::size_t nq = 1 + rng.below(5);
    for (std::size_t q = 0; q < nq; ++q) {
      QueryGroup g;
      g.query_id = std::to_string(rng.below(1000)) + "_" + std::to_string(q);
      for (std::size_t d = 0, n = 1 + rng.below(6); d < n; ++d) {
        Document doc;
        doc.label = static_cast<int>(rng.below(5));
        for (std::size_t f = 0; f < ds.feature_dim; ++f) doc.features.push_back(rng.normal() * 1e3);
        g.documents.push_back(doc);
      }
      ds.queries.push_back(g);
    }
    std::ostringstream out;
    write_letor(ds, out);
    std::istringstream in(out.str());
    const Dataset back = parse_letor(in);
    REQUIRE(back.queries.size() == ds.queries.size());
    for (std::size_t q = 0; q < nq; ++q) {
      CHECK(back.queries[q].query_id == ds.queries[q].query_id);
      for (std::size_t d = 0; d < ds.queries[q].size(); ++d) {
        CHECK(back.queries[q].documents[d].features == ds.queries[q].documents[d].features);
        CHECK(back.queries[q].documents[d].label == ds.queries[q].documents[d].label);
      }
    }
  }
}

TEST_CASE("fit statistics stay in range") {
  Rng rng(112);
  for (int c = 0; c < kCases; ++c) {
    std::vector<double> x(3 + rng.below(20));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = rng.uniform(-1.0, 1.0) * x[i] + rng.normal();
    }
    const LinearFit f = fit_ols(x, y);
    CHECK((f.r_squared >= 0.0 && f.r_squared <= 1.0 + 1e-12));
    const double rho = spearman_rho(x, y);
    CHECK((rho >= -1.0 - 1e-12 && rho <= 1.0 + 1e-12));
    const auto r = average_ranks(x);
    CHECK(std::accumulate(r.begin(), r.end(), 0.0) ==
          doctest::Approx(static_cast<double>(x.size() * (x.size() + 1)) / 2.0));
  }
}
