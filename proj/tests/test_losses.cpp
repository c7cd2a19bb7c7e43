#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "noisyrank/error.hpp"
#include "noisyrank/losses.hpp"

using namespace noisyrank;

namespace {
const MarginLoss zero_one{LossKind::ZeroOne};
const MarginLoss hinge{LossKind::Hinge};
const MarginLoss l1{LossKind::AbsoluteError};
const MarginLoss logistic{LossKind::Logistic};
const MarginLoss exponential{LossKind::Exponential};
const MarginLoss symlog{LossKind::SymmetrizedLogistic};
}  // namespace

TEST_CASE("loss values at hand-computed points") {
  CHECK(symlog.value(0.0) == 0.5);
  CHECK(zero_one.value(-0.3) == 1.0);
  CHECK(zero_one.value(0.3) == 0.0);
  CHECK(zero_one.value(0.0) == 0.0);
  CHECK(logistic.value(1.0) == doctest::Approx(0.313262).epsilon(1e-6));
  CHECK(logistic.value(-1.0) == doctest::Approx(1.313262).epsilon(1e-6));
  CHECK(exponential.value(1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(hinge.value(0.5) == 0.5);
  CHECK(hinge.value(2.0) == 0.0);
  CHECK(l1.value(1.0) == 0.0);
  CHECK(l1.value(-1.0) == 1.0);
  CHECK(l1.value(0.0) == 0.5);
}

TEST_CASE("absolute error equals |y - s| for scores in [0, 1]") {
  for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    for (int y : {0, 1}) {
      const double alpha = (2 * s - 1) * (2 * y - 1);
      CHECK(l1.value(alpha) == doctest::Approx(std::abs(y - s)));
    }
  }
}

TEST_CASE("logistic stays finite for extreme margins") {
  CHECK(logistic.value(-800.0) == doctest::Approx(800.0));
  CHECK(logistic.value(800.0) == 0.0);
  CHECK(std::isfinite(logistic.derivative(-800.0)));
}

TEST_CASE("non-finite margins are rejected") {
  CHECK_THROWS_AS(logistic.value(std::numeric_limits<double>::quiet_NaN()), InputError);
  CHECK_THROWS_AS(hinge.value(std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("derivatives") {
  CHECK(symlog.derivative(0.0) == -0.25);
  CHECK(exponential.derivative(0.0) == -1.0);
  CHECK(hinge.derivative(2.0) == 0.0);
  CHECK(hinge.derivative(0.0) == -1.0);
  CHECK(logistic.derivative(0.0) == -0.5);
  CHECK(l1.derivative(0.0) == -0.5);
  CHECK(l1.derivative(3.0) == 0.5);
  CHECK_THROWS_AS(zero_one.derivative(0.5), UnsupportedOperation);
}

TEST_CASE("differentiability flags") {
  CHECK_FALSE(zero_one.differentiable());
  CHECK_FALSE(l1.differentiable());
  CHECK(hinge.differentiable());
  CHECK(logistic.differentiable());
  CHECK(exponential.differentiable());
  CHECK(symlog.differentiable());
}

TEST_CASE("names round-trip") {
  for (auto kind : {LossKind::ZeroOne, LossKind::Hinge, LossKind::AbsoluteError, LossKind::Logistic,
                    LossKind::Exponential, LossKind::SymmetrizedLogistic}) {
    CHECK(parse_loss_kind(to_string(kind)) == kind);
    CHECK(MarginLoss(kind).name() == to_string(kind));
  }
  CHECK(to_string(LossKind::AbsoluteError) == "l1");
  CHECK_THROWS_AS(parse_loss_kind("ranknet"), InputError);
  CHECK(parse_mode("pairwise") == Mode::Pairwise);
  CHECK_THROWS_AS(parse_mode("listwise"), InputError);
}

TEST_CASE("label symmetry") {
  const std::vector<double> probes{-5, -1, -0.1, 0.1, 1, 5};

  SUBCASE("zero_one and symmetrized logistic sum to one") {
    for (const auto& loss : {zero_one, symlog}) {
      const auto r = check_label_symmetry(loss, probes, 1e-9);
      CHECK(r.symmetric);
      REQUIRE(r.constant.has_value());
      CHECK(*r.constant == doctest::Approx(1.0));
      CHECK(r.probes_used == probes.size());
    }
  }

  SUBCASE("hinge and l1 on their declared domains") {
    const auto h = check_label_symmetry(hinge, probes, 1e-12);
    CHECK(h.symmetric);
    CHECK(*h.constant == 2.0);
    CHECK(h.probes_used == 4);
    const auto a = check_label_symmetry(l1, probes, 1e-12);
    CHECK(a.symmetric);
    CHECK(*a.constant == 1.0);
  }

  SUBCASE("hinge off its domain is not symmetric") {
    // 0.5 + 1.5 = 2 but 0 + 3 = 3 once |alpha| > 1.
    CHECK(hinge.value(2.0) + hinge.value(-2.0) == 3.0);
  }

  SUBCASE("logistic deviation on [1, 3]") {
    const std::vector<double> p{1, 3};
    const auto r = check_label_symmetry(logistic, p, 1e-9);
    CHECK_FALSE(r.symmetric);
    CHECK_FALSE(r.constant.has_value());
    const double s1 = std::log1p(std::exp(-1.0)) + std::log1p(std::exp(1.0));
    const double s3 = std::log1p(std::exp(-3.0)) + std::log1p(std::exp(3.0));
    CHECK(r.max_deviation == doctest::Approx(s3 - s1));
    CHECK(r.max_deviation == doctest::Approx(1.4707).epsilon(1e-4));
  }

  SUBCASE("exponential deviation on [1, 3]") {
    const std::vector<double> p{1, 3};
    const auto r = check_label_symmetry(exponential, p, 1e-9);
    CHECK_FALSE(r.symmetric);
    CHECK(r.max_deviation == doctest::Approx(2 * std::cosh(3.0) - 2 * std::cosh(1.0)));
  }

  SUBCASE("bad probe lists") {
    const std::vector<double> empty;
    CHECK_THROWS_AS(check_label_symmetry(logistic, empty, 1e-9), InputError);
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(check_label_symmetry(logistic, zero, 1e-9), InputError);
    const std::vector<double> outside{2.0, 3.0};
    CHECK_THROWS_AS(check_label_symmetry(hinge, outside, 1e-9), InputError);
  }
}

TEST_CASE("pairwise margins") {
  CHECK(*pairwise_margin(0.9, 0.1, 1, 0) == doctest::Approx(0.8));
  CHECK(*pairwise_margin(0.9, 0.1, 0, 1) == doctest::Approx(-0.8));
  CHECK_FALSE(pairwise_margin(0.9, 0.1, 1, 1).has_value());
  CHECK_FALSE(pairwise_margin(0.9, 0.1, 0, 0).has_value());
  CHECK_THROWS_AS(pairwise_margin(0.9, 0.1, 2, 0), InputError);
  CHECK(pointwise_margin(0.7, 1) == 0.7);
  CHECK(pointwise_margin(0.7, 0) == -0.7);
}

TEST_CASE("query losses") {
  const std::vector<double> s{2.0, 1.0, 0.0};
  const std::vector<int> y{1, 0, 1};

  const QueryLoss p = pointwise_query_loss(hinge, s, y);
  CHECK(p.terms == 3);
  // margins 2, -1, 0 -> 0 + 2 + 1
  CHECK(p.sum == 3.0);
  CHECK(p.mean() == 1.0);

  const QueryLoss q = pairwise_query_loss(hinge, s, y);
  CHECK(q.terms == 2);
  // pairs (0,1): margin 1 -> 0; (2,1): margin -1 -> 2
  CHECK(q.sum == 2.0);

  const std::vector<int> same{1, 1, 1};
  CHECK(pairwise_query_loss(hinge, s, same).terms == 0);
  CHECK(query_loss(hinge, Mode::Pairwise, s, y).sum == q.sum);
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(-1000.0) >= 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}
