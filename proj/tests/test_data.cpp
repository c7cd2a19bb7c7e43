#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "noisyrank/data.hpp"
#include "noisyrank/error.hpp"
#include "noisyrank/losses.hpp"
#include "oracles.hpp"

using namespace noisyrank;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_letor(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("LETOR parsing") {
  const Dataset ds = parse(
      "1 qid:10 1:0.5 2:0.3 #docA\n"
      "2 qid:10 2:0.3\n"
      "\n"
      "0 qid:7 1:-1 3:4\n"
      "0 qid:10 1:2\n");
  REQUIRE(ds.queries.size() == 2);
  CHECK(ds.feature_dim == 3);
  CHECK(ds.provenance == Provenance::LetorFile);
  CHECK_FALSE(ds.has_oracle());

  const auto& q10 = ds.queries[0];
  CHECK(q10.query_id == "10");
  REQUIRE(q10.size() == 3);
  CHECK(q10.documents[0].label == 1);
  CHECK(q10.documents[0].features == std::vector<double>{0.5, 0.3, 0.0});
  CHECK(q10.documents[0].doc_id == "docA");
  CHECK(q10.documents[1].label == 2);
  CHECK(q10.documents[1].features == std::vector<double>{0.0, 0.3, 0.0});
  CHECK(q10.documents[2].features == std::vector<double>{2.0, 0.0, 0.0});
  CHECK(ds.queries[1].query_id == "7");
  CHECK(ds.queries[1].documents[0].features == std::vector<double>{-1.0, 0.0, 4.0});
  CHECK(ds.num_documents() == 4);
}

TEST_CASE("LETOR parse errors name the line") {
  CHECK(parse_error_line("1 qd:10 1:0.5\n") == 1);
  CHECK(parse_error_line("1 qid:1 1:0.5\nx qid:1 1:0.5\n") == 2);
  CHECK(parse_error_line("1 qid:1 0:0.5\n") == 1);
  CHECK(parse_error_line("1 qid:1 2:0.5 1:0.1\n") == 1);
  CHECK(parse_error_line("1 qid:1 2:0.5 2:0.1\n") == 1);
  CHECK(parse_error_line("1 qid:1 1:abc\n") == 1);
  CHECK(parse_error_line("1\n") == 1);
  CHECK(parse_error_line("1 qid:1 1:0.5\n\n1 qid: 1:0.5\n") == 3);
  CHECK_THROWS_AS(parse_letor(std::filesystem::path("/nonexistent/file.txt")), InputError);
}

TEST_CASE("write and parse round-trip exactly") {
  SyntheticSpec s;
  s.num_queries = 7;
  s.seed = 3;
  const Dataset ds = generate_synthetic(s);
  std::ostringstream out;
  write_letor(ds, out);
  const Dataset back = parse(out.str());
  REQUIRE(back.queries.size() == ds.queries.size());
  for (std::size_t q = 0; q < ds.queries.size(); ++q) {
    CHECK(back.queries[q].query_id == ds.queries[q].query_id);
    for (std::size_t d = 0; d < ds.queries[q].size(); ++d) {
      CHECK(back.queries[q].documents[d].features == ds.queries[q].documents[d].features);
      CHECK(back.queries[q].documents[d].label == ds.queries[q].documents[d].label);
    }
  }
}

TEST_CASE("binarize") {
  const Dataset raw = parse("0 qid:1 1:1\n1 qid:1 1:1\n2 qid:1 1:1\n");
  CHECK(binarize(raw, 1).queries[0].labels() == std::vector<int>{0, 1, 1});
  CHECK(binarize(raw, 2).queries[0].labels() == std::vector<int>{0, 0, 1});
  const Dataset once = binarize(raw, 1);
  CHECK(binarize(once, 1).queries[0].labels() == once.queries[0].labels());
  CHECK_THROWS_AS(binarize(parse("-1 qid:1 1:1\n")), InputError);
}

TEST_CASE("normalization") {
  const Dataset ds = parse("0 qid:1 1:2 2:5\n1 qid:1 1:4 2:5\n0 qid:1 1:6 2:5\n1 qid:2 1:1 2:0\n0 qid:2 1:3 2:1\n");

  SUBCASE("per-query min-max") {
    const Dataset n = normalize_features(ds, NormalizeMode::PerQueryMinMax);
    std::vector<double> col;
    for (const auto& d : n.queries[0].documents) col.push_back(d.features[0]);
    CHECK(col == std::vector<double>{0.0, 0.5, 1.0});
    for (const auto& d : n.queries[0].documents) CHECK(d.features[1] == 0.0);
    CHECK(n.queries[1].documents[0].features == std::vector<double>{0.0, 0.0});
    CHECK(n.queries[1].documents[1].features == std::vector<double>{1.0, 1.0});
  }

  SUBCASE("global standardize") {
    const Dataset n = normalize_features(ds, NormalizeMode::GlobalStandardize);
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& q : n.queries) {
      for (const auto& d : q.documents) {
        sum += d.features[0];
        sq += d.features[0] * d.features[0];
      }
    }
    CHECK(sum / 5.0 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::sqrt(sq / 5.0) == doctest::Approx(1.0));
  }

  SUBCASE("standardizer reuses training statistics") {
    const Standardizer st = Standardizer::fit(ds);
    const Dataset other = parse("0 qid:9 1:100 2:5\n");
    const Dataset applied = st.apply(other);
    CHECK(applied.queries[0].documents[0].features[0] == doctest::Approx((100.0 - 3.2) / st.stddev[0]));
    CHECK_THROWS_AS(st.apply(parse("0 qid:9 1:1\n")), InputError);
  }
}

TEST_CASE("split") {
  SyntheticSpec s;
  s.num_queries = 10;
  s.seed = 1;
  const Dataset ds = generate_synthetic(s);
  const Split a = split(ds, 0.8, 42);
  CHECK(a.train.queries.size() == 8);
  CHECK(a.holdout.queries.size() == 2);

  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.holdout}) {
    std::size_t last = 0;
    for (const auto& q : part->queries) {
      const std::size_t pos = static_cast<std::size_t>(std::stoul(q.query_id));
      CHECK(pos > last);
      last = pos;
      ids.insert(q.query_id);
    }
  }
  CHECK(ids.size() == 10);

  const Split b = split(ds, 0.8, 42);
  CHECK(b.holdout.queries[0].query_id == a.holdout.queries[0].query_id);
  CHECK(b.holdout.queries[1].query_id == a.holdout.queries[1].query_id);

  CHECK_THROWS_AS(split(ds, 1.0, 1), InputError);
  CHECK_THROWS_AS(split(ds, 0.0, 1), InputError);
  CHECK_THROWS_AS(split(ds, 0.95, 1), InputError);
}

TEST_CASE("synthetic generator") {
  SUBCASE("validation") {
    SyntheticSpec s;
    s.docs_per_query = 0;
    CHECK_THROWS_AS(generate_synthetic(s), InputError);
    s = SyntheticSpec{};
    s.prevalence_range = std::pair{0.0, 0.5};
    CHECK_THROWS_AS(generate_synthetic(s), InputError);
  }

  SUBCASE("shape, determinism and prefix stability") {
    SyntheticSpec s;
    s.seed = 77;
    const Dataset a = generate_synthetic(s);
    CHECK(a.queries.size() == 50);
    CHECK(a.num_documents() == 500);
    CHECK(a.feature_dim == 5);
    CHECK(a.has_oracle());
    const Dataset b = generate_synthetic(s);
    s.num_queries = 60;
    const Dataset c = generate_synthetic(s);
    for (std::size_t q = 0; q < a.queries.size(); ++q) {
      for (std::size_t d = 0; d < 10; ++d) {
        CHECK(a.queries[q].documents[d].features == b.queries[q].documents[d].features);
        CHECK(a.queries[q].documents[d].features == c.queries[q].documents[d].features);
        CHECK(a.queries[q].documents[d].label == c.queries[q].documents[d].label);
      }
    }
  }

  SUBCASE("marginal positive rate is one half") {
    SyntheticSpec s;
    s.num_queries = 1000;
    s.seed = 5;
    const Dataset ds = generate_synthetic(s);
    std::size_t pos = 0;
    for (const auto& q : ds.queries) {
      for (const auto& d : q.documents) pos += d.label;
    }
    CHECK(std::abs(static_cast<double>(pos) / 10000.0 - 0.5) <= 0.015);
  }

  SUBCASE("separable labels follow the oracle sign") {
    SyntheticSpec s;
    s.label_mode = LabelMode::Separable;
    s.theta_sharing = ThetaSharing::Shared;
    s.seed = 2;
    const Dataset ds = generate_synthetic(s);
    for (const auto& q : ds.queries) {
      REQUIRE(q.oracle.has_value());
      CHECK(q.oracle->theta == ds.queries.front().oracle->theta);
      for (const auto& d : q.documents) CHECK(d.label == (q.oracle->logit(d.features) > 0.0 ? 1 : 0));
    }
  }

  SUBCASE("oracle probability is the sigmoid of the logit") {
    QueryOracle o{{1.0, -2.0}, 0.5};
    const std::vector<double> x{0.3, 0.1};
    CHECK(o.logit(x) == doctest::Approx(0.6));
    CHECK(o.probability(x) == doctest::Approx(sigmoid(0.6)));
  }

  SUBCASE("prevalence tilt") {
    SyntheticSpec s;
    s.num_queries = 400;
    s.docs_per_query = 50;
    s.prevalence_range = std::pair{0.1, 0.9};
    s.seed = 4;
    const Dataset ds = generate_synthetic(s);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& q : ds.queries) {
      const auto y = q.labels();
      const double p = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    CHECK(lo < 0.25);
    CHECK(hi > 0.75);
  }
}

TEST_CASE("bias for prevalence") {
  SUBCASE("separable: exact through the normal CDF") {
    for (double p : {0.1, 0.3, 0.5, 0.9}) {
      for (double norm : {0.5, 2.0}) {
        const double b = bias_for_prevalence(p, norm, LabelMode::Separable);
        CHECK(normal_cdf(b / norm) == doctest::Approx(p).epsilon(1e-9));
      }
    }
  }
  SUBCASE("bernoulli: close to the target by quadrature") {
    for (double p : {0.1, 0.7}) {
      const double norm = 2.0;
      const double b = bias_for_prevalence(p, norm, LabelMode::Bernoulli);
      // E[sigmoid(norm * Z + b)] by the trapezoid rule on [-8, 8].
      double sum = 0.0;
      const int steps = 4000;
      const double h = 16.0 / steps;
      for (int i = 0; i <= steps; ++i) {
        const double z = -8.0 + i * h;
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        sum += w * sigmoid(norm * z + b) * std::exp(-0.5 * z * z);
      }
      const double mean = sum * h / std::sqrt(2.0 * M_PI);
      CHECK(std::abs(mean - p) < 0.01);
    }
  }
  CHECK(bias_for_prevalence(0.5, 1.0, LabelMode::Bernoulli) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(bias_for_prevalence(1.0, 1.0, LabelMode::Separable), InputError);
}
