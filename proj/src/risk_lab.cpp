#include "noisyrank/risk_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "noisyrank/error.hpp"
#include "noisyrank/noise.hpp"
#include "noisyrank/parallel.hpp"
#include "noisyrank/random.hpp"

namespace noisyrank {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t document_key(std::uint64_t seed, const QueryGroup& q, std::size_t doc) {
  return derive_seed(derive_seed(seed, q.query_id), doc);
}

void require_gamma_for_bound(double gamma) {
  if (!(gamma > 0.5 && gamma <= 1.0)) {
    throw InputError(fmt::format("bounds require gamma in (0.5, 1], got {}", gamma));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Scorers

std::vector<double> Scorer::scores(const QueryGroup& q) const {
  std::vector<double> out(q.size());
  score_query(q, out);
  return out;
}

void LinearModelScorer::score_query(const QueryGroup& q, std::span<double> out) const {
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = model_.score(q.documents[i].features);
}

void PerturbedOracleScorer::score_query(const QueryGroup& q, std::span<double> out) const {
  if (!q.oracle) throw InputError("query " + q.query_id + " has no oracle");
  for (std::size_t i = 0; i < q.size(); ++i) {
    double s = q.oracle->probability(q.documents[i].features) - 0.5;
    if (perturbation_ != 0.0) s += perturbation_ * hash_normal(document_key(seed_, q, i));
    out[i] = scale_ * s;
  }
}

void BoundedRandomScorer::score_query(const QueryGroup& q, std::span<double> out) const {
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = 2.0 * hash_uniform(document_key(seed_, q, i)) - 1.0;
  }
}

// ---------------------------------------------------------------------------
// Risk estimates

RiskEstimate empirical_risk(const Scorer& scorer, const Dataset& ds, const MarginLoss& loss,
                            Mode mode, LabelSet labels) {
  const bool clean = labels == LabelSet::Clean;
  RiskEstimate out{0.0,
                   mode == Mode::Pointwise
                       ? (clean ? RiskKind::PointwiseClean : RiskKind::PointwiseNoisy)
                       : (clean ? RiskKind::PairwiseClean : RiskKind::PairwiseNoisy),
                   0, 0};
  double total = 0.0;
  std::vector<double> scores;
  for (const auto& q : ds.queries) {
    scores.resize(q.size());
    scorer.score_query(q, scores);
    const auto y = q.labels();
    const QueryLoss ql = query_loss(loss, mode, scores, y);
    if (ql.terms == 0) continue;
    out.n_terms += ql.terms;
    ++out.n_queries;
    total += mode == Mode::Pointwise ? ql.sum : ql.mean();
  }
  if (out.n_terms == 0) {
    throw InputError(mode == Mode::Pairwise ? "no mixed-label pair in the dataset"
                                            : "dataset has no documents");
  }
  out.value = mode == Mode::Pointwise ? total / static_cast<double>(out.n_terms)
                                      : total / static_cast<double>(out.n_queries);
  return out;
}

double expected_noisy_risk(const Scorer& scorer, const Dataset& ds, const MarginLoss& loss,
                           Mode mode, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must lie in [0, 1]");
  std::vector<double> scores;
  if (mode == Mode::Pointwise) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& q : ds.queries) {
      scores.resize(q.size());
      scorer.score_query(q, scores);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double alpha = pointwise_margin(scores[i], q.documents[i].label);
        sum += gamma * loss.value(alpha) + (1.0 - gamma) * loss.value(-alpha);
        ++n;
      }
    }
    if (n == 0) throw InputError("dataset has no documents");
    return sum / static_cast<double>(n);
  }

  double total = 0.0;
  std::size_t used = 0;
  for (const auto& q : ds.queries) {
    scores.resize(q.size());
    scorer.score_query(q, scores);
    double weighted = 0.0;
    double weight = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double p_i = q.documents[i].label == 1 ? gamma : 1.0 - gamma;  // P(noisy y_i = 1)
      for (std::size_t j = 0; j < q.size(); ++j) {
        if (i == j) continue;
        const double p_j = q.documents[j].label == 1 ? gamma : 1.0 - gamma;
        const double w = p_i * (1.0 - p_j);
        if (w == 0.0) continue;
        weighted += w * loss.value(scores[i] - scores[j]);
        weight += w;
      }
    }
    if (weight == 0.0) continue;
    total += weighted / weight;
    ++used;
  }
  if (used == 0) throw InputError("no query can produce a mixed-label pair");
  return total / static_cast<double>(used);
}

// ---------------------------------------------------------------------------
// Scorer family

ScorerFamily ScorerFamily::standard(std::size_t size, std::uint64_t seed, double max_perturbation,
                                    double scale) {
  ScorerFamily f;
  f.seed = seed;
  for (std::size_t j = 0; j < size; ++j) {
    const double level =
        size > 1 ? max_perturbation * static_cast<double>(j) / static_cast<double>(size - 1) : 0.0;
    f.perturbation_levels.push_back(level);
    f.scales.push_back(j % 2 == 1 ? scale : 1.0);
  }
  return f;
}

std::vector<PerturbedOracleScorer> build_scorer_family(const ScorerFamily& family,
                                                       const Dataset& ds) {
  if (!ds.has_oracle()) throw InputError("scorer family needs a synthetic dataset with oracles");
  if (family.perturbation_levels.size() != family.scales.size()) {
    throw InputError("scorer family has mismatched perturbation and scale lists");
  }
  std::vector<PerturbedOracleScorer> out;
  out.reserve(family.size());
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (family.perturbation_levels[j] < 0.0 || family.scales[j] <= 0.0) {
      throw InputError("scorer family needs nonnegative perturbations and positive scales");
    }
    out.emplace_back(family.perturbation_levels[j], family.scales[j], derive_seed(family.seed, j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Targets

std::string AffinityTarget::name() const {
  if (is_metric) return metric.name();
  if (loss.mode == Mode::Pointwise) return std::string(to_string(loss.kind));
  if (loss.kind == LossKind::Logistic) return "ranknet";
  if (loss.kind == LossKind::SymmetrizedLogistic) return "symmetrized_ranknet";
  return "pairwise_" + std::string(to_string(loss.kind));
}

AffinityTarget parse_target(std::string_view name) {
  AffinityTarget t;
  if (is_metric_name(name)) {
    t.is_metric = true;
    t.metric = parse_metric(name);
    return t;
  }
  if (name == "ranknet") {
    t.loss = {LossKind::Logistic, Mode::Pairwise};
  } else if (name == "symmetrized_ranknet") {
    t.loss = {LossKind::SymmetrizedLogistic, Mode::Pairwise};
  } else if (name.starts_with("pairwise_")) {
    t.loss = {parse_loss_kind(name.substr(9)), Mode::Pairwise};
  } else {
    t.loss = {parse_loss_kind(name), Mode::Pointwise};
  }
  return t;
}

std::optional<std::pair<double, double>> predicted_affinity(const AffinityTarget& target,
                                                            double gamma, const Dataset& pool) {
  const double slope = 2.0 * gamma - 1.0;
  if (!target.is_metric) {
    const auto c = MarginLoss(target.loss.kind).symmetry_constant();
    if (!c) return std::nullopt;
    return std::pair{slope, *c * (1.0 - gamma)};
  }
  switch (target.metric.kind) {
    case MetricKind::Auc:
      // -AUC = pairwise 0-1 risk - 1.
      return std::pair{slope, -(1.0 - gamma)};
    case MetricKind::Dcg: {
      if (pool.queries.empty()) return std::nullopt;
      double total = 0.0;
      for (const auto& q : pool.queries) {
        for (std::size_t r = 1; r <= std::min(target.metric.k, q.size()); ++r) {
          total += (1.0 - gamma) / dcg_discount(r);
        }
      }
      return std::pair{slope, -total / static_cast<double>(pool.queries.size())};
    }
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Statistics

LinearFit fit_ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("OLS needs two or more paired points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InputError("degenerate fit: every clean risk is identical");
  LinearFit fit{sxy / sxx, 0.0, 1.0};
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  if (syy > 0.0) fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start;
    while (end < idx.size() && values[idx[end]] == values[idx[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end - 1) + 1.0;
    for (std::size_t k = start; k < end; ++k) ranks[idx[k]] = rank;
    start = end;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("Spearman needs two or more pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const auto n = static_cast<double>(x.size());
  const double m = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - m) * (ry[i] - m);
    sxx += (rx[i] - m) * (rx[i] - m);
    syy += (ry[i] - m) * (ry[i] - m);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Affinity analysis

namespace {

// Scores, rankings and clean per-query values of every scorer on every pool
// query, computed once and reused by all draws.
struct PoolCache {
  std::size_t scorers = 0;
  std::size_t queries = 0;
  std::vector<std::vector<double>> scores;       // [scorer * queries + q]
  std::vector<std::vector<std::size_t>> orders;  // metrics only
  std::vector<std::optional<double>> clean_value;  // per-query clean loss mean or metric
  std::vector<QueryLoss> clean_loss;
  std::vector<std::vector<int>> labels;  // [q]

  std::size_t at(std::size_t j, std::size_t q) const { return j * queries + q; }
};

PoolCache build_cache(std::span<const PerturbedOracleScorer> family, const Dataset& pool,
                      const AffinityTarget& target, std::size_t threads) {
  PoolCache c;
  c.scorers = family.size();
  c.queries = pool.queries.size();
  c.scores.resize(c.scorers * c.queries);
  c.clean_value.resize(c.scorers * c.queries);
  c.clean_loss.resize(c.scorers * c.queries);
  if (target.is_metric) c.orders.resize(c.scorers * c.queries);
  for (const auto& q : pool.queries) c.labels.push_back(q.labels());

  const MarginLoss loss(target.loss.kind);
  parallel_for(c.scorers, threads, [&](std::size_t j) {
    for (std::size_t q = 0; q < c.queries; ++q) {
      const std::size_t slot = c.at(j, q);
      c.scores[slot] = family[j].scores(pool.queries[q]);
      if (target.is_metric) {
        c.orders[slot] = rank_order(c.scores[slot]);
      } else {
        c.clean_loss[slot] = query_loss(loss, target.loss.mode, c.scores[slot], c.labels[q]);
      }
    }
  });
  return c;
}

std::optional<double> metric_from_order(const MetricSpec& m, std::span<const double> scores,
                                        std::span<const std::size_t> order,
                                        std::span<const int> labels) {
  switch (m.kind) {
    case MetricKind::Auc: return auc(order, scores, labels);
    case MetricKind::Dcg: return dcg_at_k(order, labels, m.k);
    case MetricKind::Ndcg: return ndcg_at_k(order, labels, m.k);
    case MetricKind::Map: return average_precision(order, labels);
  }
  return std::nullopt;
}

// Running aggregate of one scorer's risk over the queries of a draw.
struct DrawAggregate {
  double total = 0.0;
  std::size_t count = 0;

  void add_loss(const QueryLoss& ql, Mode mode) {
    if (ql.terms == 0) return;
    if (mode == Mode::Pointwise) {
      total += ql.sum;
      count += ql.terms;
    } else {
      total += ql.mean();
      ++count;
    }
  }
  void add_value(std::optional<double> v) {
    if (!v) return;
    total += *v;
    ++count;
  }
  double value() const {
    if (count == 0) throw InputError("a draw produced no defined risk term");
    return total / static_cast<double>(count);
  }
};

struct DrawTable {
  std::size_t draws;
  std::size_t scorers;
  std::vector<double> clean;  // [draw * scorers + j]
  std::vector<double> noisy;
};

DrawTable simulate_draws(const PoolCache& cache, const AffinityTarget& target,
                         const AffinitySpec& spec) {
  DrawTable t{spec.draws, cache.scorers, std::vector<double>(spec.draws * cache.scorers),
              std::vector<double>(spec.draws * cache.scorers)};
  const MarginLoss loss(target.loss.kind);

  parallel_for(spec.draws, spec.threads, [&](std::size_t d) {
    const std::uint64_t draw_seed = derive_seed(spec.seed, d);
    Rng picker(derive_seed(draw_seed, "queries"));
    std::vector<std::size_t> picked(spec.queries_per_draw);
    for (auto& p : picked) p = picker.below(cache.queries);
    std::vector<std::vector<int>> noisy_labels;
    noisy_labels.reserve(picked.size());
    for (std::size_t s = 0; s < picked.size(); ++s) {
      const NoiseSpec noise(spec.gamma, derive_seed(draw_seed, s + 1));
      noisy_labels.push_back(corrupt_labels(cache.labels[picked[s]], noise).noisy);
    }

    for (std::size_t j = 0; j < cache.scorers; ++j) {
      DrawAggregate clean;
      DrawAggregate noisy;
      for (std::size_t s = 0; s < picked.size(); ++s) {
        const std::size_t slot = cache.at(j, picked[s]);
        const auto& scores = cache.scores[slot];
        if (target.is_metric) {
          clean.add_value(
              metric_from_order(target.metric, scores, cache.orders[slot], cache.labels[picked[s]]));
          noisy.add_value(
              metric_from_order(target.metric, scores, cache.orders[slot], noisy_labels[s]));
        } else {
          clean.add_loss(cache.clean_loss[slot], target.loss.mode);
          noisy.add_loss(query_loss(loss, target.loss.mode, scores, noisy_labels[s]),
                         target.loss.mode);
        }
      }
      t.clean[d * cache.scorers + j] = clean.value();
      t.noisy[d * cache.scorers + j] = noisy.value();
    }
  });
  return t;
}

struct MeansFit {
  std::vector<double> clean;
  std::vector<double> noisy;
  LinearFit fit;
};

// Means over draws, leaving out draws in [skip_begin, skip_end).
MeansFit fit_means(const DrawTable& t, std::size_t skip_begin, std::size_t skip_end) {
  MeansFit m{std::vector<double>(t.scorers, 0.0), std::vector<double>(t.scorers, 0.0), {}};
  std::size_t used = 0;
  for (std::size_t d = 0; d < t.draws; ++d) {
    if (d >= skip_begin && d < skip_end) continue;
    ++used;
    for (std::size_t j = 0; j < t.scorers; ++j) {
      m.clean[j] += t.clean[d * t.scorers + j];
      m.noisy[j] += t.noisy[d * t.scorers + j];
    }
  }
  for (std::size_t j = 0; j < t.scorers; ++j) {
    m.clean[j] /= static_cast<double>(used);
    m.noisy[j] /= static_cast<double>(used);
  }
  m.fit = fit_ols(m.clean, m.noisy);
  return m;
}

// Delete-a-group jackknife: contiguous blocks of draws are left out in turn.
constexpr std::size_t kJackknifeGroups = 50;

}  // namespace

AffinityReport affinity_analysis(std::span<const PerturbedOracleScorer> family, const Dataset& pool,
                                 const AffinityTarget& target, const AffinitySpec& spec) {
  if (spec.draws == 0) throw InputError("affinity analysis needs at least one draw");
  if (spec.queries_per_draw == 0) throw InputError("affinity analysis needs queries per draw");
  if (family.size() < 3) throw InputError("affinity analysis needs at least three scorers");
  if (pool.queries.empty()) throw InputError("affinity analysis needs a nonempty query pool");
  // Validates gamma.
  (void)NoiseSpec(spec.gamma, spec.seed);

  const PoolCache cache = build_cache(family, pool, target, spec.threads);
  const DrawTable table = simulate_draws(cache, target, spec);
  const MeansFit all = fit_means(table, 0, 0);

  AffinityReport r{};
  r.slope = all.fit.slope;
  r.intercept = all.fit.intercept;
  r.r_squared = all.fit.r_squared;
  r.spearman_rho = spearman_rho(all.clean, all.noisy);
  r.draws = spec.draws;
  r.low_confidence = spec.draws < 2;
  for (std::size_t j = 0; j < family.size(); ++j) r.points.push_back({all.clean[j], all.noisy[j]});
  if (auto p = predicted_affinity(target, spec.gamma, pool)) {
    r.predicted_slope = p->first;
    r.predicted_intercept = p->second;
  }

  r.slope_se = kNaN;
  r.intercept_se = kNaN;
  if (!r.low_confidence) {
    const std::size_t groups = std::min(kJackknifeGroups, spec.draws);
    std::vector<double> slopes;
    std::vector<double> intercepts;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t begin = g * spec.draws / groups;
      const std::size_t end = (g + 1) * spec.draws / groups;
      const MeansFit leave_out = fit_means(table, begin, end);
      slopes.push_back(leave_out.fit.slope);
      intercepts.push_back(leave_out.fit.intercept);
    }
    auto jackknife_se = [groups](const std::vector<double>& v) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const auto g = static_cast<double>(groups);
      return std::sqrt((g - 1.0) / g * ss);
    };
    r.slope_se = jackknife_se(slopes);
    r.intercept_se = jackknife_se(intercepts);
  }
  return r;
}

AffinityReport dcg_affinity_check(std::span<const PerturbedOracleScorer> family,
                                  const Dataset& pool, std::size_t k, const AffinitySpec& spec) {
  AffinityTarget target;
  target.is_metric = true;
  target.metric = {MetricKind::Dcg, k};
  AffinityReport r = affinity_analysis(family, pool, target, spec);
  // Loss scale -> gain scale: negating both axes keeps the slope, flips the intercept.
  r.intercept = -r.intercept;
  for (auto& p : r.points) p = {-p.clean, -p.noisy};
  if (r.predicted_intercept) r.predicted_intercept = -*r.predicted_intercept;
  return r;
}

// ---------------------------------------------------------------------------
// Counterexamples

CounterexampleReport counterexample_check(const Dataset& ds, const LossConfig& loss, double gamma,
                                          std::span<const double> scale_grid, std::uint64_t seed) {
  if (!ds.has_oracle()) throw InputError("counterexample check needs a dataset with oracles");
  const MarginLoss margin_loss(loss.kind);
  CounterexampleReport report;
  const BoundedRandomScorer random(derive_seed(seed, "bounded-random"));
  report.random_clean_risk =
      empirical_risk(random, ds, margin_loss, loss.mode, LabelSet::Clean).value;
  report.random_noisy_risk = expected_noisy_risk(random, ds, margin_loss, loss.mode, gamma);

  for (double a : scale_grid) {
    if (!(a > 0.0)) throw InputError("counterexample scales must be positive");
    const PerturbedOracleScorer scaled(0.0, a, seed);
    const double clean = empirical_risk(scaled, ds, margin_loss, loss.mode, LabelSet::Clean).value;
    const double noisy = expected_noisy_risk(scaled, ds, margin_loss, loss.mode, gamma);
    report.rows.push_back({a, clean, noisy});
    if (!report.order_reversed && clean < report.random_clean_risk &&
        noisy > report.random_noisy_risk) {
      report.order_reversed = true;
      report.witness_scale = a;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Bounds

double deviation_bound(double n, double epsilon, double gamma, double shatter_log) {
  if (!(n >= 1.0)) throw InputError("deviation bound needs n >= 1");
  if (!(epsilon > 0.0)) throw InputError("deviation bound needs epsilon > 0");
  require_gamma_for_bound(gamma);
  const double slope = 2.0 * gamma - 1.0;
  const double log_bound = std::log(8.0) + shatter_log - n * epsilon * epsilon * slope * slope / 128.0;
  return log_bound >= 0.0 ? 1.0 : std::exp(log_bound);
}

double expected_excess_bound(double n, double gamma, double shatter_log) {
  if (!(n >= 1.0)) throw InputError("expected excess bound needs n >= 1");
  require_gamma_for_bound(gamma);
  const double slope = 2.0 * gamma - 1.0;
  const double log_term = std::log(8.0) + 1.0 + shatter_log;  // log(8 e S)
  return 16.0 * std::sqrt(log_term / (2.0 * n * slope * slope));
}

double almost_minimizer_bound(double n, double epsilon, double gamma, double shatter_log,
                              double eps_n, double delta_n) {
  if (!(n >= 1.0)) throw InputError("bound needs n >= 1");
  if (!(epsilon > 0.0)) throw InputError("bound needs epsilon > 0");
  if (!(eps_n >= 0.0) || !(delta_n >= 0.0)) throw InputError("eps_n and delta_n must be >= 0");
  require_gamma_for_bound(gamma);
  const double gap = epsilon * (2.0 * gamma - 1.0) - eps_n;
  if (gap <= 0.0) return 1.0;
  const double log_tail = std::log(8.0) + shatter_log - n * gap * gap / 128.0;
  return std::min(1.0, delta_n + std::exp(std::min(0.0, log_tail)));
}

}  // namespace noisyrank
