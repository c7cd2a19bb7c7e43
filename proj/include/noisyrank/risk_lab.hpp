#pragma once

// Clean vs. noisy risk estimation, the affinity analysis that regresses noisy
// risk on clean risk across a family of scorers, the counterexample harness
// for losses that do not preserve order, and the finite-sample bounds.
//
// For a label-symmetric loss with constant c and keep-probability gamma,
// E[noisy risk] = (2 gamma - 1) * clean risk + c (1 - gamma): the affinity
// fit should recover that slope and intercept.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisyrank/data.hpp"
#include "noisyrank/losses.hpp"
#include "noisyrank/metrics.hpp"
#include "noisyrank/training.hpp"

namespace noisyrank {

// ---------------------------------------------------------------------------
// Scorers

class Scorer {
 public:
  virtual ~Scorer() = default;

  /// Writes one score per document of `q` into `out` (out.size() == q.size()).
  virtual void score_query(const QueryGroup& q, std::span<double> out) const = 0;

  std::vector<double> scores(const QueryGroup& q) const;
};

class LinearModelScorer final : public Scorer {
 public:
  explicit LinearModelScorer(LinearScorer model) : model_(std::move(model)) {}
  void score_query(const QueryGroup& q, std::span<double> out) const override;

 private:
  LinearScorer model_;
};

/// scale * (P(y = 1 | x) - 1/2 + perturbation * z), with z ~ N(0, 1) a pure
/// function of (seed, query_id, document index). Requires a query oracle.
class PerturbedOracleScorer final : public Scorer {
 public:
  PerturbedOracleScorer(double perturbation, double scale, std::uint64_t seed)
      : perturbation_(perturbation), scale_(scale), seed_(seed) {}

  void score_query(const QueryGroup& q, std::span<double> out) const override;

  double perturbation() const noexcept { return perturbation_; }
  double scale() const noexcept { return scale_; }

 private:
  double perturbation_;
  double scale_;
  std::uint64_t seed_;
};

/// Uniform in [-1, 1] per document, a pure function of (seed, query_id, index).
class BoundedRandomScorer final : public Scorer {
 public:
  explicit BoundedRandomScorer(std::uint64_t seed) : seed_(seed) {}
  void score_query(const QueryGroup& q, std::span<double> out) const override;

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Risk estimates

enum class LabelSet { Clean, Noisy };

enum class RiskKind { PointwiseClean, PointwiseNoisy, PairwiseClean, PairwiseNoisy };

struct RiskEstimate {
  double value;
  RiskKind kind;
  std::size_t n_terms;    // documents, or mixed-label pairs
  std::size_t n_queries;  // queries that contributed
};

/// Pointwise: mean loss over all documents. Pairwise: mean over mixed-label
/// pairs within each query, then mean over queries with at least one.
/// `labels` only tags the estimate; the dataset's labels are used as given.
/// Throws InputError when there is no term.
RiskEstimate empirical_risk(const Scorer& scorer, const Dataset& ds, const MarginLoss& loss,
                            Mode mode, LabelSet labels);

/// Noisy risk averaged exactly over the label noise. Pointwise:
/// gamma * L + (1 - gamma) * L_flipped. Pairwise, per query: every ordered
/// pair (i, j) is weighted by the probability that the noisy labels read
/// (1, 0), normalized by the total weight; queries are then averaged.
double expected_noisy_risk(const Scorer& scorer, const Dataset& ds, const MarginLoss& loss,
                           Mode mode, double gamma);

// ---------------------------------------------------------------------------
// Scorer family

struct ScorerFamily {
  std::vector<double> perturbation_levels;
  std::vector<double> scales;
  std::uint64_t seed = 0;

  /// `size` scorers with perturbation increasing linearly from 0 to
  /// max_perturbation; every odd-indexed scorer is multiplied by `scale`.
  static ScorerFamily standard(std::size_t size = 100, std::uint64_t seed = 0,
                               double max_perturbation = 2.0, double scale = 10.0);

  std::size_t size() const noexcept { return perturbation_levels.size(); }
};

/// Throws InputError when the dataset has no oracle or the family is malformed.
std::vector<PerturbedOracleScorer> build_scorer_family(const ScorerFamily& family,
                                                       const Dataset& ds);

// ---------------------------------------------------------------------------
// Affinity analysis

/// A loss applied in a mode, or a ranking metric.
struct AffinityTarget {
  bool is_metric = false;
  LossConfig loss{};
  MetricSpec metric{MetricKind::Auc, 0};

  std::string name() const;
};

/// Loss names (pointwise), "ranknet" / "symmetrized_ranknet" (pairwise
/// logistic and symmetrized logistic), "pairwise_<loss>", or a metric name.
AffinityTarget parse_target(std::string_view name);

struct AffinitySpec {
  double gamma = 0.9;
  std::size_t draws = 1000;
  std::size_t queries_per_draw = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct AffinityPoint {
  double clean;
  double noisy;
};

struct AffinityReport {
  double slope;
  double intercept;
  double r_squared;
  double spearman_rho;
  double slope_se;      // jackknife over draws; NaN with one draw
  double intercept_se;
  std::vector<AffinityPoint> points;  // across-draw means, one per scorer
  std::optional<double> predicted_slope;
  std::optional<double> predicted_intercept;
  std::size_t draws;
  bool low_confidence;  // fewer than two draws, so no standard error
};

/// For each draw: sample queries_per_draw pool queries with replacement,
/// corrupt their labels at gamma, evaluate every scorer on clean and noisy
/// labels. Per-scorer means over draws are fitted by OLS (noisy ~ clean) and
/// compared by Spearman correlation. Throws InputError when draws == 0 or all
/// clean means coincide.
AffinityReport affinity_analysis(std::span<const PerturbedOracleScorer> family, const Dataset& pool,
                                 const AffinityTarget& target, const AffinitySpec& spec);

/// Analytic (slope, intercept) of the noisy-vs-clean line, when one exists:
/// label-symmetric losses, DCG@k and AUC. Uses the pool's query sizes for DCG.
std::optional<std::pair<double, double>> predicted_affinity(const AffinityTarget& target,
                                                            double gamma, const Dataset& pool);

/// DCG@k affinity on the gain scale (the un-negated DCG), where
/// E[noisy gain] = (2 gamma - 1) E[gain] + sum_{i <= k} (1 - gamma) / D_i.
/// The predicted intercept averages that sum over the pool's queries.
AffinityReport dcg_affinity_check(std::span<const PerturbedOracleScorer> family,
                                  const Dataset& pool, std::size_t k, const AffinitySpec& spec);

// ---------------------------------------------------------------------------
// Counterexamples

struct ScaleRow {
  double scale;
  double clean_risk;
  double noisy_risk;
};

struct CounterexampleReport {
  bool order_reversed = false;
  std::optional<double> witness_scale;
  double random_clean_risk = 0.0;
  double random_noisy_risk = 0.0;
  std::vector<ScaleRow> rows;
};

/// Compares f_a(x) = a * (P(y = 1 | x) - 1/2) against a bounded random scorer
/// for each a in scale_grid. Order is reversed when f_a has the lower clean
/// risk but the higher noise-averaged risk. Requires a dataset with oracles.
CounterexampleReport counterexample_check(const Dataset& ds, const LossConfig& loss, double gamma,
                                          std::span<const double> scale_grid,
                                          std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Finite-sample bounds

/// min(1, 8 S exp(-n eps^2 (2 gamma - 1)^2 / 128)) with log S = shatter_log.
/// Throws InputError unless n >= 1, eps > 0 and gamma in (0.5, 1].
double deviation_bound(double n, double epsilon, double gamma, double shatter_log);

/// 16 sqrt(log(8 e S) / (2 n (2 gamma - 1)^2)).
double expected_excess_bound(double n, double gamma, double shatter_log);

/// Deviation bound when the noisy empirical risk is only minimized to within
/// eps_n with probability 1 - delta_n:
/// min(1, delta_n + 8 S exp(-n (eps (2 gamma - 1) - eps_n)^2 / 128)),
/// vacuous (1) when eps (2 gamma - 1) <= eps_n.
double almost_minimizer_bound(double n, double epsilon, double gamma, double shatter_log,
                              double eps_n, double delta_n);

// ---------------------------------------------------------------------------
// Statistics used by the affinity fit

struct LinearFit {
  double slope;
  double intercept;
  double r_squared;
};

/// Ordinary least squares y ~ x. Throws InputError on fewer than two points
/// or zero variance in x.
LinearFit fit_ols(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace noisyrank
