#pragma once

// Linear scorers trained by empirical risk minimization with Adam.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisyrank/data.hpp"
#include "noisyrank/losses.hpp"

namespace noisyrank {

struct LinearScorer {
  std::vector<double> weights;
  double bias = 0.0;

  static LinearScorer zeros(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0}; }

  /// <w, x> + b. Throws InputError on a dimension mismatch.
  double score(std::span<const double> x) const;

  std::vector<double> score_query(const QueryGroup& q) const;

  /// Weights followed by the bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
};

/// Plain text, one weight per line, bias last.
void save_model(const LinearScorer& model, const std::filesystem::path& path);
LinearScorer load_model(const std::filesystem::path& path);

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double holdout_loss;
};

/// Raised when training produces a non-finite loss or gradient. Keeps the
/// history recorded up to the failure.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<EpochRecord> history = {})
      : std::runtime_error(what), history_(std::move(history)) {}

  const std::vector<EpochRecord>& history() const noexcept { return history_; }

 private:
  std::vector<EpochRecord> history_;
};

struct AdamState {
  std::size_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// One bias-corrected Adam update with decoupled weight decay:
///   params <- params * (1 - lr * weight_decay)
///   params <- params - lr * m_hat / (sqrt(v_hat) + epsilon)
/// Moments are sized on first use. Throws TrainingError on a non-finite
/// gradient and InputError on a dimension mismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient);

struct LossConfig {
  LossKind kind = LossKind::Logistic;
  Mode mode = Mode::Pointwise;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct Gradient {
  std::vector<double> values;  // d risk / d (weights, bias)
  double risk = 0.0;
  std::size_t terms = 0;  // documents (pointwise) or queries with a mixed pair (pairwise)
};

/// Gradient of the empirical risk of `model` over `batch`.
///
/// Pointwise: mean over all documents. Pairwise: mean over mixed-label pairs
/// within each query, then mean over the queries that have one. A pairwise
/// batch without any mixed pair yields terms == 0 and a zero gradient.
Gradient empirical_gradient(const LinearScorer& model, std::span<const QueryGroup> batch,
                            const LossConfig& loss);

/// Empirical risk with the same aggregation as empirical_gradient.
/// Throws InputError when there is no term to average.
double batch_risk(const LinearScorer& model, std::span<const QueryGroup> batch,
                  const LossConfig& loss);

struct TrainConfig {
  LossConfig loss;
  std::size_t max_epochs = 2000;
  std::size_t patience = 10;
  double min_delta = 1e-5;
  /// Queries per mini-batch; 0 means one full-batch step per epoch.
  std::size_t batch_queries = 0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  LinearScorer model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when the initial model was kept
  double best_holdout_loss = 0.0;
  std::size_t skipped_batches = 0;
};

/// Trains from zero initialization. After each epoch the configured loss is
/// evaluated on `holdout`; training stops once the holdout loss has not
/// improved by more than min_delta for `patience` epochs, or at max_epochs.
/// Returns the parameters with the lowest holdout loss seen.
TrainResult train(const Dataset& train_set, const Dataset& holdout, const TrainConfig& config,
                  const AdamState& optimizer);

struct GridCell {
  double learning_rate;
  double weight_decay;
  bool ok;
  double holdout_loss;  // NaN when !ok
  std::string message;
};

struct GridResult {
  TrainResult best;
  double learning_rate;
  double weight_decay;
  std::vector<GridCell> cells;
};

/// Trains one model per (lr, wd) pair after de-duplicating both grids and
/// keeps the lowest holdout loss; ties go to the smaller lr, then smaller wd.
/// Cells run on up to `threads` workers (0 = hardware concurrency).
/// Throws TrainingError listing every cell when all of them fail.
GridResult grid_search(const Dataset& train_set, const Dataset& holdout, const TrainConfig& config,
                       std::vector<double> lr_grid, std::vector<double> wd_grid,
                       std::size_t threads = 1);

}  // namespace noisyrank
