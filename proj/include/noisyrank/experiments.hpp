#pragma once

// End-to-end experiment drivers: the order-preservation simulation and the
// ERM-under-noise sweep. Both write RFC-4180 CSV files into an output
// directory and are byte-reproducible for a fixed spec.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noisyrank/data.hpp"
#include "noisyrank/metrics.hpp"
#include "noisyrank/risk_lab.hpp"
#include "noisyrank/training.hpp"

namespace noisyrank {

struct OrderPreservationSpec {
  std::vector<std::string> targets{"auc", "ndcg@10", "map", "logistic", "exponential"};
  double gamma = 0.9;
  std::size_t scorers = 100;
  std::size_t draws = 1000;
  std::size_t queries_per_draw = 100;
  /// Query pool the draws sample from.
  std::size_t pool_queries = 1000;
  std::size_t docs_per_query = 10;
  std::size_t feature_dim = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool plot_data = false;
};

/// Bernoulli-labelled synthetic pool with per-query theta and prevalence
/// spread over [0.1, 0.9].
Dataset simulation_pool(const OrderPreservationSpec& spec);

struct OrderPreservationSummary {
  std::string target;
  AffinityReport report;
  std::filesystem::path points_file;
};

/// Runs affinity_analysis for every target and writes points_<target>.csv
/// (scorer_id, perturbation, scale, clean_risk, noisy_risk) plus summary.csv.
/// Every target name is validated before any computation.
std::vector<OrderPreservationSummary> run_order_preservation_experiment(
    const OrderPreservationSpec& spec, const std::filesystem::path& out_dir);

/// A training objective: loss kind plus mode, named "logistic", "ranknet",
/// "symmetrized_logistic", "symmetrized_ranknet" (or any "<loss>" /
/// "pairwise_<loss>").
struct NamedLoss {
  std::string name;
  LossConfig config;
};

NamedLoss parse_named_loss(std::string_view name);

/// Synthetic source used by the sweep: 50 queries x 10 documents x 5
/// features, one theta shared by all queries and separable labels.
SyntheticSpec sweep_synthetic_default();

struct DataSource {
  /// Empty path: synthetic data from `synthetic`.
  std::filesystem::path letor_path;
  SyntheticSpec synthetic = sweep_synthetic_default();
  int binarize_threshold = 1;
  std::optional<NormalizeMode> normalize;
};

struct SweepSpec {
  std::vector<double> gammas{1.0, 0.9, 0.8, 0.7, 0.6, 0.51};
  std::vector<std::string> losses{"logistic", "ranknet", "symmetrized_logistic",
                                  "symmetrized_ranknet"};
  std::vector<std::string> metrics{"ndcg@10", "map", "auc"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  DataSource source{};
  std::vector<double> lr_grid{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> wd_grid{1e-5, 1e-4, 1e-3};
  double test_fraction = 0.2;
  double holdout_fraction = 0.2;
  TrainConfig train{};
  std::size_t threads = 1;
  bool plot_data = false;
};

struct SweepRow {
  double gamma;
  std::string loss;
  std::uint64_t seed;
  std::string metric;
  double value;  // NaN when training failed
  std::string status;  // "ok" or "diverged"
};

struct SweepResult {
  std::vector<SweepRow> rows;

  /// Median over seeds of the rows matching (gamma, loss, metric) with status ok.
  std::optional<double> median(double gamma, const std::string& loss,
                               const std::string& metric) const;
};

/// For every (gamma, loss, seed): split off a clean test set, corrupt the
/// training and holdout labels at gamma, grid-search on the noisy data and
/// evaluate each metric on the clean test set. Writes sweep.csv. Throws
/// InputError for gamma <= 0.5, unknown names or an empty seed list.
SweepResult run_erm_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

}  // namespace noisyrank
