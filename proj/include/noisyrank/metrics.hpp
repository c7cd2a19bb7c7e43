#pragma once

// Ranking metrics expressed as losses: every value is the negated metric, so
// smaller is better. DCG uses the discount D_i = log2(1 + i). Documents are
// ordered by descending score; equal scores keep ascending input order.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace noisyrank {

/// Non-owning view of one query's scores and binary labels.
struct RankedQuery {
  std::span<const double> scores;
  std::span<const int> labels;
  std::string_view query_id{};
};

/// Document indices sorted by descending score, ties by ascending index.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// D_i = log2(1 + i) for a 1-based rank i.
double dcg_discount(std::size_t rank);

double dcg_at_k(const RankedQuery& q, std::size_t k);
std::optional<double> ndcg_at_k(const RankedQuery& q, std::size_t k);
std::optional<double> auc(const RankedQuery& q);
std::optional<double> average_precision(const RankedQuery& q);

// Variants taking a precomputed rank_order(q.scores). Used in simulations
// where the same ranking is scored against many label vectors.
double dcg_at_k(std::span<const std::size_t> order, std::span<const int> labels, std::size_t k);
std::optional<double> ndcg_at_k(std::span<const std::size_t> order, std::span<const int> labels,
                                std::size_t k);
std::optional<double> average_precision(std::span<const std::size_t> order,
                                        std::span<const int> labels);
std::optional<double> auc(std::span<const std::size_t> order, std::span<const double> scores,
                          std::span<const int> labels);

enum class MetricKind { Auc, Dcg, Ndcg, Map };

struct MetricSpec {
  MetricKind kind;
  std::size_t k = 0;  // cutoff for Dcg/Ndcg

  /// "auc", "dcg@K", "ndcg@K", "map".
  std::string name() const;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

/// Parses a metric name. Throws InputError on unknown names or k = 0.
MetricSpec parse_metric(std::string_view name);

/// True when `name` parses as a metric.
bool is_metric_name(std::string_view name);

/// Per-query metric value; nullopt when undefined for the query.
std::optional<double> evaluate_metric(const RankedQuery& q, const MetricSpec& metric);

struct MetricValue {
  double value;
  std::size_t queries_used;
  std::size_t queries_skipped;
};

/// Mean over the queries where the metric is defined. Throws InputError when
/// the list is empty or every query is skipped.
MetricValue mean_metric(std::span<const RankedQuery> queries, const MetricSpec& metric);

}  // namespace noisyrank
