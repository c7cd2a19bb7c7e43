#include "noisyrank/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "noisyrank/error.hpp"

namespace noisyrank {

namespace {

void validate(const RankedQuery& q) {
  if (q.scores.empty()) throw InputError("ranked query has no documents");
  if (q.scores.size() != q.labels.size()) {
    throw InputError("ranked query has " + std::to_string(q.scores.size()) + " scores but " +
                     std::to_string(q.labels.size()) + " labels");
  }
  for (int y : q.labels) {
    if (y != 0 && y != 1) throw InputError("ranked query labels must be binary");
  }
}

void require_cutoff(std::size_t k) {
  if (k == 0) throw InputError("cutoff k must be at least 1");
}

double ideal_gain(std::span<const int> labels, std::size_t k) {
  const auto relevant = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  double gain = 0.0;
  for (std::size_t r = 1; r <= std::min(k, relevant); ++r) gain += 1.0 / dcg_discount(r);
  return gain;
}

}  // namespace

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double dcg_discount(std::size_t rank) { return std::log2(1.0 + static_cast<double>(rank)); }

double dcg_at_k(std::span<const std::size_t> order, std::span<const int> labels, std::size_t k) {
  require_cutoff(k);
  double gain = 0.0;
  const std::size_t top = std::min(k, order.size());
  for (std::size_t r = 0; r < top; ++r) {
    if (labels[order[r]] == 1) gain += 1.0 / dcg_discount(r + 1);
  }
  return -gain;
}

std::optional<double> ndcg_at_k(std::span<const std::size_t> order, std::span<const int> labels,
                                std::size_t k) {
  require_cutoff(k);
  const double ideal = ideal_gain(labels, k);
  if (ideal == 0.0) return std::nullopt;
  return dcg_at_k(order, labels, k) / ideal;
}

std::optional<double> average_precision(std::span<const std::size_t> order,
                                        std::span<const int> labels) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] != 1) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) return std::nullopt;
  return -sum / static_cast<double>(hits);
}

double dcg_at_k(const RankedQuery& q, std::size_t k) {
  validate(q);
  require_cutoff(k);
  return dcg_at_k(rank_order(q.scores), q.labels, k);
}

std::optional<double> ndcg_at_k(const RankedQuery& q, std::size_t k) {
  validate(q);
  require_cutoff(k);
  return ndcg_at_k(rank_order(q.scores), q.labels, k);
}

std::optional<double> average_precision(const RankedQuery& q) {
  validate(q);
  return average_precision(rank_order(q.scores), q.labels);
}

std::optional<double> auc(std::span<const std::size_t> order, std::span<const double> scores,
                          std::span<const int> labels) {
  const auto total_neg = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
  // Walk tie groups from the top. Each positive earns two half-pairs per
  // negative strictly below it and one per negative tied with it, so the
  // tally stays an exact integer.
  std::size_t negatives_seen = 0;
  std::size_t positives = 0;
  std::size_t half_pairs = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::size_t pos_tied = 0;
    std::size_t neg_tied = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      (labels[order[end]] == 1 ? pos_tied : neg_tied) += 1;
      ++end;
    }
    const std::size_t below = total_neg - negatives_seen - neg_tied;
    half_pairs += pos_tied * (2 * below + neg_tied);
    negatives_seen += neg_tied;
    positives += pos_tied;
    start = end;
  }
  const std::size_t pairs = positives * total_neg;
  if (pairs == 0) return std::nullopt;
  return -static_cast<double>(half_pairs) / static_cast<double>(2 * pairs);
}

std::optional<double> auc(const RankedQuery& q) {
  validate(q);
  return auc(rank_order(q.scores), q.scores, q.labels);
}

std::string MetricSpec::name() const {
  switch (kind) {
    case MetricKind::Auc: return "auc";
    case MetricKind::Map: return "map";
    case MetricKind::Dcg: return "dcg@" + std::to_string(k);
    case MetricKind::Ndcg: return "ndcg@" + std::to_string(k);
  }
  return "unknown";
}

MetricSpec parse_metric(std::string_view name) {
  if (name == "auc") return {MetricKind::Auc, 0};
  if (name == "map") return {MetricKind::Map, 0};
  const auto at = name.find('@');
  if (at != std::string_view::npos) {
    const std::string_view head = name.substr(0, at);
    const std::string_view tail = name.substr(at + 1);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
    const bool numeric = ec == std::errc{} && ptr == tail.data() + tail.size() && !tail.empty();
    if (numeric && (head == "dcg" || head == "ndcg")) {
      if (k == 0) throw InputError("metric cutoff must be a positive integer: " + std::string(name));
      return {head == "dcg" ? MetricKind::Dcg : MetricKind::Ndcg, k};
    }
  }
  throw InputError("unknown metric '" + std::string(name) + "'");
}

bool is_metric_name(std::string_view name) {
  try {
    parse_metric(name);
    return true;
  } catch (const InputError&) {
    return false;
  }
}

std::optional<double> evaluate_metric(const RankedQuery& q, const MetricSpec& metric) {
  switch (metric.kind) {
    case MetricKind::Auc: return auc(q);
    case MetricKind::Dcg: return dcg_at_k(q, metric.k);
    case MetricKind::Ndcg: return ndcg_at_k(q, metric.k);
    case MetricKind::Map: return average_precision(q);
  }
  return std::nullopt;
}

MetricValue mean_metric(std::span<const RankedQuery> queries, const MetricSpec& metric) {
  if (queries.empty()) throw InputError("mean_metric needs at least one query");
  MetricValue out{0.0, 0, 0};
  double sum = 0.0;
  for (const auto& q : queries) {
    if (auto v = evaluate_metric(q, metric)) {
      sum += *v;
      ++out.queries_used;
    } else {
      ++out.queries_skipped;
    }
  }
  if (out.queries_used == 0) throw InputError("metric undefined on all queries");
  out.value = sum / static_cast<double>(out.queries_used);
  return out;
}

}  // namespace noisyrank
