#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace noisyrank {

struct Document {
  std::vector<double> features;
  int label = 0;  // raw integer until binarize()
  std::string doc_id;
};

/// Generating parameters of a synthetic query: P(y = 1 | x) = sigmoid(<theta, x> + bias).
struct QueryOracle {
  std::vector<double> theta;
  double bias = 0.0;

  double logit(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

struct QueryGroup {
  std::string query_id;
  std::vector<Document> documents;
  std::optional<QueryOracle> oracle;

  std::vector<int> labels() const;
  std::size_t size() const noexcept { return documents.size(); }
};

enum class Provenance { Synthetic, LetorFile };

struct Dataset {
  std::vector<QueryGroup> queries;
  std::size_t feature_dim = 0;
  Provenance provenance = Provenance::Synthetic;

  std::size_t num_documents() const noexcept;
  bool has_oracle() const noexcept;
};

/// How relevance directions relate across queries.
enum class ThetaSharing {
  PerQuery,  // an independent theta_q per query
  Shared,    // one theta for every query
};

enum class LabelMode {
  Bernoulli,  // y ~ Bernoulli(sigmoid(<theta, x> + b))
  Separable,  // y = 1[<theta, x> + b > 0]
};

struct SyntheticSpec {
  std::size_t num_queries = 50;
  std::size_t docs_per_query = 10;
  std::size_t feature_dim = 5;
  std::uint64_t seed = 0;
  ThetaSharing theta_sharing = ThetaSharing::PerQuery;
  LabelMode label_mode = LabelMode::Bernoulli;
  /// When set, each query gets a target prevalence drawn uniformly from
  /// [min, max] and a bias offset that tilts its label probabilities to it.
  std::optional<std::pair<double, double>> prevalence_range;
};

/// Draws theta_q ~ N(0, I_d) and x ~ N(0, I_d), labels per the label mode.
/// Query i is generated from its own stream, so adding queries never changes
/// earlier ones. Throws InputError when any size is zero.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Bias b such that E[P(y = 1 | x)] is approximately `prevalence` when
/// <theta, x> ~ N(0, theta_norm^2). Exact for LabelMode::Separable; uses the
/// probit approximation of the logistic function for Bernoulli labels.
double bias_for_prevalence(double prevalence, double theta_norm, LabelMode mode);

/// Reads the LETOR/SVMLight text format:
///   <label> qid:<id> <idx>:<val> ... [# comment]
/// Feature indices are 1-based and strictly ascending; missing ones are 0 and
/// every document is padded to the largest index in the file. Lines with the
/// same qid are grouped, groups ordered by first appearance. The comment, if
/// any, becomes doc_id. Throws ParseError naming the offending line.
Dataset parse_letor(std::istream& in);
Dataset parse_letor(const std::filesystem::path& path);

/// Writes every feature densely with shortest round-trip formatting.
void write_letor(const Dataset& ds, std::ostream& out);
void write_letor(const Dataset& ds, const std::filesystem::path& path);

/// label <- 1 if raw >= threshold else 0. Throws InputError on negative labels.
Dataset binarize(Dataset ds, int threshold = 1);

enum class NormalizeMode { PerQueryMinMax, GlobalStandardize };

/// Per-feature mean and standard deviation fitted on a training split.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Dataset& ds);
  Dataset apply(Dataset ds) const;
};

/// PerQueryMinMax maps each feature into [0, 1] within each query (constant
/// columns become 0). GlobalStandardize fits a Standardizer on `ds` and
/// applies it; use Standardizer directly to reuse training statistics.
Dataset normalize_features(Dataset ds, NormalizeMode mode);

struct Split {
  Dataset train;
  Dataset holdout;
};

/// Query-level split. The holdout gets floor(n * (1 - train_frac)) queries
/// chosen by a seeded shuffle; both sides keep the original query order.
/// Throws InputError when train_frac is outside (0, 1) or a side is empty.
Split split(const Dataset& ds, double train_frac, std::uint64_t seed);

}  // namespace noisyrank
