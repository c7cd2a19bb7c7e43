#include "noisyrank/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "noisyrank/error.hpp"
#include "noisyrank/losses.hpp"
#include "noisyrank/random.hpp"

namespace noisyrank {

double QueryOracle::logit(std::span<const double> x) const {
  if (x.size() != theta.size()) throw InputError("oracle dimension mismatch");
  return std::inner_product(theta.begin(), theta.end(), x.begin(), bias);
}

double QueryOracle::probability(std::span<const double> x) const { return sigmoid(logit(x)); }

std::vector<int> QueryGroup::labels() const {
  std::vector<int> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.label);
  return out;
}

std::size_t Dataset::num_documents() const noexcept {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.size();
  return n;
}

bool Dataset::has_oracle() const noexcept {
  return !queries.empty() &&
         std::all_of(queries.begin(), queries.end(), [](const auto& q) { return q.oracle.has_value(); });
}

// ---------------------------------------------------------------------------
// Synthetic data

double bias_for_prevalence(double prevalence, double theta_norm, LabelMode mode) {
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw InputError("prevalence must lie in (0, 1)");
  // Standard normal quantile.
  const double z = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * prevalence - 1.0);
  if (mode == LabelMode::Separable) return theta_norm * z;
  // sigmoid(t) ~ Phi(lambda t), so E[sigmoid(t + b)] ~ Phi(lambda b / sqrt(1 + lambda^2 s^2)).
  const double lambda2 = std::numbers::pi / 8.0;
  return z * std::sqrt(1.0 + lambda2 * theta_norm * theta_norm) / std::sqrt(lambda2);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_queries == 0 || spec.docs_per_query == 0 || spec.feature_dim == 0) {
    throw InputError("synthetic spec needs positive num_queries, docs_per_query and feature_dim");
  }
  if (spec.prevalence_range) {
    const auto [lo, hi] = *spec.prevalence_range;
    if (!(lo > 0.0 && lo <= hi && hi < 1.0)) throw InputError("prevalence range must lie in (0, 1)");
  }
  const std::size_t d = spec.feature_dim;
  auto draw_theta = [d](Rng& rng) {
    std::vector<double> theta(d);
    for (auto& t : theta) t = rng.normal();
    return theta;
  };

  std::vector<double> shared_theta;
  if (spec.theta_sharing == ThetaSharing::Shared) {
    Rng rng(derive_seed(spec.seed, "theta"));
    shared_theta = draw_theta(rng);
  }

  Dataset ds;
  ds.feature_dim = d;
  ds.provenance = Provenance::Synthetic;
  ds.queries.reserve(spec.num_queries);
  for (std::size_t qi = 0; qi < spec.num_queries; ++qi) {
    Rng rng(derive_seed(spec.seed, qi));
    QueryGroup q;
    q.query_id = std::to_string(qi + 1);
    QueryOracle oracle;
    oracle.theta = spec.theta_sharing == ThetaSharing::Shared ? shared_theta : draw_theta(rng);
    if (spec.prevalence_range) {
      const auto [lo, hi] = *spec.prevalence_range;
      const double target = rng.uniform(lo, hi);
      const double norm = std::sqrt(std::inner_product(oracle.theta.begin(), oracle.theta.end(),
                                                       oracle.theta.begin(), 0.0));
      oracle.bias = bias_for_prevalence(target, norm, spec.label_mode);
    }
    q.documents.reserve(spec.docs_per_query);
    for (std::size_t j = 0; j < spec.docs_per_query; ++j) {
      Document doc;
      doc.features.resize(d);
      for (auto& x : doc.features) x = rng.normal();
      const double t = oracle.logit(doc.features);
      const double u = rng.uniform();
      doc.label = spec.label_mode == LabelMode::Separable ? (t > 0.0 ? 1 : 0)
                                                          : (u < sigmoid(t) ? 1 : 0);
      q.documents.push_back(std::move(doc));
    }
    q.oracle = std::move(oracle);
    ds.queries.push_back(std::move(q));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// LETOR / SVMLight text format

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

struct ParsedLine {
  int label;
  std::string qid;
  std::vector<std::pair<std::size_t, double>> features;
  std::string comment;
};

ParsedLine parse_line(std::string_view line, std::size_t line_no) {
  ParsedLine out;
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    out.comment = std::string(trim(line.substr(hash + 1)));
    line = line.substr(0, hash);
  }
  std::vector<std::string_view> tokens;
  for (std::size_t pos = 0; pos < line.size();) {
    const auto start = line.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    const auto end = std::min(line.find_first_of(" \t\r", start), line.size());
    tokens.push_back(line.substr(start, end - start));
    pos = end;
  }
  if (tokens.size() < 2) throw ParseError(line_no, "expected '<label> qid:<id> ...'");
  if (!parse_number(tokens[0], out.label)) {
    throw ParseError(line_no, "label '" + std::string(tokens[0]) + "' is not an integer");
  }
  if (!tokens[1].starts_with("qid:") || tokens[1].size() == 4) {
    throw ParseError(line_no, "expected qid:<id>, got '" + std::string(tokens[1]) + "'");
  }
  out.qid = std::string(tokens[1].substr(4));

  std::size_t previous = 0;
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    const auto tok = tokens[t];
    const auto colon = tok.find(':');
    std::size_t index = 0;
    double value = 0.0;
    if (colon == std::string_view::npos || !parse_number(tok.substr(0, colon), index) ||
        !parse_number(tok.substr(colon + 1), value)) {
      throw ParseError(line_no, "malformed feature '" + std::string(tok) + "'");
    }
    if (index == 0) throw ParseError(line_no, "feature indices are 1-based");
    if (index <= previous) throw ParseError(line_no, "feature indices must be strictly ascending");
    previous = index;
    out.features.emplace_back(index, value);
  }
  return out;
}

}  // namespace

Dataset parse_letor(std::istream& in) {
  Dataset ds;
  ds.provenance = Provenance::LetorFile;
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::pair<std::size_t, double>>> sparse;  // parallel to documents
  std::vector<std::pair<std::size_t, std::size_t>> where;            // (group, doc)

  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ParsedLine parsed = parse_line(line, line_no);
    auto [it, inserted] = group_of.try_emplace(parsed.qid, ds.queries.size());
    if (inserted) ds.queries.push_back(QueryGroup{parsed.qid, {}, std::nullopt});
    auto& group = ds.queries[it->second];
    if (!parsed.features.empty()) max_index = std::max(max_index, parsed.features.back().first);
    where.emplace_back(it->second, group.documents.size());
    group.documents.push_back(Document{{}, parsed.label, std::move(parsed.comment)});
    sparse.push_back(std::move(parsed.features));
  }
  ds.feature_dim = max_index;
  for (std::size_t n = 0; n < sparse.size(); ++n) {
    auto& doc = ds.queries[where[n].first].documents[where[n].second];
    doc.features.assign(max_index, 0.0);
    for (const auto& [index, value] : sparse[n]) doc.features[index - 1] = value;
  }
  return ds;
}

Dataset parse_letor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_letor(in);
}

void write_letor(const Dataset& ds, std::ostream& out) {
  for (const auto& q : ds.queries) {
    for (const auto& doc : q.documents) {
      std::string line = fmt::format("{} qid:{}", doc.label, q.query_id);
      for (std::size_t i = 0; i < doc.features.size(); ++i) {
        line += fmt::format(" {}:{}", i + 1, doc.features[i]);
      }
      if (!doc.doc_id.empty()) line += " #" + doc.doc_id;
      out << line << '\n';
    }
  }
}

void write_letor(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_letor(ds, out);
}

// ---------------------------------------------------------------------------
// Label and feature transforms

Dataset binarize(Dataset ds, int threshold) {
  for (auto& q : ds.queries) {
    for (auto& doc : q.documents) {
      if (doc.label < 0) throw InputError("cannot binarize negative label " + std::to_string(doc.label));
      doc.label = doc.label >= threshold ? 1 : 0;
    }
  }
  return ds;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  const std::size_t d = ds.feature_dim;
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const auto n = static_cast<double>(ds.num_documents());
  if (n == 0) return s;
  for (const auto& q : ds.queries)
    for (const auto& doc : q.documents)
      for (std::size_t f = 0; f < d; ++f) s.mean[f] += doc.features[f];
  for (auto& m : s.mean) m /= n;
  for (const auto& q : ds.queries)
    for (const auto& doc : q.documents)
      for (std::size_t f = 0; f < d; ++f) {
        const double c = doc.features[f] - s.mean[f];
        s.stddev[f] += c * c;
      }
  for (auto& v : s.stddev) v = std::sqrt(v / n);
  return s;
}

Dataset Standardizer::apply(Dataset ds) const {
  if (ds.feature_dim != mean.size()) throw InputError("standardizer dimension mismatch");
  for (auto& q : ds.queries)
    for (auto& doc : q.documents)
      for (std::size_t f = 0; f < mean.size(); ++f) {
        doc.features[f] = stddev[f] > 0.0 ? (doc.features[f] - mean[f]) / stddev[f] : 0.0;
      }
  return ds;
}

Dataset normalize_features(Dataset ds, NormalizeMode mode) {
  if (mode == NormalizeMode::GlobalStandardize) return Standardizer::fit(ds).apply(std::move(ds));
  for (auto& q : ds.queries) {
    for (std::size_t f = 0; f < ds.feature_dim; ++f) {
      double lo = INFINITY;
      double hi = -INFINITY;
      for (const auto& doc : q.documents) {
        lo = std::min(lo, doc.features[f]);
        hi = std::max(hi, doc.features[f]);
      }
      for (auto& doc : q.documents) {
        doc.features[f] = hi > lo ? (doc.features[f] - lo) / (hi - lo) : 0.0;
      }
    }
  }
  return ds;
}

Split split(const Dataset& ds, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw InputError("train_frac must lie in (0, 1)");
  const std::size_t n = ds.queries.size();
  // The epsilon absorbs representation error, e.g. 10 * (1 - 0.8) = 1.9999999999999996.
  const auto holdout_count =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - train_frac) + 1e-9));
  if (holdout_count == 0 || holdout_count >= n) {
    throw InputError("split of " + std::to_string(n) + " queries at train_frac " +
                     std::to_string(train_frac) + " leaves a side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> in_holdout(n, false);
  for (std::size_t i = 0; i < holdout_count; ++i) in_holdout[order[i]] = true;

  Split out;
  for (Dataset* side : {&out.train, &out.holdout}) {
    side->feature_dim = ds.feature_dim;
    side->provenance = ds.provenance;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_holdout[i] ? out.holdout : out.train).queries.push_back(ds.queries[i]);
  }
  return out;
}

}  // namespace noisyrank
