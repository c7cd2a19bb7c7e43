#include "noisyrank/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "noisyrank/csv.hpp"
#include "noisyrank/error.hpp"
#include "noisyrank/noise.hpp"
#include "noisyrank/parallel.hpp"
#include "noisyrank/random.hpp"

namespace noisyrank {

namespace {

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (c == '@') {
      out += "_at_";
    } else {
      out += c;
    }
  }
  return out;
}

std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string{};
}

}  // namespace

// ---------------------------------------------------------------------------
// Order preservation

Dataset simulation_pool(const OrderPreservationSpec& spec) {
  SyntheticSpec s;
  s.num_queries = spec.pool_queries;
  s.docs_per_query = spec.docs_per_query;
  s.feature_dim = spec.feature_dim;
  s.seed = derive_seed(spec.seed, "pool");
  s.theta_sharing = ThetaSharing::PerQuery;
  s.label_mode = LabelMode::Bernoulli;
  s.prevalence_range = std::pair{0.1, 0.9};
  return generate_synthetic(s);
}

std::vector<OrderPreservationSummary> run_order_preservation_experiment(
    const OrderPreservationSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.targets.empty()) throw InputError("no loss or metric requested");
  std::vector<AffinityTarget> targets;
  for (const auto& name : spec.targets) targets.push_back(parse_target(name));
  if (spec.scorers < 3) throw InputError("need at least three scorers");
  (void)NoiseSpec(spec.gamma, spec.seed);

  std::filesystem::create_directories(out_dir);
  const Dataset pool = simulation_pool(spec);
  const ScorerFamily family = ScorerFamily::standard(spec.scorers, derive_seed(spec.seed, "family"));
  const auto scorers = build_scorer_family(family, pool);

  AffinitySpec aspec;
  aspec.gamma = spec.gamma;
  aspec.draws = spec.draws;
  aspec.queries_per_draw = spec.queries_per_draw;
  aspec.seed = derive_seed(spec.seed, "draws");
  aspec.threads = spec.threads;

  std::vector<OrderPreservationSummary> out;
  for (const auto& target : targets) {
    OrderPreservationSummary s{target.name(), affinity_analysis(scorers, pool, target, aspec), {}};
    s.points_file = out_dir / ("points_" + file_stem(s.target) + ".csv");
    CsvWriter points(s.points_file);
    points.row({"scorer_id", "perturbation", "scale", "clean_risk", "noisy_risk"});
    for (std::size_t j = 0; j < scorers.size(); ++j) {
      points.row({std::to_string(j), format_real(family.perturbation_levels[j]),
                  format_real(family.scales[j]), format_real(s.report.points[j].clean),
                  format_real(s.report.points[j].noisy)});
    }
    out.push_back(std::move(s));
  }

  CsvWriter summary(out_dir / "summary.csv");
  summary.row({"target", "gamma", "draws", "slope", "intercept", "r_squared", "spearman_rho",
               "predicted_slope", "predicted_intercept", "slope_se", "intercept_se",
               "low_confidence"});
  for (const auto& s : out) {
    const auto& r = s.report;
    summary.row({s.target, format_real(spec.gamma), std::to_string(r.draws), format_real(r.slope),
                 format_real(r.intercept), format_real(r.r_squared), format_real(r.spearman_rho),
                 optional_real(r.predicted_slope), optional_real(r.predicted_intercept),
                 format_real(r.slope_se), format_real(r.intercept_se),
                 r.low_confidence ? "true" : "false"});
  }

  if (spec.plot_data) {
    CsvWriter plot(out_dir / "fig1_long.csv");
    plot.row({"panel", "scorer_id", "scale", "clean_risk", "noisy_risk", "fitted_noisy_risk"});
    for (const auto& s : out) {
      for (std::size_t j = 0; j < s.report.points.size(); ++j) {
        const auto& p = s.report.points[j];
        plot.row({s.target, std::to_string(j), format_real(family.scales[j]),
                  format_real(p.clean), format_real(p.noisy),
                  format_real(s.report.intercept + s.report.slope * p.clean)});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ERM sweep

NamedLoss parse_named_loss(std::string_view name) {
  const AffinityTarget t = parse_target(name);
  if (t.is_metric) throw InputError("'" + std::string(name) + "' is a metric, not a training loss");
  if (t.loss.kind == LossKind::ZeroOne) throw InputError("the zero_one loss cannot be trained");
  return {t.name(), t.loss};
}

SyntheticSpec sweep_synthetic_default() {
  SyntheticSpec s;
  s.num_queries = 50;
  s.docs_per_query = 10;
  s.feature_dim = 5;
  s.theta_sharing = ThetaSharing::Shared;
  s.label_mode = LabelMode::Separable;
  return s;
}

std::optional<double> SweepResult::median(double gamma, const std::string& loss,
                                          const std::string& metric) const {
  std::vector<double> values;
  for (const auto& r : rows) {
    if (r.gamma == gamma && r.loss == loss && r.metric == metric && r.status == "ok") {
      values.push_back(r.value);
    }
  }
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct SeedData {
  Dataset train;
  Dataset holdout;
  Dataset test;
};

SeedData prepare_seed(const SweepSpec& spec, const Dataset* letor, std::uint64_t seed) {
  Dataset full;
  if (letor) {
    full = *letor;
  } else {
    SyntheticSpec s = spec.source.synthetic;
    s.seed = derive_seed(seed, "data");
    full = generate_synthetic(s);
  }
  Split outer = split(full, 1.0 - spec.test_fraction, derive_seed(seed, "test-split"));
  Split inner = split(outer.train, 1.0 - spec.holdout_fraction, derive_seed(seed, "holdout-split"));
  SeedData d{std::move(inner.train), std::move(inner.holdout), std::move(outer.holdout)};

  if (spec.source.normalize == NormalizeMode::PerQueryMinMax) {
    for (Dataset* part : {&d.train, &d.holdout, &d.test}) {
      *part = normalize_features(std::move(*part), NormalizeMode::PerQueryMinMax);
    }
  } else if (spec.source.normalize == NormalizeMode::GlobalStandardize) {
    const Standardizer st = Standardizer::fit(d.train);
    for (Dataset* part : {&d.train, &d.holdout, &d.test}) *part = st.apply(std::move(*part));
  }
  return d;
}

}  // namespace

SweepResult run_erm_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.seeds.empty()) throw InputError("the sweep needs at least one seed");
  if (spec.gammas.empty()) throw InputError("the sweep needs at least one gamma");
  for (double g : spec.gammas) {
    if (!(g > 0.5 && g <= 1.0)) {
      throw InputError(fmt::format("sweep gammas must lie in (0.5, 1], got {}", g));
    }
  }
  std::vector<NamedLoss> losses;
  for (const auto& name : spec.losses) losses.push_back(parse_named_loss(name));
  std::vector<MetricSpec> metrics;
  for (const auto& name : spec.metrics) metrics.push_back(parse_metric(name));
  if (losses.empty() || metrics.empty()) throw InputError("the sweep needs losses and metrics");

  std::optional<Dataset> letor;
  if (!spec.source.letor_path.empty()) {
    letor = binarize(parse_letor(spec.source.letor_path), spec.source.binarize_threshold);
  }

  std::vector<SeedData> seed_data;
  for (auto seed : spec.seeds) seed_data.push_back(prepare_seed(spec, letor ? &*letor : nullptr, seed));

  const std::size_t n_gamma = spec.gammas.size();
  const std::size_t n_loss = losses.size();
  const std::size_t n_seed = spec.seeds.size();
  std::vector<std::vector<SweepRow>> job_rows(n_gamma * n_loss * n_seed);

  parallel_for(job_rows.size(), spec.threads, [&](std::size_t job) {
    const std::size_t gi = job / (n_loss * n_seed);
    const std::size_t li = (job / n_seed) % n_loss;
    const std::size_t si = job % n_seed;
    const double gamma = spec.gammas[gi];
    const std::uint64_t seed = spec.seeds[si];
    const SeedData& data = seed_data[si];

    // Noise depends on (seed, gamma) only, so every loss sees the same labels.
    const NoiseSpec noise(gamma, derive_seed(derive_seed(seed, "noise"), std::bit_cast<std::uint64_t>(gamma)));
    const Dataset noisy_train = corrupt_dataset(data.train, noise).noisy;
    const Dataset noisy_holdout = corrupt_dataset(data.holdout, noise).noisy;

    TrainConfig cfg = spec.train;
    cfg.loss = losses[li].config;
    cfg.seed = derive_seed(seed, "train");

    std::optional<LinearScorer> model;
    std::string status = "ok";
    try {
      model = grid_search(noisy_train, noisy_holdout, cfg, spec.lr_grid, spec.wd_grid, 1).best.model;
    } catch (const TrainingError&) {
      status = "diverged";
    } catch (const InputError&) {
      status = "failed";
    }

    auto& rows = job_rows[job];
    std::vector<std::vector<double>> test_scores;
    std::vector<std::vector<int>> test_labels;
    if (model) {
      for (const auto& q : data.test.queries) {
        test_scores.push_back(model->score_query(q));
        test_labels.push_back(q.labels());
      }
    }
    for (const auto& metric : metrics) {
      double value = std::numeric_limits<double>::quiet_NaN();
      std::string row_status = status;
      if (model) {
        std::vector<RankedQuery> ranked;
        for (std::size_t q = 0; q < test_scores.size(); ++q) {
          ranked.push_back({test_scores[q], test_labels[q], data.test.queries[q].query_id});
        }
        try {
          value = mean_metric(ranked, metric).value;
        } catch (const InputError&) {
          row_status = "undefined";
        }
      }
      rows.push_back({gamma, losses[li].name, seed, metric.name(), value, row_status});
    }
  });

  SweepResult result;
  for (auto& rows : job_rows) {
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }

  std::filesystem::create_directories(out_dir);
  CsvWriter csv(out_dir / "sweep.csv");
  csv.row({"gamma", "loss", "seed", "metric", "value", "status"});
  for (const auto& r : result.rows) {
    csv.row({format_real(r.gamma), r.loss, std::to_string(r.seed), r.metric, format_real(r.value),
             r.status});
  }

  if (spec.plot_data) {
    CsvWriter plot(out_dir / "fig2_long.csv");
    plot.row({"metric", "loss", "gamma", "median_value", "seeds_ok"});
    for (const auto& metric : metrics) {
      for (const auto& loss : losses) {
        for (double gamma : spec.gammas) {
          const auto med = result.median(gamma, loss.name, metric.name());
          const auto ok = std::count_if(result.rows.begin(), result.rows.end(), [&](const SweepRow& r) {
            return r.gamma == gamma && r.loss == loss.name && r.metric == metric.name() &&
                   r.status == "ok";
          });
          plot.row({metric.name(), loss.name, format_real(gamma), optional_real(med),
                    std::to_string(ok)});
        }
      }
    }
  }
  return result;
}

}  // namespace noisyrank
