// noisyrank: command-line front end for the simulation, sweep and data tools.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "noisyrank/csv.hpp"
#include "noisyrank/data.hpp"
#include "noisyrank/error.hpp"
#include "noisyrank/experiments.hpp"
#include "noisyrank/metrics.hpp"
#include "noisyrank/noise.hpp"
#include "noisyrank/random.hpp"
#include "noisyrank/training.hpp"

namespace fs = std::filesystem;
using namespace noisyrank;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  std::size_t threads = 1;
  bool plot_data = false;

  // Relative output paths land in out_dir.
  fs::path resolve(const fs::path& p) const {
    const fs::path full = p.is_absolute() ? p : out_dir / p;
    if (full.has_parent_path()) fs::create_directories(full.parent_path());
    return full;
  }
};

Dataset load_binary(const fs::path& path, int threshold) {
  return binarize(parse_letor(path), threshold);
}

const std::map<std::string, ThetaSharing> kThetaNames{{"per-query", ThetaSharing::PerQuery},
                                                      {"shared", ThetaSharing::Shared}};
const std::map<std::string, LabelMode> kLabelNames{{"bernoulli", LabelMode::Bernoulli},
                                                   {"separable", LabelMode::Separable}};
const std::map<std::string, std::optional<NormalizeMode>> kNormalizeNames{
    {"none", std::nullopt},
    {"minmax", NormalizeMode::PerQueryMinMax},
    {"standardize", NormalizeMode::GlobalStandardize}};

void write_history(const fs::path& path, const std::vector<EpochRecord>& history) {
  CsvWriter csv(path);
  csv.row({"epoch", "train_loss", "holdout_loss"});
  for (const auto& e : history) {
    csv.row({std::to_string(e.epoch), format_real(e.train_loss), format_real(e.holdout_loss)});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranking risks under class-conditional label noise"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--plot-data", g.plot_data, "Also write long-format plot CSVs");

  // gen-synthetic
  SyntheticSpec synth;
  std::string theta_name = "per-query";
  std::string label_name = "bernoulli";
  fs::path synth_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic LETOR file");
  gen->add_option("--queries", synth.num_queries)->capture_default_str();
  gen->add_option("--docs-per-query", synth.docs_per_query)->capture_default_str();
  gen->add_option("--dim", synth.feature_dim)->capture_default_str();
  gen->add_option("--theta", theta_name)->check(CLI::IsMember({"per-query", "shared"}))->capture_default_str();
  gen->add_option("--labels", label_name)->check(CLI::IsMember({"bernoulli", "separable"}))->capture_default_str();
  gen->add_option("--out", synth_out, "LETOR output file")->required();

  // inject-noise
  double noise_gamma = 0.9;
  fs::path noise_in;
  fs::path noise_out;
  int noise_threshold = 1;
  auto* inject = app.add_subcommand("inject-noise", "Flip labels of a LETOR file");
  inject->add_option("--gamma", noise_gamma, "Probability of keeping a label")->required();
  inject->add_option("--input", noise_in)->required()->check(CLI::ExistingFile);
  inject->add_option("--output", noise_out)->required();
  inject->add_option("--binarize-threshold", noise_threshold)->capture_default_str();

  // train
  std::string train_loss = "logistic";
  std::string train_mode;
  double train_gamma = 1.0;
  std::vector<double> lr_grid{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> wd_grid{1e-5, 1e-4, 1e-3};
  fs::path train_data;
  fs::path model_out = "model.txt";
  fs::path history_out = "history.csv";
  double holdout_fraction = 0.2;
  int train_threshold = 1;
  TrainConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "Grid-search and train a linear scorer");
  train_cmd->add_option("--loss", train_loss, "Loss name, ranknet or symmetrized_ranknet")->capture_default_str();
  train_cmd->add_option("--mode", train_mode, "pointwise or pairwise (overrides the loss default)")
      ->check(CLI::IsMember({"pointwise", "pairwise"}));
  train_cmd->add_option("--gamma", train_gamma, "Label noise applied to training and holdout")->capture_default_str();
  train_cmd->add_option("--lr-grid", lr_grid)->delimiter(',')->capture_default_str();
  train_cmd->add_option("--wd-grid", wd_grid)->delimiter(',')->capture_default_str();
  train_cmd->add_option("--data", train_data)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-model", model_out)->capture_default_str();
  train_cmd->add_option("--out-history", history_out)->capture_default_str();
  train_cmd->add_option("--holdout-fraction", holdout_fraction)->capture_default_str();
  train_cmd->add_option("--max-epochs", train_cfg.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", train_cfg.patience)->capture_default_str();
  train_cmd->add_option("--batch-queries", train_cfg.batch_queries, "0 = full batch")->capture_default_str();
  train_cmd->add_option("--binarize-threshold", train_threshold)->capture_default_str();

  // evaluate
  fs::path eval_model;
  fs::path eval_data;
  std::vector<std::string> eval_metrics{"ndcg@10", "map", "auc"};
  fs::path eval_out;
  int eval_threshold = 1;
  auto* eval = app.add_subcommand("evaluate", "Score a LETOR file with a saved model");
  eval->add_option("--model", eval_model)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data)->required()->check(CLI::ExistingFile);
  eval->add_option("--metrics", eval_metrics)->delimiter(',')->capture_default_str();
  eval->add_option("--out", eval_out, "CSV file (default: stdout)");
  eval->add_option("--binarize-threshold", eval_threshold)->capture_default_str();

  // simulate-order-preservation
  OrderPreservationSpec sim;
  std::vector<std::string> sim_targets;
  fs::path sim_out;
  auto* simulate = app.add_subcommand("simulate-order-preservation",
                                      "Noisy-vs-clean risk regression over a scorer family");
  simulate->add_option("--loss", sim_targets, "Loss or metric names (default: auc,ndcg@10,map,logistic,exponential)")
      ->delimiter(',');
  simulate->add_option("--gamma", sim.gamma)->capture_default_str();
  simulate->add_option("--scorers", sim.scorers)->capture_default_str();
  simulate->add_option("--draws", sim.draws)->capture_default_str();
  simulate->add_option("--queries", sim.queries_per_draw, "Queries per draw")->capture_default_str();
  simulate->add_option("--pool-queries", sim.pool_queries)->capture_default_str();
  simulate->add_option("--out", sim_out, "Points CSV (single target only)");

  // erm-sweep
  SweepSpec sweep;
  std::string sweep_normalize = "none";
  auto* sweep_cmd = app.add_subcommand("erm-sweep", "Train every loss at every noise level");
  sweep_cmd->add_option("--gammas", sweep.gammas)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--losses", sweep.losses)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--metrics", sweep.metrics)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--lr-grid", sweep.lr_grid)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--wd-grid", sweep.wd_grid)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--data", sweep.source.letor_path, "LETOR file (default: synthetic)")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--normalize", sweep_normalize)
      ->check(CLI::IsMember({"none", "minmax", "standardize"}))
      ->capture_default_str();
  sweep_cmd->add_option("--max-epochs", sweep.train.max_epochs)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(g.out_dir);

    if (*gen) {
      synth.seed = g.seed;
      synth.theta_sharing = kThetaNames.at(theta_name);
      synth.label_mode = kLabelNames.at(label_name);
      const Dataset ds = generate_synthetic(synth);
      write_letor(ds, g.resolve(synth_out));
      std::cerr << fmt::format("wrote {} queries, {} documents\n", ds.queries.size(), ds.num_documents());
    } else if (*inject) {
      const NoiseSpec noise(noise_gamma, g.seed);
      const auto corrupted = corrupt_dataset(load_binary(noise_in, noise_threshold), noise);
      write_letor(corrupted.noisy, g.resolve(noise_out));
      std::cerr << fmt::format("flipped {} of {} labels\n", corrupted.flipped,
                               corrupted.noisy.num_documents());
    } else if (*train_cmd) {
      NamedLoss loss = parse_named_loss(train_loss);
      if (!train_mode.empty()) loss.config.mode = parse_mode(train_mode);
      train_cfg.loss = loss.config;
      train_cfg.seed = derive_seed(g.seed, "train");
      const NoiseSpec noise(train_gamma, derive_seed(g.seed, "noise"));
      const Dataset ds = load_binary(train_data, train_threshold);
      const Split parts = split(ds, 1.0 - holdout_fraction, derive_seed(g.seed, "holdout-split"));
      const Dataset noisy_train = corrupt_dataset(parts.train, noise).noisy;
      const Dataset noisy_holdout = corrupt_dataset(parts.holdout, noise).noisy;
      const GridResult grid =
          grid_search(noisy_train, noisy_holdout, train_cfg, lr_grid, wd_grid, g.threads);
      save_model(grid.best.model, g.resolve(model_out));
      write_history(g.resolve(history_out), grid.best.history);
      std::cout << fmt::format("lr={} wd={} best_epoch={} holdout_loss={}\n", grid.learning_rate,
                               grid.weight_decay, grid.best.best_epoch,
                               format_real(grid.best.best_holdout_loss));
    } else if (*eval) {
      const LinearScorer model = load_model(eval_model);
      const Dataset ds = load_binary(eval_data, eval_threshold);
      std::vector<MetricSpec> metrics;
      for (const auto& name : eval_metrics) metrics.push_back(parse_metric(name));
      std::vector<std::vector<double>> scores;
      std::vector<std::vector<int>> labels;
      for (const auto& q : ds.queries) {
        scores.push_back(model.score_query(q));
        labels.push_back(q.labels());
      }
      std::vector<RankedQuery> ranked;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        ranked.push_back({scores[i], labels[i], ds.queries[i].query_id});
      }
      std::vector<std::vector<std::string>> rows;
      for (const auto& m : metrics) {
        const MetricValue v = mean_metric(ranked, m);
        rows.push_back({m.name(), format_real(v.value), std::to_string(v.queries_used),
                        std::to_string(v.queries_skipped)});
      }
      const std::vector<std::string> header{"metric", "value", "queries_used", "queries_skipped"};
      if (eval_out.empty()) {
        std::cout << fmt::format("{}\n", fmt::join(header, ","));
        for (const auto& r : rows) std::cout << fmt::format("{}\n", fmt::join(r, ","));
      } else {
        CsvWriter csv(g.resolve(eval_out));
        csv.row(header);
        for (const auto& r : rows) csv.row(r);
      }
    } else if (*simulate) {
      if (!sim_targets.empty()) sim.targets = sim_targets;
      if (!sim_out.empty() && sim.targets.size() != 1) {
        throw InputError("--out needs exactly one --loss target");
      }
      sim.seed = g.seed;
      sim.threads = g.threads;
      sim.plot_data = g.plot_data;
      const auto summaries = run_order_preservation_experiment(sim, g.out_dir);
      if (!sim_out.empty()) fs::rename(summaries.front().points_file, g.resolve(sim_out));
      for (const auto& s : summaries) {
        std::cout << fmt::format("{:<22} slope={:.4f} intercept={:.4f} r2={:.4f} rho={:.4f}\n",
                                 s.target, s.report.slope, s.report.intercept, s.report.r_squared,
                                 s.report.spearman_rho);
      }
    } else if (*sweep_cmd) {
      sweep.source.normalize = kNormalizeNames.at(sweep_normalize);
      sweep.threads = g.threads;
      sweep.plot_data = g.plot_data;
      if (g.seed != 0 && sweep_cmd->count("--seeds") == 0) {
        for (auto& s : sweep.seeds) s = derive_seed(g.seed, s);
      }
      const SweepResult result = run_erm_sweep(sweep, g.out_dir);
      for (const auto& metric : sweep.metrics) {
        for (const auto& loss : sweep.losses) {
          std::string line = fmt::format("{:<10} {:<22}", metric, loss);
          for (double gamma : sweep.gammas) {
            const auto med = result.median(gamma, parse_named_loss(loss).name, parse_metric(metric).name());
            line += med ? fmt::format(" {:>8.4f}", *med) : fmt::format(" {:>8}", "-");
          }
          std::cout << line << '\n';
        }
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
