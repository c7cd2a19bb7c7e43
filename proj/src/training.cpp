#include "noisyrank/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "noisyrank/error.hpp"
#include "noisyrank/parallel.hpp"
#include "noisyrank/random.hpp"

namespace noisyrank {

// ---------------------------------------------------------------------------
// LinearScorer

double LinearScorer::score(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw InputError(fmt::format("scorer has dimension {} but features have {}", weights.size(),
                                 x.size()));
  }
  return std::inner_product(weights.begin(), weights.end(), x.begin(), bias);
}

std::vector<double> LinearScorer::score_query(const QueryGroup& q) const {
  std::vector<double> out;
  out.reserve(q.size());
  for (const auto& doc : q.documents) out.push_back(score(doc.features));
  return out;
}

std::vector<double> LinearScorer::parameters() const {
  std::vector<double> p = weights;
  p.push_back(bias);
  return p;
}

void LinearScorer::set_parameters(std::span<const double> params) {
  if (params.size() != weights.size() + 1) throw InputError("parameter vector has the wrong size");
  std::copy(params.begin(), params.end() - 1, weights.begin());
  bias = params.back();
}

void save_model(const LinearScorer& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  for (double w : model.weights) out << fmt::format("{}\n", w);
  out << fmt::format("{}\n", model.bias);
}

LinearScorer load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw ParseError(line_no, "model value '" + line + "' is not a number");
    }
  }
  if (values.empty()) throw InputError("model file " + path.string() + " is empty");
  LinearScorer model;
  model.bias = values.back();
  values.pop_back();
  model.weights = std::move(values);
  return model;
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient) {
  if (params.size() != gradient.size()) throw InputError("gradient and parameters differ in size");
  for (double g : gradient) {
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient component");
  }
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size()) throw InputError("optimizer state has the wrong size");

  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double decay = 1.0 - state.learning_rate * state.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] *= decay;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Empirical risk and gradient

namespace {

struct Accumulated {
  std::vector<double> grad;
  double risk = 0.0;
  std::size_t terms = 0;
};

// Without `with_grad` only the risk is accumulated.
Accumulated accumulate(const LinearScorer& model, std::span<const QueryGroup> batch,
                       const LossConfig& cfg, bool with_grad) {
  const MarginLoss loss(cfg.kind);
  const std::size_t d = model.weights.size();
  Accumulated acc;
  if (with_grad) acc.grad.assign(d + 1, 0.0);

  if (cfg.mode == Mode::Pointwise) {
    for (const auto& q : batch) {
      for (const auto& doc : q.documents) {
        const double sign = doc.label == 1 ? 1.0 : -1.0;
        const double alpha = sign * model.score(doc.features);
        acc.risk += loss.value(alpha);
        if (with_grad) {
          const double coef = loss.derivative(alpha) * sign;
          for (std::size_t f = 0; f < d; ++f) acc.grad[f] += coef * doc.features[f];
          acc.grad[d] += coef;
        }
        ++acc.terms;
      }
    }
    if (acc.terms > 0) {
      const double inv = 1.0 / static_cast<double>(acc.terms);
      acc.risk *= inv;
      for (auto& g : acc.grad) g *= inv;
    }
    return acc;
  }

  std::vector<double> query_grad(with_grad ? d : 0);
  for (const auto& q : batch) {
    const auto scores = model.score_query(q);
    double query_risk = 0.0;
    std::size_t pairs = 0;
    std::fill(query_grad.begin(), query_grad.end(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q.documents[i].label != 1) continue;
      for (std::size_t j = 0; j < q.size(); ++j) {
        if (q.documents[j].label != 0) continue;
        const double alpha = scores[i] - scores[j];
        query_risk += loss.value(alpha);
        if (with_grad) {
          const double coef = loss.derivative(alpha);
          const auto& xi = q.documents[i].features;
          const auto& xj = q.documents[j].features;
          for (std::size_t f = 0; f < d; ++f) query_grad[f] += coef * (xi[f] - xj[f]);
        }
        ++pairs;
      }
    }
    if (pairs == 0) continue;
    const double inv = 1.0 / static_cast<double>(pairs);
    acc.risk += query_risk * inv;
    if (with_grad) {
      for (std::size_t f = 0; f < d; ++f) acc.grad[f] += query_grad[f] * inv;
    }
    ++acc.terms;
  }
  if (acc.terms > 0) {
    const double inv = 1.0 / static_cast<double>(acc.terms);
    acc.risk *= inv;
    for (auto& g : acc.grad) g *= inv;
  }
  return acc;
}

}  // namespace

Gradient empirical_gradient(const LinearScorer& model, std::span<const QueryGroup> batch,
                            const LossConfig& loss) {
  auto acc = accumulate(model, batch, loss, true);
  return {std::move(acc.grad), acc.risk, acc.terms};
}

double batch_risk(const LinearScorer& model, std::span<const QueryGroup> batch,
                  const LossConfig& loss) {
  const auto acc = accumulate(model, batch, loss, false);
  if (acc.terms == 0) {
    throw InputError(loss.mode == Mode::Pairwise ? "no mixed-label pair to evaluate"
                                                 : "no document to evaluate");
  }
  return acc.risk;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const Dataset& train_set, const Dataset& holdout, const TrainConfig& config,
                  const AdamState& optimizer) {
  if (train_set.queries.empty() || holdout.queries.empty()) {
    throw InputError("training and holdout sets must be nonempty");
  }
  if (train_set.feature_dim != holdout.feature_dim) {
    throw InputError("training and holdout feature dimensions differ");
  }
  if (config.patience == 0) throw InputError("patience must be at least 1");
  if (config.loss.kind == LossKind::ZeroOne) {
    throw InputError("cannot train with the zero_one loss");
  }

  TrainResult result;
  result.model = LinearScorer::zeros(train_set.feature_dim);
  if (config.max_epochs == 0) {
    result.best_holdout_loss = batch_risk(result.model, holdout.queries, config.loss);
    return result;
  }

  AdamState state = optimizer;
  state.step_count = 0;
  state.first_moment.clear();
  state.second_moment.clear();

  LinearScorer model = result.model;
  std::vector<double> params = model.parameters();
  double best = batch_risk(model, holdout.queries, config.loss);
  result.best_holdout_loss = best;
  double reference = best;
  std::size_t stale = 0;

  const std::size_t nq = train_set.queries.size();
  const std::size_t batch_size =
      config.batch_queries == 0 ? nq : std::min(config.batch_queries, nq);
  std::vector<QueryGroup> shuffled;
  std::vector<std::size_t> order(nq);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t batches_seen = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::span<const QueryGroup> epoch_queries = train_set.queries;
    if (batch_size < nq) {
      Rng rng(derive_seed(config.seed, epoch));
      rng.shuffle(std::span<std::size_t>(order));
      shuffled.clear();
      for (std::size_t i : order) shuffled.push_back(train_set.queries[i]);
      epoch_queries = shuffled;
    }
    for (std::size_t start = 0; start < nq; start += batch_size) {
      const auto batch = epoch_queries.subspan(start, std::min(batch_size, nq - start));
      const Gradient g = empirical_gradient(model, batch, config.loss);
      ++batches_seen;
      if (g.terms == 0) {
        ++result.skipped_batches;
        continue;
      }
      try {
        adam_step(state, params, g.values);
      } catch (const TrainingError& e) {
        throw TrainingError(fmt::format("epoch {}: {}", epoch, e.what()), result.history);
      }
      model.set_parameters(params);
    }
    if (result.skipped_batches == batches_seen) {
      throw TrainingError("every batch lacked a mixed-label pair", result.history);
    }

    const double train_loss = batch_risk(model, train_set.queries, config.loss);
    const double holdout_loss = batch_risk(model, holdout.queries, config.loss);
    result.history.push_back({epoch, train_loss, holdout_loss});
    if (!std::isfinite(train_loss) || !std::isfinite(holdout_loss)) {
      throw TrainingError(fmt::format("loss diverged at epoch {}", epoch), result.history);
    }

    if (holdout_loss < best) {
      best = holdout_loss;
      result.best_epoch = epoch;
      result.best_holdout_loss = holdout_loss;
      result.model = model;
    }
    if (holdout_loss < reference - config.min_delta) {
      reference = holdout_loss;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Grid search

GridResult grid_search(const Dataset& train_set, const Dataset& holdout, const TrainConfig& config,
                       std::vector<double> lr_grid, std::vector<double> wd_grid,
                       std::size_t threads) {
  if (lr_grid.empty() || wd_grid.empty()) throw InputError("grid search needs nonempty grids");
  for (auto* grid : {&lr_grid, &wd_grid}) {
    std::sort(grid->begin(), grid->end());
    grid->erase(std::unique(grid->begin(), grid->end()), grid->end());
  }

  struct Cell {
    double lr;
    double wd;
    std::optional<TrainResult> result;
    std::string message;
  };
  std::vector<Cell> cells;
  for (double lr : lr_grid)
    for (double wd : wd_grid) cells.push_back({lr, wd, std::nullopt, {}});

  parallel_for(cells.size(), threads, [&](std::size_t i) {
    auto& cell = cells[i];
    AdamState opt;
    opt.learning_rate = cell.lr;
    opt.weight_decay = cell.wd;
    TrainConfig cfg = config;
    cfg.seed = derive_seed(config.seed, i);
    try {
      cell.result = train(train_set, holdout, cfg, opt);
    } catch (const TrainingError& e) {
      cell.message = e.what();
    }
  });

  GridResult out{};
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const bool ok = c.result.has_value();
    const double loss = ok ? c.result->best_holdout_loss : std::numeric_limits<double>::quiet_NaN();
    out.cells.push_back({c.lr, c.wd, ok, loss, c.message});
    // Cells are ordered by (lr, wd) ascending, so a strict comparison keeps
    // the smaller lr, then the smaller wd, on ties.
    if (ok && (!best || loss < cells[*best].result->best_holdout_loss)) best = i;
  }
  if (!best) {
    std::string detail = "every grid cell failed:";
    for (const auto& c : out.cells) {
      detail += fmt::format(" [lr={} wd={}: {}]", c.learning_rate, c.weight_decay, c.message);
    }
    throw TrainingError(detail);
  }
  out.best = std::move(*cells[*best].result);
  out.learning_rate = cells[*best].lr;
  out.weight_decay = cells[*best].wd;
  return out;
}

}  // namespace noisyrank
