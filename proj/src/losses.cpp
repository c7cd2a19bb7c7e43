#include "noisyrank/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "noisyrank/error.hpp"

namespace noisyrank {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Beyond this the softplus is linear to double precision.
constexpr double kSoftplusLinear = 30.0;

double softplus_neg(double alpha) {
  // log(1 + exp(-alpha))
  if (alpha < -kSoftplusLinear) return -alpha + std::log1p(std::exp(alpha));
  return std::log1p(std::exp(-alpha));
}

void require_finite(double alpha) {
  if (!std::isfinite(alpha)) throw InputError("loss evaluated at a non-finite margin");
}

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string_view MarginLoss::name() const noexcept { return to_string(kind_); }

bool MarginLoss::differentiable() const noexcept {
  return kind_ != LossKind::ZeroOne && kind_ != LossKind::AbsoluteError;
}

std::optional<double> MarginLoss::symmetry_constant() const noexcept {
  switch (kind_) {
    case LossKind::ZeroOne:
    case LossKind::SymmetrizedLogistic:
    case LossKind::AbsoluteError:
      return 1.0;
    case LossKind::Hinge:
      return 2.0;
    case LossKind::Logistic:
    case LossKind::Exponential:
      return std::nullopt;
  }
  return std::nullopt;
}

MarginDomain MarginLoss::symmetry_domain() const noexcept {
  switch (kind_) {
    case LossKind::Hinge:
    case LossKind::AbsoluteError:
      return {-1.0, 1.0};
    default:
      return {-kInf, kInf};
  }
}

double MarginLoss::value(double alpha) const {
  require_finite(alpha);
  switch (kind_) {
    case LossKind::ZeroOne:
      return alpha < 0 ? 1.0 : 0.0;
    case LossKind::Hinge:
      return std::max(0.0, 1.0 - alpha);
    case LossKind::AbsoluteError:
      return 0.5 * std::abs(1.0 - alpha);
    case LossKind::Logistic:
      return softplus_neg(alpha);
    case LossKind::Exponential:
      return std::exp(-alpha);
    case LossKind::SymmetrizedLogistic:
      return sigmoid(-alpha);
  }
  return 0.0;
}

double MarginLoss::derivative(double alpha) const {
  require_finite(alpha);
  switch (kind_) {
    case LossKind::ZeroOne:
      throw UnsupportedOperation("the zero_one loss has no derivative");
    case LossKind::Hinge:
      return alpha < 1.0 ? -1.0 : 0.0;
    case LossKind::AbsoluteError:
      if (alpha == 1.0) return 0.0;
      return alpha < 1.0 ? -0.5 : 0.5;
    case LossKind::Logistic:
      return -sigmoid(-alpha);
    case LossKind::Exponential:
      return -std::exp(-alpha);
    case LossKind::SymmetrizedLogistic:
      return -sigmoid(alpha) * sigmoid(-alpha);
  }
  return 0.0;
}

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::ZeroOne: return "zero_one";
    case LossKind::Hinge: return "hinge";
    case LossKind::AbsoluteError: return "l1";
    case LossKind::Logistic: return "logistic";
    case LossKind::Exponential: return "exponential";
    case LossKind::SymmetrizedLogistic: return "symmetrized_logistic";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto kind : {LossKind::ZeroOne, LossKind::Hinge, LossKind::AbsoluteError,
                    LossKind::Logistic, LossKind::Exponential, LossKind::SymmetrizedLogistic}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) noexcept {
  return mode == Mode::Pointwise ? "pointwise" : "pairwise";
}

Mode parse_mode(std::string_view name) {
  if (name == "pointwise") return Mode::Pointwise;
  if (name == "pairwise") return Mode::Pairwise;
  throw InputError("unknown mode '" + std::string(name) + "' (expected pointwise|pairwise)");
}

SymmetryCheck check_label_symmetry(const MarginLoss& loss, std::span<const double> probes,
                                   double tol) {
  if (probes.empty()) throw InputError("symmetry check needs at least one probe point");
  const MarginDomain domain = loss.symmetry_domain();
  std::vector<double> sums;
  for (double a : probes) {
    if (a == 0.0) throw InputError("symmetry probes must be nonzero");
    if (!domain.contains(a) || !domain.contains(-a)) continue;
    sums.push_back(loss.value(a) + loss.value(-a));
  }
  if (sums.empty()) throw InputError("no probe point lies inside the loss's symmetry domain");

  double max_dev = 0.0;
  double total = 0.0;
  for (double s : sums) {
    max_dev = std::max(max_dev, std::abs(s - sums.front()));
    total += s;
  }
  SymmetryCheck result{max_dev <= tol, std::nullopt, max_dev, sums.size()};
  if (result.symmetric) result.constant = total / static_cast<double>(sums.size());
  return result;
}

std::optional<double> pairwise_margin(double score_i, double score_j, int y_i, int y_j) {
  if (!std::isfinite(score_i) || !std::isfinite(score_j)) {
    throw InputError("pairwise margin of a non-finite score");
  }
  if ((y_i != 0 && y_i != 1) || (y_j != 0 && y_j != 1)) {
    throw InputError("pairwise margin needs binary labels");
  }
  if (y_i == y_j) return std::nullopt;
  // 2 y_ij - 1 = y_i - y_j for binary labels.
  return (score_i - score_j) * static_cast<double>(y_i - y_j);
}

QueryLoss pointwise_query_loss(const MarginLoss& loss, std::span<const double> scores,
                               std::span<const int> labels) {
  QueryLoss out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.sum += loss.value(pointwise_margin(scores[i], labels[i]));
  }
  out.terms = scores.size();
  return out;
}

QueryLoss pairwise_query_loss(const MarginLoss& loss, std::span<const double> scores,
                              std::span<const int> labels) {
  QueryLoss out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      out.sum += loss.value(scores[i] - scores[j]);
      ++out.terms;
    }
  }
  return out;
}

}  // namespace noisyrank
