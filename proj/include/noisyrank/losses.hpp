#pragma once

// Margin-based losses for pointwise and pairwise ranking risks.
//
// A loss maps a margin alpha to a nonnegative value. Pointwise margins are
// f(x)(2y - 1); pairwise margins are (f(x_i) - f(x_j))(2y_ij - 1) with
// y_ij = (y_i - y_j + 1) / 2, defined only for pairs with different labels.
//
// A loss is label-symmetric on a domain D when loss(a) + loss(-a) = c for all
// nonzero a in D. Hinge is symmetric only on [-1, 1] (constant 2) and the
// absolute error only for scores in [0, 1] (constant 1), so every loss carries
// the domain on which its declared constant is valid.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace noisyrank {

enum class LossKind { ZeroOne, Hinge, AbsoluteError, Logistic, Exponential, SymmetrizedLogistic };

enum class Mode { Pointwise, Pairwise };

struct MarginDomain {
  double lo;
  double hi;

  bool contains(double alpha) const noexcept { return lo <= alpha && alpha <= hi; }
};

class MarginLoss {
 public:
  explicit MarginLoss(LossKind kind) noexcept : kind_(kind) {}

  LossKind kind() const noexcept { return kind_; }

  /// Canonical lowercase name ("zero_one", "hinge", "l1", ...).
  std::string_view name() const noexcept;

  /// False for the 0-1 loss and the absolute error.
  bool differentiable() const noexcept;

  /// The c in loss(a) + loss(-a) = c, when the loss is label-symmetric on symmetry_domain().
  std::optional<double> symmetry_constant() const noexcept;

  MarginDomain symmetry_domain() const noexcept;

  /// Loss value. Throws InputError on a non-finite margin.
  ///
  /// - zero_one: 1 if alpha < 0 else 0
  /// - hinge: max(0, 1 - alpha)
  /// - l1: |1 - alpha| / 2, which is |y - s| for a score s in [0, 1] mapped
  ///   to the margin alpha = (2s - 1)(2y - 1)
  /// - logistic: log(1 + exp(-alpha))
  /// - exponential: exp(-alpha)
  /// - symmetrized_logistic: 1 - sigmoid(alpha)
  double value(double alpha) const;

  /// d loss / d alpha. Kinks use the subgradient 0 (hinge at 1, l1 at 1).
  /// Throws UnsupportedOperation for zero_one.
  double derivative(double alpha) const;

  friend bool operator==(const MarginLoss&, const MarginLoss&) = default;

 private:
  LossKind kind_;
};

/// Parses a canonical loss name. Throws InputError for unknown names.
LossKind parse_loss_kind(std::string_view name);

std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

/// Numerically stable logistic function.
double sigmoid(double x) noexcept;

struct SymmetryCheck {
  bool symmetric;
  std::optional<double> constant;
  double max_deviation;
  std::size_t probes_used;
};

/// Evaluates s(a) = loss(a) + loss(-a) at every probe inside the loss's
/// symmetry domain and reports whether s is constant within `tol`
/// (max |s(a) - s(a_0)| <= tol). Probes outside the domain are skipped.
/// Throws InputError when no usable probe remains or a probe is zero.
SymmetryCheck check_label_symmetry(const MarginLoss& loss, std::span<const double> probes,
                                   double tol);

/// Pairwise margin (s_i - s_j)(2 y_ij - 1); nullopt for tied labels.
std::optional<double> pairwise_margin(double score_i, double score_j, int y_i, int y_j);

/// Margin for a single document.
inline double pointwise_margin(double score, int label) noexcept {
  return label == 1 ? score : -score;
}

/// Sum of loss terms over one query and the number of terms.
struct QueryLoss {
  double sum = 0.0;
  std::size_t terms = 0;

  double mean() const noexcept { return sum / static_cast<double>(terms); }
};

/// One term per document.
QueryLoss pointwise_query_loss(const MarginLoss& loss, std::span<const double> scores,
                               std::span<const int> labels);

/// One term per unordered pair with different labels.
QueryLoss pairwise_query_loss(const MarginLoss& loss, std::span<const double> scores,
                              std::span<const int> labels);

inline QueryLoss query_loss(const MarginLoss& loss, Mode mode, std::span<const double> scores,
                            std::span<const int> labels) {
  return mode == Mode::Pointwise ? pointwise_query_loss(loss, scores, labels)
                                 : pairwise_query_loss(loss, scores, labels);
}

}  // namespace noisyrank
