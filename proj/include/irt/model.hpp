#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace irt {

enum class ModelKind { OnePL, TwoPL, ThreePL };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

/// Loss attached to a design row: Fail uses g (label -1), Pass uses h (label +1).
enum class LossKind : std::uint8_t { Fail, Pass };

enum class Orientation { ByItem, ByExaminee };

using Vec2 = std::array<double, 2>;

/// m x n label matrix with entries in {-1, +1}, stored row-major by item.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(std::size_t items, std::size_t examinees, std::vector<std::int8_t> entries);

  static ResponseMatrix filled(std::size_t items, std::size_t examinees, std::int8_t value);

  std::size_t items() const noexcept { return m_; }
  std::size_t examinees() const noexcept { return n_; }

  std::int8_t operator()(std::size_t item, std::size_t examinee) const noexcept {
    return y_[item * n_ + examinee];
  }
  std::span<const std::int8_t> item_row(std::size_t item) const noexcept {
    return {y_.data() + item * n_, n_};
  }
  std::span<const std::int8_t> entries() const noexcept { return y_; }

  /// Replaces one item's labels (used to inject degenerate items).
  void set_item_row(std::size_t item, std::span<const std::int8_t> labels);

  /// 1 bit per entry, bit set for +1, little-endian within each word.
  std::vector<std::uint64_t> pack_bits() const;
  static ResponseMatrix unpack_bits(std::size_t items, std::size_t examinees,
                                    std::span<const std::uint64_t> words);

  friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<std::int8_t> y_;
};

struct ItemParameters {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  ItemParameters() = default;
  explicit ItemParameters(std::size_t m, double a0 = 1.0, double b0 = 0.0, double c0 = 0.0)
      : a(m, a0), b(m, b0), c(m, c0) {}

  std::size_t size() const noexcept { return a.size(); }
  Vec2 alpha(std::size_t i) const noexcept { return {a[i], b[i]}; }
};

struct AbilityParameters {
  std::vector<double> theta;

  AbilityParameters() = default;
  explicit AbilityParameters(std::size_t n, double t0 = 0.0) : theta(n, t0) {}
  explicit AbilityParameters(std::vector<double> t) : theta(std::move(t)) {}

  std::size_t size() const noexcept { return theta.size(); }
  Vec2 beta(std::size_t j) const noexcept { return {theta[j], -1.0}; }
};

/// Rows x = -Y * (fixed vector) with per-row weight, loss kind and guessing
/// value. Stored as parallel arrays; every conditional solve consumes one.
struct SignedDesign {
  std::vector<double> x0;
  std::vector<double> x1;
  std::vector<double> weight;
  std::vector<LossKind> kind;
  std::vector<double> c;

  std::size_t size() const noexcept { return x0.size(); }
  void clear() noexcept;
  void reserve(std::size_t rows);
  void push(Vec2 x, double w, LossKind k, double guess);

  /// Throws InvalidArgument when the arrays disagree in length, a weight is
  /// negative, no weight is positive, or a guessing value leaves [0, 0.5).
  void validate() const;
};

/// Optional restriction of an item design to selected examinees with weights.
struct RowSelection {
  std::span<const std::size_t> indices;
  std::span<const double> weights;
};

/// c + (1 - c) / (1 + exp(-a*theta + b)).
double icc_probability(double a, double b, double c, double theta);

/// ln(1 + e^z), stable for all finite z.
double softplus(double z) noexcept;

/// Logistic sigmoid 1 / (1 + e^-z).
double sigmoid(double z) noexcept;

/// Fail: g(z) = ln(1+e^z) - ln(1-c).  Pass: h(z) = -ln(c + (1-c) sigmoid(-z)).
double pointwise_loss(LossKind kind, double c, double z);

struct LossDerivatives {
  double value = 0.0;
  double dz = 0.0;
  double dzz = 0.0;
  double dc = 0.0;
  double dzc = 0.0;
  double dcc = 0.0;
};

/// pointwise_loss without argument validation (hot loops).
double loss_value(LossKind kind, double c, double z) noexcept;

/// Value plus first and second partials in (z, c). No argument validation.
LossDerivatives loss_derivatives(LossKind kind, double c, double z) noexcept;

/// Weighted sum of pointwise losses at x . eta. When shared_c is set it
/// replaces every row's own c (3PL item step with free guessing).
double conditional_nll(const SignedDesign& design, Vec2 eta,
                       std::optional<double> shared_c = std::nullopt);

double full_nll(const ResponseMatrix& y, const ItemParameters& items,
                const AbilityParameters& abilities);

/// ByItem i: rows -Y_ij (theta_j, -1) with c_i. ByExaminee j: rows -Y_ij (a_i, b_i)
/// with each item's c.
SignedDesign build_signed_design(const ResponseMatrix& y, const ItemParameters& items,
                                 const AbilityParameters& abilities, Orientation orientation,
                                 std::size_t index);

/// Buffer-reusing variants used by the alternating loop.
void fill_item_design(SignedDesign& out, const ResponseMatrix& y, std::span<const double> theta,
                      double c_item, std::size_t item,
                      std::optional<RowSelection> selection = std::nullopt);
void fill_examinee_design(SignedDesign& out, const ResponseMatrix& y, const ItemParameters& items,
                          std::size_t examinee);

/// Design rows as an n x 2 list (drops weights/kinds).
std::vector<Vec2> design_rows(const SignedDesign& design);

}  // namespace irt
