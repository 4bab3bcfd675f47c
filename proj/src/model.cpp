#include "irt/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irt/error.hpp"
#include "irt/parallel.hpp"
#include "irt/summation.hpp"

namespace irt {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "1pl" || name == "1PL") return ModelKind::OnePL;
  if (name == "2pl" || name == "2PL") return ModelKind::TwoPL;
  if (name == "3pl" || name == "3PL") return ModelKind::ThreePL;
  fail(ErrorCode::Config, "unknown model '" + std::string(name) + "' (expected 1pl, 2pl or 3pl)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::OnePL: return "1pl";
    case ModelKind::TwoPL: return "2pl";
    case ModelKind::ThreePL: return "3pl";
  }
  return "?";
}

// ResponseMatrix ------------------------------------------------------------

ResponseMatrix::ResponseMatrix(std::size_t items, std::size_t examinees,
                               std::vector<std::int8_t> entries)
    : m_(items), n_(examinees), y_(std::move(entries)) {
  require(m_ >= 1 && n_ >= 1, ErrorCode::InvalidArgument, "response matrix needs m >= 1 and n >= 1");
  require(y_.size() == m_ * n_, ErrorCode::DimensionMismatch, "response entries do not match m x n");
  for (auto v : y_)
    require(v == 1 || v == -1, ErrorCode::InvalidArgument, "response entries must be -1 or +1");
}

ResponseMatrix ResponseMatrix::filled(std::size_t items, std::size_t examinees, std::int8_t value) {
  return ResponseMatrix(items, examinees, std::vector<std::int8_t>(items * examinees, value));
}

void ResponseMatrix::set_item_row(std::size_t item, std::span<const std::int8_t> labels) {
  require(item < m_, ErrorCode::InvalidArgument, "item index out of range");
  require(labels.size() == n_, ErrorCode::DimensionMismatch, "label row length differs from n");
  for (std::size_t j = 0; j < n_; ++j) {
    require(labels[j] == 1 || labels[j] == -1, ErrorCode::InvalidArgument,
            "response entries must be -1 or +1");
    y_[item * n_ + j] = labels[j];
  }
}

std::vector<std::uint64_t> ResponseMatrix::pack_bits() const {
  std::vector<std::uint64_t> words((y_.size() + 63) / 64, 0);
  for (std::size_t k = 0; k < y_.size(); ++k)
    if (y_[k] > 0) words[k / 64] |= std::uint64_t{1} << (k % 64);
  return words;
}

ResponseMatrix ResponseMatrix::unpack_bits(std::size_t items, std::size_t examinees,
                                           std::span<const std::uint64_t> words) {
  const std::size_t total = items * examinees;
  require(words.size() == (total + 63) / 64, ErrorCode::DimensionMismatch,
          "packed word count does not match m x n");
  std::vector<std::int8_t> y(total);
  for (std::size_t k = 0; k < total; ++k)
    y[k] = (words[k / 64] >> (k % 64)) & 1u ? 1 : -1;
  return ResponseMatrix(items, examinees, std::move(y));
}

// SignedDesign ----------------------------------------------------------------

void SignedDesign::clear() noexcept {
  x0.clear();
  x1.clear();
  weight.clear();
  kind.clear();
  c.clear();
}

void SignedDesign::reserve(std::size_t rows) {
  x0.reserve(rows);
  x1.reserve(rows);
  weight.reserve(rows);
  kind.reserve(rows);
  c.reserve(rows);
}

void SignedDesign::push(Vec2 x, double w, LossKind k, double guess) {
  x0.push_back(x[0]);
  x1.push_back(x[1]);
  weight.push_back(w);
  kind.push_back(k);
  c.push_back(guess);
}

void SignedDesign::validate() const {
  const std::size_t n = x0.size();
  require(x1.size() == n && weight.size() == n && kind.size() == n && c.size() == n,
          ErrorCode::InvalidArgument, "design arrays differ in length");
  bool any_positive = false;
  for (std::size_t r = 0; r < n; ++r) {
    require(weight[r] >= 0.0 && std::isfinite(weight[r]), ErrorCode::InvalidArgument,
            "design weights must be finite and non-negative");
    require(c[r] >= 0.0 && c[r] < 0.5, ErrorCode::InvalidArgument, "design c must lie in [0, 0.5)");
    require(std::isfinite(x0[r]) && std::isfinite(x1[r]), ErrorCode::InvalidArgument,
            "design rows must be finite");
    any_positive = any_positive || weight[r] > 0.0;
  }
  require(any_positive, ErrorCode::InvalidArgument, "design needs at least one positive weight");
}

// Scalar model ----------------------------------------------------------------

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double icc_probability(double a, double b, double c, double theta) {
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(theta),
          ErrorCode::InvalidArgument, "icc_probability: non-finite input");
  require(a > 0.0, ErrorCode::InvalidArgument, "icc_probability: a must be positive");
  require(c >= 0.0 && c < 0.5, ErrorCode::InvalidArgument, "icc_probability: c must lie in [0, 0.5)");
  return c + (1.0 - c) * sigmoid(a * theta - b);
}

namespace {

// All row losses share e = exp(-|z|), so one exp per row suffices.
struct RowExp {
  double e;
  double log1p_e;
  double sig_pos;  // sigmoid(z)
  double sig_neg;  // sigmoid(-z)

  explicit RowExp(double z) noexcept : e(std::exp(-std::abs(z))), log1p_e(std::log1p(e)) {
    const double inv = 1.0 / (1.0 + e);
    sig_pos = z >= 0 ? inv : e * inv;
    sig_neg = z >= 0 ? e * inv : inv;
  }
};

// h(z) = ln(1+e^z) - ln(1 + c e^z), rewritten per sign of z to avoid overflow.
inline double pass_loss(double c, double z, const RowExp& r) noexcept {
  if (c == 0.0) return std::max(z, 0.0) + r.log1p_e;
  if (z > 0.0) return r.log1p_e - std::log(c + r.e);
  return r.log1p_e - std::log1p(c * r.e);
}

inline double pass_loss(double c, double z) noexcept { return pass_loss(c, z, RowExp(z)); }

inline double row_loss(LossKind kind, double c, double z) noexcept {
  const RowExp r(z);
  return kind == LossKind::Fail ? std::max(z, 0.0) + r.log1p_e - std::log1p(-c)
                                : pass_loss(c, z, r);
}

}  // namespace

double pointwise_loss(LossKind kind, double c, double z) {
  require(c >= 0.0 && c < 0.5, ErrorCode::InvalidArgument, "pointwise_loss: c must lie in [0, 0.5)");
  require(std::isfinite(z), ErrorCode::InvalidArgument, "pointwise_loss: z must be finite");
  return row_loss(kind, c, z);
}

double loss_value(LossKind kind, double c, double z) noexcept { return row_loss(kind, c, z); }

LossDerivatives loss_derivatives(LossKind kind, double c, double z) noexcept {
  LossDerivatives d;
  const RowExp r(z);
  const double sz = r.sig_pos;
  const double smz = r.sig_neg;
  const double v = sz * smz;
  if (kind == LossKind::Fail) {
    const double inv = 1.0 / (1.0 - c);
    d.value = std::max(z, 0.0) + r.log1p_e - std::log1p(-c);
    d.dz = sz;
    d.dzz = v;
    d.dc = inv;
    d.dcc = inv * inv;
    return d;
  }
  // p = c + (1-c) s with s = sigmoid(-z): probability of the observed pass.
  const double p = c + (1.0 - c) * smz;
  const double one_c = 1.0 - c;
  const double dz = one_c * v / p;
  d.value = pass_loss(c, z, r);
  d.dz = dz;
  d.dzz = -one_c * v * (1.0 - 2.0 * smz) / p + dz * dz;
  d.dc = -sz / p;
  d.dzc = -v / p - one_c * v * sz / (p * p);
  d.dcc = (sz / p) * (sz / p);
  return d;
}

double conditional_nll(const SignedDesign& design, Vec2 eta, std::optional<double> shared_c) {
  PairwiseSum<double> acc;
  const std::size_t n = design.size();
  for (std::size_t r = 0; r < n; ++r) {
    const double w = design.weight[r];
    if (w == 0.0) continue;
    const double z = design.x0[r] * eta[0] + design.x1[r] * eta[1];
    const double c = shared_c ? *shared_c : design.c[r];
    acc.add(w * row_loss(design.kind[r], c, z));
  }
  return acc.total();
}

double full_nll(const ResponseMatrix& y, const ItemParameters& items,
                const AbilityParameters& abilities) {
  const std::size_t m = y.items();
  const std::size_t n = y.examinees();
  require(items.size() == m && items.b.size() == m && items.c.size() == m,
          ErrorCode::DimensionMismatch, "full_nll: item parameter count differs from m");
  require(abilities.size() == n, ErrorCode::DimensionMismatch,
          "full_nll: ability count differs from n");
  std::vector<double> per_item(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    const auto row = y.item_row(i);
    const double a = items.a[i], b = items.b[i], c = items.c[i];
    PairwiseSum<double> acc;
    for (std::size_t j = 0; j < n; ++j) {
      const double logit = a * abilities.theta[j] - b;
      const double z = row[j] > 0 ? -logit : logit;
      acc.add(row_loss(row[j] > 0 ? LossKind::Pass : LossKind::Fail, c, z));
    }
    per_item[i] = acc.total();
  });
  return pairwise_sum(per_item);
}

void fill_item_design(SignedDesign& out, const ResponseMatrix& y, std::span<const double> theta,
                      double c_item, std::size_t item, std::optional<RowSelection> selection) {
  require(item < y.items(), ErrorCode::InvalidArgument, "item index out of range");
  out.clear();
  const auto row = y.item_row(item);
  auto push = [&](std::size_t j, double w) {
    const double s = -static_cast<double>(row[j]);
    out.push({s * theta[j], -s}, w, row[j] > 0 ? LossKind::Pass : LossKind::Fail, c_item);
  };
  if (selection) {
    out.reserve(selection->indices.size());
    for (std::size_t r = 0; r < selection->indices.size(); ++r)
      push(selection->indices[r], selection->weights[r]);
  } else {
    out.reserve(y.examinees());
    for (std::size_t j = 0; j < y.examinees(); ++j) push(j, 1.0);
  }
}

void fill_examinee_design(SignedDesign& out, const ResponseMatrix& y, const ItemParameters& items,
                          std::size_t examinee) {
  require(examinee < y.examinees(), ErrorCode::InvalidArgument, "examinee index out of range");
  out.clear();
  out.reserve(y.items());
  for (std::size_t i = 0; i < y.items(); ++i) {
    const auto label = y(i, examinee);
    const double s = -static_cast<double>(label);
    out.push({s * items.a[i], s * items.b[i]}, 1.0, label > 0 ? LossKind::Pass : LossKind::Fail,
             items.c[i]);
  }
}

SignedDesign build_signed_design(const ResponseMatrix& y, const ItemParameters& items,
                                 const AbilityParameters& abilities, Orientation orientation,
                                 std::size_t index) {
  SignedDesign d;
  if (orientation == Orientation::ByItem) {
    require(index < y.items(), ErrorCode::InvalidArgument, "item index out of range");
    require(abilities.size() == y.examinees(), ErrorCode::DimensionMismatch,
            "ability count differs from n");
    require(items.c.size() == y.items(), ErrorCode::DimensionMismatch, "item count differs from m");
    fill_item_design(d, y, abilities.theta, items.c[index], index);
  } else {
    require(index < y.examinees(), ErrorCode::InvalidArgument, "examinee index out of range");
    require(items.size() == y.items(), ErrorCode::DimensionMismatch, "item count differs from m");
    fill_examinee_design(d, y, items, index);
  }
  return d;
}

std::vector<Vec2> design_rows(const SignedDesign& design) {
  std::vector<Vec2> rows(design.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = {design.x0[r], design.x1[r]};
  return rows;
}

}  // namespace irt
