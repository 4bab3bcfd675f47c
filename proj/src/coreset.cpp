#include "irt/coreset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "irt/error.hpp"
#include "irt/leverage.hpp"
#include "irt/parallel.hpp"
#include "irt/rng.hpp"

namespace irt {
namespace {

constexpr double kFailConstant = 42.5;
constexpr double kPassConstant = 3.5;

struct ItemConstants {
  double fail_scale = 0.0;  // 42.5 mu1^2
  double fail_floor = 0.0;  // 1/m'
  double pass_score = 0.0;  // rounded 3.5 E (1 + mu0) / m''
};

double fail_score(const ItemConstants& k, double basis_norm) {
  return next_power_of_two(k.fail_scale * (basis_norm + k.fail_floor));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(ErrorCode::Io, context + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

WeightedCoreset build_2pl(std::span<const double> theta, std::size_t k, const CoresetOptions& opt) {
  const std::size_t n = theta.size();
  if (opt.rounds <= 1) {
    const auto scores = scores_2pl(theta, opt.sketched, opt.seed, opt.sketch_rows);
    return sample_weighted(scores, k, opt.seed, opt.method);
  }
  // Experimental: shrink geometrically, rescoring the weighted survivors with
  // rows scaled by their current weight.
  std::vector<std::size_t> members(n);
  for (std::size_t j = 0; j < n; ++j) members[j] = j;
  std::vector<double> weight(n, 1.0);
  WeightedCoreset last;
  for (int r = opt.rounds - 1; r >= 0; --r) {
    const std::size_t target = std::min(members.size(), k << r);
    std::vector<Vec2> rows(members.size());
    for (std::size_t q = 0; q < members.size(); ++q)
      rows[q] = {weight[q] * theta[members[q]], -weight[q]};
    ScoreVector lev = opt.sketched ? leverage_l2_sketched(rows, opt.sketch_rows, opt.seed + r)
                                   : leverage_l2(rows);
    std::vector<double> scores(members.size());
    for (std::size_t q = 0; q < members.size(); ++q)
      scores[q] = std::sqrt(std::max(lev.values[q], 0.0)) + 1.0 / static_cast<double>(members.size());
    WeightedCoreset round = sample_weighted(scores, target, derive_seed(opt.seed, r), opt.method);
    std::vector<std::size_t> next_members;
    std::vector<double> next_weight;
    for (std::size_t q = 0; q < round.indices.size(); ++q) {
      next_members.push_back(members[round.indices[q]]);
      next_weight.push_back(weight[round.indices[q]] * round.u[q]);
    }
    members = std::move(next_members);
    weight = std::move(next_weight);
    last = std::move(round);
  }
  WeightedCoreset out;
  out.indices = members;
  out.u = weight;
  out.multiplicity = last.multiplicity;
  out.k = k;
  out.scores = scores_2pl(theta, opt.sketched, opt.seed, opt.sketch_rows);
  for (double s : out.scores) out.total_score += s;
  out.seed = opt.seed;
  return out;
}

}  // namespace

double next_power_of_two(double x) {
  require(x > 0 && std::isfinite(x), ErrorCode::InvalidArgument,
          "next_power_of_two needs a positive finite value");
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, mant in [0.5, 1)
  return mant == 0.5 ? x : std::ldexp(1.0, exp);
}

std::vector<Vec2> ability_rows(std::span<const double> theta) {
  std::vector<Vec2> rows(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) rows[j] = {theta[j], -1.0};
  return rows;
}

std::vector<double> scores_2pl(std::span<const double> theta, bool sketched, std::uint64_t seed,
                               std::size_t sketch_rows) {
  require(!theta.empty(), ErrorCode::InvalidArgument, "scores_2pl needs at least one row");
  const auto rows = ability_rows(theta);
  const ScoreVector lev = sketched ? leverage_l2_sketched(rows, sketch_rows, seed) : leverage_l2(rows);
  const double floor = 1.0 / static_cast<double>(theta.size());
  std::vector<double> s(theta.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::sqrt(std::max(lev.values[j], 0.0)) + floor;
  return s;
}

std::vector<double> scores_3pl(const SignedDesign& design, std::span<const double> basis_norms,
                               double mu0, double mu1, double e_term) {
  require(basis_norms.size() == design.size(), ErrorCode::DimensionMismatch,
          "scores_3pl: one basis norm per row required");
  require(mu0 >= 1.0 && mu1 >= 1.0 && std::isfinite(mu0) && std::isfinite(mu1),
          ErrorCode::InvalidArgument, "scores_3pl: mu must be finite and >= 1");
  require(e_term > 0 && std::isfinite(e_term), ErrorCode::InvalidArgument,
          "scores_3pl: E must be positive and finite");
  std::size_t fails = 0, passes = 0;
  for (LossKind kind : design.kind) ++(kind == LossKind::Fail ? fails : passes);
  if (fails == 0 || passes == 0)
    fail(ErrorCode::DegenerateLabels, "scores_3pl: both label classes must be present");
  ItemConstants k;
  k.fail_scale = kFailConstant * mu1 * mu1;
  k.fail_floor = 1.0 / static_cast<double>(fails);
  k.pass_score = next_power_of_two(kPassConstant * e_term * (1.0 + mu0) / static_cast<double>(passes));
  std::vector<double> s(design.size());
  for (std::size_t r = 0; r < s.size(); ++r)
    s[r] = design.kind[r] == LossKind::Fail ? fail_score(k, basis_norms[r]) : k.pass_score;
  return s;
}

double round_guessing_up(double c, double mu, double epsilon, double kappa) {
  require(epsilon > 0 && kappa > 0 && mu >= 1.0, ErrorCode::InvalidArgument,
          "round_guessing_up: epsilon, kappa must be positive and mu >= 1");
  const double spacing = epsilon / (6.0 * kappa * mu * mu);
  const double r = std::ceil(c / spacing - 1e-12) * spacing;
  return std::min(std::max(r, c), std::nextafter(0.5, 0.0));
}

MuEstimate item_mu(const ResponseMatrix& y, const ItemParameters& items,
                   const AbilityParameters& abilities, std::size_t item, MuPolicy policy,
                   std::size_t exact_limit) {
  require(item < y.items(), ErrorCode::InvalidArgument, "item_mu: item out of range");
  const auto row = y.item_row(item);
  std::vector<Vec2> rows(y.examinees());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double s = row[j] > 0 ? -1.0 : 1.0;
    rows[j] = {s * abilities.theta[j], -s};
  }
  const bool exact = policy == MuPolicy::Exact ||
                     (policy == MuPolicy::Auto && rows.size() <= exact_limit);
  return exact ? mu_exact_2d(rows) : mu_heuristic(rows, items.alpha(item));
}

WeightedCoreset build_coreset(const ResponseMatrix& y, const ItemParameters& items,
                              const AbilityParameters& abilities, ModelKind model, std::size_t k,
                              const CoresetOptions& opt) {
  const std::size_t m = y.items(), n = y.examinees();
  require(items.size() == m && abilities.size() == n, ErrorCode::DimensionMismatch,
          "build_coreset: parameters do not match Y");
  require(k >= 1 && k < n, ErrorCode::InvalidArgument, "build_coreset: need 1 <= k < n");
  require(opt.rounds >= 1, ErrorCode::Config, "build_coreset: rounds must be >= 1");
  if (model != ModelKind::ThreePL) return build_2pl(abilities.theta, k, opt);
  require(opt.rounds == 1, ErrorCode::Config, "build_coreset: rounds > 1 is only available for 1PL/2PL");

  // Basis norms |U_j| of the (theta_j, -1) matrix; identical for every item's sign pattern.
  const auto rows = ability_rows(abilities.theta);
  const ScoreVector lev = opt.sketched ? leverage_l2_sketched(rows, opt.sketch_rows, opt.seed)
                                       : leverage_l2(rows);
  std::vector<double> norm(n);
  for (std::size_t j = 0; j < n; ++j) norm[j] = std::sqrt(std::max(lev.values[j], 0.0));

  std::vector<MuEstimate> mu(m);
  std::vector<std::size_t> fails(m, 0);
  parallel_for(m, [&](std::size_t i) {
    const auto r = y.item_row(i);
    fails[i] = static_cast<std::size_t>(std::count(r.begin(), r.end(), std::int8_t{-1}));
    if (fails[i] == 0 || fails[i] == n) return;
    mu[i] = item_mu(y, items, abilities, i, opt.mu_policy, opt.exact_mu_limit);
  });
  // Infinite or single-class items borrow the largest finite estimate.
  double mu0_cap = 1.0, mu1_cap = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!mu[i].mu0_infinite) mu0_cap = std::max(mu0_cap, mu[i].mu0);
    if (!mu[i].mu1_infinite) mu1_cap = std::max(mu1_cap, mu[i].mu1);
  }
  std::vector<double> mu0(m), mu1(m);
  double e_term = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const bool single = fails[i] == 0 || fails[i] == n;
    mu0[i] = single || mu[i].mu0_infinite ? mu0_cap : std::max(1.0, mu[i].mu0);
    mu1[i] = single || mu[i].mu1_infinite ? mu1_cap : std::max(1.0, mu[i].mu1);
    const double c_grid = round_guessing_up(items.c[i], std::max(mu0[i], mu1[i]), opt.epsilon, opt.kappa);
    e_term = std::max(e_term, std::log(1.0 / std::max(c_grid, 1.0 / opt.kappa)));
  }
  require(e_term > 0, ErrorCode::Numeric, "build_coreset: E must be positive");

  std::vector<ItemConstants> constants(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t passes = n - fails[i];
    if (fails[i] > 0) {
      constants[i].fail_scale = kFailConstant * mu1[i] * mu1[i];
      constants[i].fail_floor = 1.0 / static_cast<double>(fails[i]);
    }
    if (passes > 0)
      constants[i].pass_score =
          next_power_of_two(kPassConstant * e_term * (1.0 + mu0[i]) / static_cast<double>(passes));
  }

  std::vector<double> scores(n, 0.0);
  std::vector<char> forced(n, 0);
  parallel_for(n, [&](std::size_t j) {
    bool saw_fail = false, saw_pass = false;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (y(i, j) < 0) {
        saw_fail = true;
        s = std::max(s, fail_score(constants[i], norm[j]));
      } else {
        saw_pass = true;
        s = std::max(s, constants[i].pass_score);
      }
    }
    if (saw_fail && saw_pass) {
      scores[j] = s;
    } else {
      forced[j] = 1;
    }
  });

  const auto sampled_population =
      n - static_cast<std::size_t>(std::count(forced.begin(), forced.end(), char{1}));
  require(sampled_population > 0, ErrorCode::DegenerateLabels,
          "build_coreset: every examinee has single-class responses");

  WeightedCoreset out = sample_weighted(scores, k, opt.seed, opt.method);
  for (std::size_t j = 0; j < n; ++j) {
    if (!forced[j]) continue;
    out.indices.push_back(j);
    out.u.push_back(1.0);
    out.multiplicity.push_back(1);
    ++out.forced;
  }
  return out;
}

void write_coreset_csv(const WeightedCoreset& coreset, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  f << "index,u,score\n";
  for (std::size_t q = 0; q < coreset.indices.size(); ++q) {
    const std::size_t j = coreset.indices[q];
    const double score = j < coreset.scores.size() ? coreset.scores[j] : 0.0;
    f << j << ',' << format_double(coreset.u[q]) << ',' << format_double(score) << '\n';
  }
  if (!f) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

WeightedCoreset read_coreset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line.rfind("index,u,score", 0) != 0)
    fail(ErrorCode::Io, path + ": missing header index,u,score");
  WeightedCoreset out;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      fail(ErrorCode::Io, path + ":" + std::to_string(line_no) + ": expected 3 columns");
    const std::string ctx = path + ":" + std::to_string(line_no);
    const double idx = parse_double(std::string_view(line).substr(0, c1), ctx);
    if (idx < 0 || idx != std::floor(idx)) fail(ErrorCode::Io, ctx + ": bad index");
    out.indices.push_back(static_cast<std::size_t>(idx));
    out.u.push_back(parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), ctx));
    out.multiplicity.push_back(1);
    parse_double(std::string_view(line).substr(c2 + 1), ctx);
  }
  out.k = out.indices.size();
  return out;
}

}  // namespace irt
