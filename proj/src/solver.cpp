#include "irt/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "irt/error.hpp"
#include "irt/parallel.hpp"
#include "irt/summation.hpp"

namespace irt {

void FitConfig::validate() const {
  require(max_main_iterations >= 1, ErrorCode::Config, "max_main_iterations must be >= 1");
  require(inner_tolerance > 0.0, ErrorCode::Config, "inner_tolerance must be positive");
  require(inner_max_steps >= 1, ErrorCode::Config, "inner_max_steps must be >= 1");
  require(bounds.a.lower > 0.0 && bounds.a.lower <= bounds.a.upper, ErrorCode::Config,
          "a bounds must satisfy 0 < lower <= upper");
  require(bounds.b.lower <= bounds.b.upper && bounds.theta.lower <= bounds.theta.upper,
          ErrorCode::Config, "b/theta bounds are inverted");
  require(bounds.c.lower >= 0.0 && bounds.c.upper < 0.5 && bounds.c.lower <= bounds.c.upper,
          ErrorCode::Config, "c bounds must lie in [0, 0.5)");
}

namespace {

struct Evaluation {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

double objective_at(const SignedDesign& d, const std::array<double, 3>& p, bool free_c) {
  return conditional_nll(d, {p[0], p[1]}, free_c ? std::optional<double>(p[2]) : std::nullopt);
}

Evaluation evaluate(const SignedDesign& d, const std::array<double, 3>& p, bool free_c) {
  Evaluation ev;
  PairwiseSum<double> value;
  double g0 = 0, g1 = 0, gc = 0;
  double h00 = 0, h01 = 0, h11 = 0, h0c = 0, h1c = 0, hcc = 0;
  const std::size_t n = d.size();
  for (std::size_t r = 0; r < n; ++r) {
    const double w = d.weight[r];
    if (w == 0.0) continue;
    const double x0 = d.x0[r], x1 = d.x1[r];
    const double z = x0 * p[0] + x1 * p[1];
    const double c = free_c ? p[2] : d.c[r];
    const LossDerivatives ld = loss_derivatives(d.kind[r], c, z);
    value.add(w * ld.value);
    const double wz = w * ld.dz;
    const double wzz = w * ld.dzz;
    g0 += wz * x0;
    g1 += wz * x1;
    h00 += wzz * x0 * x0;
    h01 += wzz * x0 * x1;
    h11 += wzz * x1 * x1;
    if (free_c) {
      gc += w * ld.dc;
      h0c += w * ld.dzc * x0;
      h1c += w * ld.dzc * x1;
      hcc += w * ld.dcc;
    }
  }
  ev.value = value.total();
  ev.grad << g0, g1, gc;
  ev.hess << h00, h01, h0c, h01, h11, h1c, h0c, h1c, hcc;
  return ev;
}

}  // namespace

ConditionalGradient conditional_gradient(const SignedDesign& design, Vec2 eta,
                                         std::optional<double> shared_c) {
  const bool free_c = shared_c.has_value();
  const Evaluation ev = evaluate(design, {eta[0], eta[1], free_c ? *shared_c : 0.0}, free_c);
  return {ev.grad[0], ev.grad[1], free_c ? ev.grad[2] : 0.0};
}

ConditionalResult solve_conditional(const SignedDesign& design, const ConditionalProblem& pr) {
  const int dim = pr.free_c ? 3 : 2;
  for (int i = 0; i < dim; ++i)
    require(pr.lower[i] <= pr.upper[i], ErrorCode::InvalidArgument, "conditional box is inverted");
  require(design.size() > 0, ErrorCode::InvalidArgument, "conditional solve on an empty design");

  auto project = [&](std::array<double, 3> p) {
    for (int i = 0; i < dim; ++i) p[i] = std::clamp(p[i], pr.lower[i], pr.upper[i]);
    return p;
  };

  ConditionalResult res;
  std::array<double, 3> x = project(pr.init);
  Evaluation ev = evaluate(design, x, pr.free_c);
  res.initial_objective = ev.value;

  auto projected_gradient = [&](const Evaluation& e) {
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      if (pr.lower[i] == pr.upper[i]) continue;
      const double moved = std::clamp(x[i] - e.grad[i], pr.lower[i], pr.upper[i]);
      norm = std::max(norm, std::abs(x[i] - moved));
    }
    return norm;
  };

  int step = 0;
  for (; step < pr.max_steps; ++step) {
    res.projected_gradient_norm = projected_gradient(ev);
    if (res.projected_gradient_norm <= pr.tolerance) {
      res.converged = true;
      break;
    }

    // Free coordinates: not fixed and not pressed against an active bound.
    std::array<int, 3> free_idx{};
    int nfree = 0;
    for (int i = 0; i < dim; ++i) {
      if (pr.lower[i] == pr.upper[i]) continue;
      if (x[i] <= pr.lower[i] && ev.grad[i] > 0) continue;
      if (x[i] >= pr.upper[i] && ev.grad[i] < 0) continue;
      free_idx[nfree++] = i;
    }
    if (nfree == 0) {
      res.converged = true;
      break;
    }

    Eigen::MatrixXd hff(nfree, nfree);
    Eigen::VectorXd gf(nfree);
    for (int r = 0; r < nfree; ++r) {
      gf[r] = ev.grad[free_idx[r]];
      for (int c = 0; c < nfree; ++c) hff(r, c) = ev.hess(free_idx[r], free_idx[c]);
    }

    auto try_direction = [&](const Eigen::VectorXd& dir_free, double t0) -> bool {
      std::array<double, 3> dir{0.0, 0.0, 0.0};
      for (int r = 0; r < nfree; ++r) dir[free_idx[r]] = dir_free[r];
      double t = t0;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        std::array<double, 3> cand = x;
        for (int i = 0; i < dim; ++i) cand[i] += t * dir[i];
        cand = project(cand);
        double decrease = 0.0, moved = 0.0;
        for (int i = 0; i < dim; ++i) {
          decrease += ev.grad[i] * (cand[i] - x[i]);
          moved = std::max(moved, std::abs(cand[i] - x[i]));
        }
        if (moved == 0.0) return false;
        const double f_new = objective_at(design, cand, pr.free_c);
        if (f_new <= ev.value + 1e-4 * decrease) {
          x = cand;
          return true;
        }
      }
      return false;
    };

    bool moved = false;
    Eigen::LLT<Eigen::MatrixXd> llt(hff);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd newton = llt.solve(-gf);
      if (newton.allFinite() && newton.dot(gf) < 0) moved = try_direction(newton, 1.0);
    }
    if (!moved) {
      const double scale = std::max(1.0, hff.diagonal().cwiseAbs().maxCoeff());
      moved = try_direction(-gf / scale, 1.0);
    }
    if (!moved) break;

    const double f_old = ev.value;
    ev = evaluate(design, x, pr.free_c);
    if (std::abs(f_old - ev.value) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(f_old)) {
      res.projected_gradient_norm = projected_gradient(ev);
      res.converged = res.projected_gradient_norm <= std::sqrt(pr.tolerance);
      ++step;
      break;
    }
  }
  if (step == pr.max_steps) res.projected_gradient_norm = projected_gradient(ev);
  res.params = x;
  res.objective = ev.value;
  res.steps = step;
  return res;
}

ConditionalResult fit_conditional(const SignedDesign& design, ModelKind kind,
                                  Orientation orientation, const Bounds& bounds,
                                  std::array<double, 3> init, double tolerance, int max_steps) {
  design.validate();
  ConditionalProblem pr;
  pr.tolerance = tolerance;
  pr.max_steps = max_steps;
  pr.init = init;
  if (orientation == Orientation::ByExaminee) {
    pr.lower = {bounds.theta.lower, -1.0, 0.0};
    pr.upper = {bounds.theta.upper, -1.0, 0.0};
    pr.init[1] = -1.0;
    return solve_conditional(design, pr);
  }
  if (kind == ModelKind::OnePL) {
    pr.lower = {1.0, bounds.b.lower, 0.0};
    pr.upper = {1.0, bounds.b.upper, 0.0};
    return solve_conditional(design, pr);
  }
  pr.lower = {bounds.a.lower, bounds.b.lower, bounds.c.lower};
  pr.upper = {bounds.a.upper, bounds.b.upper, bounds.c.upper};
  if (kind == ModelKind::TwoPL) return solve_conditional(design, pr);

  // 3PL item step: joint (a, b, c) from two starts, incumbent wins ties.
  pr.free_c = true;
  ConditionalResult best = solve_conditional(design, pr);
  ConditionalProblem alt = pr;
  alt.init = {1.0, 0.0, bounds.c.lower + 0.05};
  ConditionalResult other = solve_conditional(design, alt);
  if (other.objective < best.objective) {
    other.initial_objective = best.initial_objective;
    best = other;
  }
  return best;
}

// Alternating loop --------------------------------------------------------------

std::pair<ItemParameters, AbilityParameters> initial_parameters(const ResponseMatrix& y,
                                                                ModelKind model,
                                                                const FitConfig& config) {
  const std::size_t m = y.items(), n = y.examinees();
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = y.item_row(i);
    for (std::size_t j = 0; j < n; ++j) score[j] += row[j] > 0 ? 1.0 : 0.0;
  }
  const double mean = std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : score) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  AbilityParameters abilities(n);
  for (std::size_t j = 0; j < n; ++j)
    abilities.theta[j] = sd > 0 ? config.bounds.theta.clamp((score[j] - mean) / sd) : 0.0;

  const double c0 = model == ModelKind::ThreePL ? std::max(config.bounds.c.lower, 0.1) : 0.0;
  ItemParameters items(m, 1.0, 0.0, c0);
  const double floor = 0.5 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = y.item_row(i);
    const auto fails = std::count(row.begin(), row.end(), std::int8_t{-1});
    const double p = std::clamp(static_cast<double>(fails) / static_cast<double>(n), floor, 1.0 - floor);
    items.b[i] = config.bounds.b.clamp(std::log(p / (1.0 - p)));
    items.a[i] = model == ModelKind::OnePL ? 1.0 : config.bounds.a.clamp(1.0);
  }
  return {std::move(items), std::move(abilities)};
}

double coreset_objective(const ResponseMatrix& y, const ItemParameters& items,
                         const AbilityParameters& abilities, const WeightedCoreset& coreset) {
  const std::size_t m = y.items();
  std::vector<double> per_item(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    const auto row = y.item_row(i);
    PairwiseSum<double> acc;
    for (std::size_t r = 0; r < coreset.indices.size(); ++r) {
      const std::size_t j = coreset.indices[r];
      const double logit = items.a[i] * abilities.theta[j] - items.b[i];
      const double z = row[j] > 0 ? -logit : logit;
      acc.add(coreset.u[r] * loss_value(row[j] > 0 ? LossKind::Pass : LossKind::Fail, items.c[i], z));
    }
    per_item[i] = acc.total();
  });
  return pairwise_sum(per_item);
}

FitResult alternate_fit(const ResponseMatrix& y, ModelKind model, const FitConfig& config,
                        const WeightedCoreset* coreset,
                        std::optional<std::pair<ItemParameters, AbilityParameters>> start) {
  config.validate();
  const std::size_t m = y.items(), n = y.examinees();
  if (coreset) {
    require(!coreset->indices.empty(), ErrorCode::EmptyCoreset, "alternate_fit: empty coreset");
    require(coreset->u.size() == coreset->indices.size(), ErrorCode::DimensionMismatch,
            "alternate_fit: coreset weights do not match indices");
    for (std::size_t j : coreset->indices)
      require(j < n, ErrorCode::DimensionMismatch, "alternate_fit: coreset index exceeds n");
  }
  auto [items, abilities] = start ? std::move(*start) : initial_parameters(y, model, config);
  require(items.size() == m && abilities.size() == n, ErrorCode::DimensionMismatch,
          "alternate_fit: starting parameters do not match Y");

  auto objective = [&] {
    return coreset ? coreset_objective(y, items, abilities, *coreset) : full_nll(y, items, abilities);
  };

  using Clock = std::chrono::steady_clock;
  const auto t_start = Clock::now();
  FitResult result;
  FitTrace& trace = result.trace;
  trace.objective.push_back(objective());

  std::optional<RowSelection> selection;
  if (coreset) selection = RowSelection{coreset->indices, coreset->u};

  std::vector<int> rejected_ability(n, 0), rejected_item(m, 0);
  for (int iter = 0; iter < config.max_main_iterations; ++iter) {
    // Abilities given items.
    const auto t_a = Clock::now();
    parallel_for(n, [&](std::size_t j) {
      thread_local SignedDesign design;
      fill_examinee_design(design, y, items, j);
      const ConditionalResult r =
          fit_conditional(design, model, Orientation::ByExaminee, config.bounds,
                          {abilities.theta[j], -1.0, 0.0}, config.inner_tolerance,
                          config.inner_max_steps);
      if (config.monotone_guard && !(r.objective < r.initial_objective)) {
        rejected_ability[j] += r.params[0] != abilities.theta[j];
        return;
      }
      abilities.theta[j] = r.params[0];
    });
    trace.seconds_ability_step += std::chrono::duration<double>(Clock::now() - t_a).count();

    // Items given abilities.
    const auto t_b = Clock::now();
    parallel_for(m, [&](std::size_t i) {
      thread_local SignedDesign design;
      fill_item_design(design, y, abilities.theta, items.c[i], i, selection);
      const ConditionalResult r =
          fit_conditional(design, model, Orientation::ByItem, config.bounds,
                          {items.a[i], items.b[i], items.c[i]}, config.inner_tolerance,
                          config.inner_max_steps);
      if (config.monotone_guard && !(r.objective < r.initial_objective)) {
        rejected_item[i] += r.params[0] != items.a[i] || r.params[1] != items.b[i];
        return;
      }
      items.a[i] = r.params[0];
      items.b[i] = r.params[1];
      if (model == ModelKind::ThreePL) items.c[i] = r.params[2];
    });
    trace.seconds_item_step += std::chrono::duration<double>(Clock::now() - t_b).count();

    const double prev = trace.objective.back();
    const double now = objective();
    trace.objective.push_back(now);
    trace.iterations = iter + 1;
    if (std::abs(prev - now) <= config.relative_stop * std::abs(prev)) break;
  }
  trace.rejected_updates = std::accumulate(rejected_ability.begin(), rejected_ability.end(), 0) +
                           std::accumulate(rejected_item.begin(), rejected_item.end(), 0);
  trace.seconds_total = std::chrono::duration<double>(Clock::now() - t_start).count();
  result.items = std::move(items);
  result.abilities = std::move(abilities);
  return result;
}

std::pair<ItemParameters, AbilityParameters> standardize(const ItemParameters& items,
                                                         const AbilityParameters& abilities) {
  const std::size_t n = abilities.size();
  require(n >= 2, ErrorCode::DegenerateScale, "standardize needs at least two abilities");
  const double mean = pairwise_sum(abilities.theta) / static_cast<double>(n);
  PairwiseSum<double> ss;
  for (double t : abilities.theta) ss.add((t - mean) * (t - mean));
  const double sd = std::sqrt(ss.total() / static_cast<double>(n));
  require(sd > 0.0 && std::isfinite(sd), ErrorCode::DegenerateScale,
          "standardize: abilities have zero spread");
  ItemParameters out_items = items;
  AbilityParameters out_abilities(n);
  for (std::size_t j = 0; j < n; ++j) out_abilities.theta[j] = (abilities.theta[j] - mean) / sd;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out_items.a[i] = items.a[i] * sd;
    out_items.b[i] = items.b[i] - items.a[i] * mean;
  }
  return {std::move(out_items), std::move(out_abilities)};
}

}  // namespace irt
