#pragma once

// Walks the unit circle eta(t) = (cos t, sin t) across the angles where some
// row's sign changes. Between two such angles every x_j . eta has a constant
// sign, so each side's mass is a linear form in eta and only sector endpoints
// and interior sample points need visiting.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "irt/model.hpp"

namespace irt::detail {

struct SweepPoint {
  Vec2 eta;
  /// Sum of x_j over rows positive / negative at this point.
  Vec2 pos_sum;
  Vec2 neg_sum;
  std::size_t pos_count;
  std::size_t neg_count;
  bool boundary;

  double pos_mass() const { return pos_sum[0] * eta[0] + pos_sum[1] * eta[1]; }
  double neg_mass() const { return -(neg_sum[0] * eta[0] + neg_sum[1] * eta[1]); }
};

/// Calls visit(SweepPoint) at every sign-change angle (rows vanishing there
/// are counted on neither side) and at the midpoint of every open sector.
/// Zero rows are ignored. Returns false when every row is zero.
template <class Visit>
bool angular_sweep(std::span<const Vec2> rows, Visit&& visit) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  struct Event {
    double angle;
    std::size_t row;
  };
  std::vector<Event> events;
  events.reserve(2 * rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const Vec2& x = rows[j];
    if (x[0] == 0.0 && x[1] == 0.0) continue;
    const double phi = std::atan2(x[1], x[0]);
    for (double t : {phi + 0.5 * std::numbers::pi, phi - 0.5 * std::numbers::pi}) {
      t = std::fmod(t, two_pi);
      if (t < 0) t += two_pi;
      events.push_back({t, j});
    }
  }
  if (events.empty()) return false;
  std::sort(events.begin(), events.end(),
            [](const Event& l, const Event& r) { return l.angle < r.angle; });

  auto direction = [](double t) { return Vec2{std::cos(t), std::sin(t)}; };

  // Signs in the sector that wraps past 2*pi.
  const double start = 0.5 * (events.back().angle - two_pi + events.front().angle);
  const Vec2 e0 = direction(start);
  std::vector<signed char> sign(rows.size(), 0);
  SweepPoint cur{e0, {0, 0}, {0, 0}, 0, 0, false};
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const Vec2& x = rows[j];
    if (x[0] == 0.0 && x[1] == 0.0) continue;
    const double v = x[0] * e0[0] + x[1] * e0[1];
    sign[j] = v >= 0 ? 1 : -1;
    auto& sum = v >= 0 ? cur.pos_sum : cur.neg_sum;
    sum[0] += x[0];
    sum[1] += x[1];
    ++(v >= 0 ? cur.pos_count : cur.neg_count);
  }
  if (events.back().angle - two_pi < events.front().angle) visit(cur);

  std::size_t e = 0;
  while (e < events.size()) {
    std::size_t g = e;
    while (g < events.size() && events[g].angle == events[e].angle) ++g;
    const double t = events[e].angle;

    // At the boundary itself the crossing rows are zero.
    SweepPoint at = cur;
    at.eta = direction(t);
    at.boundary = true;
    for (std::size_t q = e; q < g; ++q) {
      const std::size_t j = events[q].row;
      const Vec2& x = rows[j];
      auto& sum = sign[j] > 0 ? at.pos_sum : at.neg_sum;
      sum[0] -= x[0];
      sum[1] -= x[1];
      --(sign[j] > 0 ? at.pos_count : at.neg_count);
    }
    visit(at);

    for (std::size_t q = e; q < g; ++q) {
      const std::size_t j = events[q].row;
      const Vec2& x = rows[j];
      auto& from = sign[j] > 0 ? cur.pos_sum : cur.neg_sum;
      auto& to = sign[j] > 0 ? cur.neg_sum : cur.pos_sum;
      from[0] -= x[0];
      from[1] -= x[1];
      to[0] += x[0];
      to[1] += x[1];
      if (sign[j] > 0) {
        --cur.pos_count;
        ++cur.neg_count;
      } else {
        --cur.neg_count;
        ++cur.pos_count;
      }
      sign[j] = static_cast<signed char>(-sign[j]);
    }
    const double next = g < events.size() ? events[g].angle : events.front().angle + two_pi;
    if (next > t) {
      cur.eta = direction(0.5 * (t + next));
      cur.boundary = false;
      if (g < events.size()) visit(cur);
    }
    e = g;
  }
  return true;
}

}  // namespace irt::detail
