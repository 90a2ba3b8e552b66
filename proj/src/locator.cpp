#include "rodd/locator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rodd {
namespace {

struct Local {
  double value = 0.0;
  Vec2 grad;
  double hxx = 0.0, hxy = 0.0, hyy = 0.0;
};

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Damped Newton in the plane with Armijo backtracking. The Hessian is
// shifted until positive definite, so non-convex objectives still descend.
template <class Eval>
Vec2 newton_descent(Eval&& eval, Vec2 z, int max_steps) {
  for (int step = 0; step < max_steps; ++step) {
    const Local here = eval(z);
    const double gnorm = norm(here.grad);
    if (gnorm < 1e-14) break;
    double a = here.hxx, b = here.hxy, c = here.hyy;
    const double tr = std::abs(a) + std::abs(c) + 1e-300;
    const double mean = 0.5 * (a + c);
    const double spread = std::hypot(0.5 * (a - c), b);
    const double min_eig = mean - spread;
    const double floor = 1e-10 * tr;
    if (min_eig < floor) {
      a += floor - min_eig;
      c += floor - min_eig;
    }
    const double det = a * c - b * b;
    Vec2 dir{-(c * here.grad.x - b * here.grad.y) / det, -(a * here.grad.y - b * here.grad.x) / det};
    const double slope = dot(here.grad, dir);
    if (!(slope < 0.0)) dir = -1.0 * here.grad;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k) {
      const Vec2 trial = z + t * dir;
      if (eval(trial).value <= here.value + 1e-4 * t * dot(here.grad, dir)) {
        z = trial;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return z;
}

// mu * softplus(u / mu) summed over constraints; tends to the hinge as mu -> 0.
Local smoothed_hinge(Vec2 z, std::span<const RangeConstraint> cs, double mu) {
  Local l;
  for (const auto& c : cs) {
    const Vec2 d = z - c.neighbor_position;
    const double u = norm2(d) - c.range * c.range;
    const double s = logistic(u / mu);
    const double curv = s * (1.0 - s) / mu;
    l.value += mu * softplus(u / mu);
    l.grad += (2.0 * s) * d;
    l.hxx += 2.0 * s + 4.0 * curv * d.x * d.x;
    l.hxy += 4.0 * curv * d.x * d.y;
    l.hyy += 2.0 * s + 4.0 * curv * d.y * d.y;
  }
  return l;
}

// sqrt(u^2 + mu^2) summed over constraints; tends to consistency_error.
Local smoothed_abs(Vec2 z, std::span<const RangeConstraint> cs, double mu) {
  Local l;
  for (const auto& c : cs) {
    const Vec2 d = z - c.neighbor_position;
    const double u = norm2(d) - c.range * c.range;
    const double root = std::sqrt(u * u + mu * mu);
    const double du = u / root;
    const double ddu = mu * mu / (root * root * root);
    l.value += root;
    l.grad += (2.0 * du) * d;
    l.hxx += 2.0 * du + 4.0 * ddu * d.x * d.x;
    l.hxy += 4.0 * ddu * d.x * d.y;
    l.hyy += 2.0 * du + 4.0 * ddu * d.y * d.y;
  }
  return l;
}

double mean_squared_range(std::span<const RangeConstraint> cs) {
  double s = 0.0;
  for (const auto& c : cs) s += c.range * c.range;
  return s / static_cast<double>(cs.size());
}

}  // namespace

double estimate_distance(double amplitude, double fading_gain, double alpha, double theta) {
  if (!(amplitude > 0.0) || !(fading_gain > 0.0)) {
    throw std::invalid_argument("amplitude and fading gain must be positive");
  }
  const double r = std::pow(amplitude * amplitude / fading_gain, -1.0 / alpha);
  const double edge = std::pow(fading_gain / theta, 1.0 / alpha);
  return std::clamp(r, std::min(0.01, edge), edge);
}

double hinge_objective(Vec2 z, std::span<const RangeConstraint> constraints) {
  double f = 0.0;
  for (const auto& c : constraints) {
    f += std::max(0.0, norm2(z - c.neighbor_position) - c.range * c.range);
  }
  return f;
}

double consistency_error(Vec2 z, std::span<const RangeConstraint> constraints) {
  double f = 0.0;
  for (const auto& c : constraints) {
    f += std::abs(norm2(z - c.neighbor_position) - c.range * c.range);
  }
  return f;
}

Vec2 centroid(std::span<const RangeConstraint> constraints) {
  Vec2 s;
  for (const auto& c : constraints) s += c.neighbor_position;
  return constraints.empty() ? s : (1.0 / static_cast<double>(constraints.size())) * s;
}

LocationEstimate solve_location(std::span<const RangeConstraint> constraints, Vec2 init,
                                const SolverOptions& options) {
  if (constraints.empty()) throw std::invalid_argument("solve_location needs constraints");

  double mean_range = 0.0;
  double mean_offset = 0.0;
  for (const auto& c : constraints) {
    mean_range += c.range;
    mean_offset += distance(init, c.neighbor_position);
  }
  mean_range /= static_cast<double>(constraints.size());
  mean_offset /= static_cast<double>(constraints.size());
  // zero ranges give c = 0; step relative to the distance still to cover
  const double c0 = options.step_fraction * (mean_range > 0.0 ? mean_range : std::max(mean_offset, 1e-6));

  LocationEstimate est;
  est.constraint_count = static_cast<int>(constraints.size());
  est.confidence = constraints.size() >= 3 ? Confidence::determined : Confidence::underdetermined;

  Vec2 z = init;
  Vec2 best = z;
  double best_f = hinge_objective(z, constraints);
  const double init_f = best_f;
  std::vector<double> history{best_f};
  if (options.trace) options.trace->push_back({0, z, best_f});

  int t = 1;
  for (; t <= options.max_iterations && best_f > 0.0; ++t) {
    Vec2 g;
    for (const auto& c : constraints) {
      const Vec2 d = z - c.neighbor_position;
      if (norm2(d) - c.range * c.range > 0.0) g += 2.0 * d;
    }
    const double gn = norm(g);
    if (gn == 0.0) break;
    z -= (c0 / std::sqrt(static_cast<double>(t)) / gn) * g;
    const double f = hinge_objective(z, constraints);
    if (f < best_f) {
      best_f = f;
      best = z;
    }
    history.push_back(best_f);
    if (options.trace) options.trace->push_back({t, z, f});
    if (t >= options.stall_window &&
        history[history.size() - 1 - static_cast<std::size_t>(options.stall_window)] - best_f <
            options.stall_tolerance) {
      break;
    }
  }
  est.iterations = std::min(t, options.max_iterations);

  if (options.refine && best_f > 0.0) {
    const double scale = std::max(mean_squared_range(constraints), 1e-6);
    double mu = std::max(best_f / static_cast<double>(constraints.size()), 1e-3 * scale);
    Vec2 y = best;
    while (mu > 1e-13 * scale) {
      y = newton_descent([&](Vec2 p) { return smoothed_hinge(p, constraints, mu); }, y, 50);
      mu *= 0.1;
    }
    const double f = hinge_objective(y, constraints);
    if (f < best_f) {
      best_f = f;
      best = y;
    }
  }

  if (options.polish) {
    const double scale = std::max(mean_squared_range(constraints), 1e-6);
    double mu = 1e-2 * scale;
    Vec2 y = best;
    const double before = consistency_error(best, constraints);
    while (mu > 1e-10 * scale) {
      y = newton_descent([&](Vec2 p) { return smoothed_abs(p, constraints, mu); }, y, 50);
      mu *= 0.1;
    }
    if (consistency_error(y, constraints) < before && hinge_objective(y, constraints) <= init_f) {
      best = y;
      best_f = hinge_objective(y, constraints);
    }
  }

  est.position = best;
  est.objective_value = best_f;
  return est;
}

}  // namespace rodd
