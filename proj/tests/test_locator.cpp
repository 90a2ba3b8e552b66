#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rodd/locator.hpp"

using namespace rodd;

namespace {

using Constraints = std::vector<RangeConstraint>;

// Coarse grid over the bounding box of the discs, then a 1e-3 grid around
// the coarse winner. The objective is convex, so the fine window holds the
// global grid minimum.
struct GridResult {
  Vec2 point;
  double value = std::numeric_limits<double>::infinity();
};

template <class F>
GridResult grid_minimum(F&& f, Vec2 lo, Vec2 hi, double coarse, double fine) {
  GridResult best;
  for (double x = lo.x; x <= hi.x; x += coarse) {
    for (double y = lo.y; y <= hi.y; y += coarse) {
      const double v = f(Vec2{x, y});
      if (v < best.value) best = {{x, y}, v};
    }
  }
  const Vec2 c = best.point;
  const int half = static_cast<int>(std::ceil(2.0 * coarse / fine));
  for (int i = -half; i <= half; ++i) {
    for (int j = -half; j <= half; ++j) {
      const Vec2 p{c.x + i * fine, c.y + j * fine};
      const double v = f(p);
      if (v < best.value) best = {p, v};
    }
  }
  return best;
}

GridResult hinge_grid(const Constraints& cs) {
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& c : cs) {
    lo.x = std::min(lo.x, c.neighbor_position.x - c.range - 1.0);
    lo.y = std::min(lo.y, c.neighbor_position.y - c.range - 1.0);
    hi.x = std::max(hi.x, c.neighbor_position.x + c.range + 1.0);
    hi.y = std::max(hi.y, c.neighbor_position.y + c.range + 1.0);
  }
  return grid_minimum([&](Vec2 z) { return hinge_objective(z, cs); }, lo, hi, 0.05, 1e-3);
}

// Log-barrier interior point method on the cone program in its original
// variables x = (z, y_1..y_n, t_1..t_n):
//   minimize sum t_i  s.t.  y_i - |z - z_i|^2 >= 0,  t_i - y_i + r_i^2 >= 0,
//                           t_i + y_i - r_i^2 >= 0.
double socp_oracle(const Constraints& cs) {
  const int n = static_cast<int>(cs.size());
  const int dim = 2 + 2 * n;
  Eigen::VectorXd x(dim);
  Vec2 z0;
  for (const auto& c : cs) z0 += c.neighbor_position;
  z0 = (1.0 / n) * z0;
  x(0) = z0.x;
  x(1) = z0.y;
  for (int i = 0; i < n; ++i) {
    const double y = norm2(z0 - cs[static_cast<std::size_t>(i)].neighbor_position) + 1.0;
    const double r2 = cs[static_cast<std::size_t>(i)].range * cs[static_cast<std::size_t>(i)].range;
    x(2 + i) = y;
    x(2 + n + i) = std::abs(y - r2) + 1.0;
  }

  auto slacks = [&](const Eigen::VectorXd& v, int i, double out[3]) {
    const auto& c = cs[static_cast<std::size_t>(i)];
    const double dx = v(0) - c.neighbor_position.x, dy = v(1) - c.neighbor_position.y;
    const double r2 = c.range * c.range;
    out[0] = v(2 + i) - dx * dx - dy * dy;
    out[1] = v(2 + n + i) - v(2 + i) + r2;
    out[2] = v(2 + n + i) + v(2 + i) - r2;
  };
  auto merit = [&](const Eigen::VectorXd& v, double tau) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      double s[3];
      slacks(v, i, s);
      if (s[0] <= 0 || s[1] <= 0 || s[2] <= 0) return std::numeric_limits<double>::infinity();
      f += tau * v(2 + n + i) - std::log(s[0]) - std::log(s[1]) - std::log(s[2]);
    }
    return f;
  };

  for (double tau = 1.0; 3.0 * n / tau > 1e-9; tau *= 8.0) {
    for (int step = 0; step < 100; ++step) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < n; ++i) {
        const auto& c = cs[static_cast<std::size_t>(i)];
        double s[3];
        slacks(x, i, s);
        const int yi = 2 + i, ti = 2 + n + i;
        g(ti) += tau;
        // -log(s0): grad of s0 is (-2dx, -2dy, +1 at y_i), Hessian -2 I on z
        Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
        a(0) = -2.0 * (x(0) - c.neighbor_position.x);
        a(1) = -2.0 * (x(1) - c.neighbor_position.y);
        a(yi) = 1.0;
        g -= a / s[0];
        h += a * a.transpose() / (s[0] * s[0]);
        h(0, 0) += 2.0 / s[0];
        h(1, 1) += 2.0 / s[0];
        Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
        b(ti) = 1.0;
        b(yi) = -1.0;
        g -= b / s[1];
        h += b * b.transpose() / (s[1] * s[1]);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
        d(ti) = 1.0;
        d(yi) = 1.0;
        g -= d / s[2];
        h += d * d.transpose() / (s[2] * s[2]);
      }
      const Eigen::VectorXd dx = -h.ldlt().solve(g);
      const double decrement = -g.dot(dx);
      if (decrement < 1e-12) break;
      const double f0 = merit(x, tau);
      double t = 1.0;
      while (merit(x + t * dx, tau) > f0 - 0.25 * t * decrement && t > 1e-12) t *= 0.5;
      x += t * dx;
    }
  }
  double objective = 0.0;
  for (int i = 0; i < n; ++i) objective += x(2 + n + i);
  return objective;
}

Constraints random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> pos(0.0, 10.0), range(0.2, 6.0);
  Constraints cs(static_cast<std::size_t>(count(rng)));
  for (auto& c : cs) c = {{pos(rng), pos(rng)}, range(rng), Role::anchor};
  return cs;
}

Constraints exact_triangle() {
  return {{{0, 0}, 5.0, Role::anchor}, {{10, 0}, 8.0623, Role::anchor}, {{0, 10}, 6.7082, Role::anchor}};
}

}  // namespace

TEST_CASE("estimate_distance") {
  for (double alpha : {2.5, 3.0, 4.0}) CHECK(estimate_distance(1.0, 1.0, alpha, 1e-3) == doctest::Approx(1.0));
  CHECK(std::abs(estimate_distance(0.0316228, 1.0, 3.0, 1e-3) - 10.0) < 1e-4);

  // r -> U = h r^(-alpha/2) -> r
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rd(0.05, 9.9), hd(0.3, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double r = rd(rng), h = hd(rng);
    const double u = h * std::pow(r, -1.5);
    const double edge = std::pow(h * h / 1e-3, 1.0 / 3.0);
    if (r > edge) continue;
    CHECK(std::abs(estimate_distance(u, h * h, 3.0, 1e-3) - r) <= 1e-12 * std::max(1.0, r));
  }

  // clamped to [0.01, neighborhood edge]
  CHECK(estimate_distance(1e6, 1.0, 3.0, 1e-3) == 0.01);
  CHECK(estimate_distance(1e-6, 1.0, 3.0, 1e-3) == doctest::Approx(10.0));
  CHECK_THROWS_AS(estimate_distance(0.0, 1.0, 3.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(estimate_distance(1.0, -1.0, 3.0, 1e-3), std::invalid_argument);
}

TEST_CASE("hinge and consistency objectives") {
  const Constraints one{{{1, 1}, 2.0, Role::anchor}};
  CHECK(hinge_objective({1, 2}, one) == 0.0);
  // (r + 1)^2 - r^2 = 2r + 1
  CHECK(hinge_objective({4, 1}, one) == doctest::Approx(5.0));
  CHECK(consistency_error({4, 1}, one) == doctest::Approx(5.0));
  CHECK(consistency_error({1, 1}, one) == doctest::Approx(4.0));

  const Constraints tri = exact_triangle();
  CHECK(hinge_objective({3, 4}, tri) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(consistency_error({3, 4}, tri) < 1e-3);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> p(-20.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    const Constraints cs = random_instance(rng);
    const Vec2 a{p(rng), p(rng)}, b{p(rng), p(rng)};
    const Vec2 mid = 0.5 * (a + b);
    CHECK(hinge_objective(mid, cs) <= 0.5 * (hinge_objective(a, cs) + hinge_objective(b, cs)) + 1e-9);
    bool outside = true;
    for (const auto& c : cs) outside &= distance(a, c.neighbor_position) >= c.range;
    if (outside) CHECK(hinge_objective(a, cs) == doctest::Approx(consistency_error(a, cs)));
  }
}

TEST_CASE("grid minimum of the consistency error sits at the true point") {
  const Constraints tri = exact_triangle();
  const GridResult g = grid_minimum([&](Vec2 z) { return consistency_error(z, tri); }, {-1, -1}, {11, 11}, 0.05, 1e-3);
  CHECK(distance(g.point, {3, 4}) < 1e-2);
}

TEST_CASE("solver matches the grid and the cone program") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Constraints cs = random_instance(rng);
    const LocationEstimate est = solve_location(cs, centroid(cs));
    const GridResult grid = hinge_grid(cs);
    const double socp = socp_oracle(cs);
    INFO("trial " << trial << " solver " << est.objective_value << " grid " << grid.value << " socp " << socp);
    // The grid point nearest the minimizer is within spacing/sqrt(2) of it,
    // so the grid can overshoot by at most that times the local Lipschitz
    // constant. At kink minimizers this exceeds 1e-3.
    double lipschitz = 0.0;
    for (const auto& c : cs) lipschitz += 2.0 * (distance(grid.point, c.neighbor_position) + 1e-3);
    const double grid_slack = lipschitz * 1e-3 / std::sqrt(2.0);
    CHECK(est.objective_value <= grid.value + 1e-9);
    CHECK(grid.value - est.objective_value <= grid_slack);
    CHECK(std::abs(est.objective_value - socp) <= 1e-6 * std::max(1.0, socp));
    CHECK(est.objective_value >= 0.0);
    CHECK(est.objective_value == hinge_objective(est.position, cs));
  }
}

TEST_CASE("exact ranges to (3, 4)") {
  const Constraints tri = exact_triangle();
  for (Vec2 init : {Vec2{0, 0}, centroid(tri), Vec2{40, -30}}) {
    const LocationEstimate est = solve_location(tri, init);
    CHECK(distance(est.position, {3, 4}) < 1e-2);
    CHECK(est.confidence == Confidence::determined);
    CHECK(est.constraint_count == 3);
  }
  // a wider interior point
  const Vec2 truth{4.2, 3.1};
  const Constraints cs{{{0, 0}, distance(truth, {0, 0}), Role::anchor},
                       {{10, 0}, distance(truth, {10, 0}), Role::anchor},
                       {{0, 10}, distance(truth, {0, 10}), Role::anchor},
                       {{10, 10}, distance(truth, {10, 10}), Role::anchor}};
  CHECK(distance(solve_location(cs, centroid(cs)).position, truth) < 1e-2);
}

TEST_CASE("degenerate constraint sets") {
  const Constraints point{{{2.5, -1.0}, 0.0, Role::anchor}};
  const LocationEstimate p = solve_location(point, {7, 7});
  CHECK(distance(p.position, {2.5, -1.0}) < 1e-6);
  CHECK(p.confidence == Confidence::underdetermined);

  const Constraints two{{{0, 0}, 5.0, Role::anchor}, {{6, 0}, 5.0, Role::client}};
  const LocationEstimate t = solve_location(two, {20, 20});
  CHECK(t.objective_value == 0.0);
  CHECK(t.confidence == Confidence::underdetermined);
  CHECK(t.constraint_count == 2);

  CHECK_THROWS_AS(solve_location(Constraints{}, {0, 0}), std::invalid_argument);
}

TEST_CASE("never worse than the initial point") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> p(-10.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Constraints cs = random_instance(rng);
    const Vec2 init{p(rng), p(rng)};
    for (bool polish : {false, true}) {
      SolverOptions opt;
      opt.polish = polish;
      const LocationEstimate est = solve_location(cs, init, opt);
      CHECK(est.objective_value <= hinge_objective(init, cs));
    }
    SolverOptions plain;
    plain.refine = false;
    CHECK(solve_location(cs, init, plain).objective_value <= hinge_objective(init, cs));
  }
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Constraints cs = random_instance(rng);
    const Vec2 v{13.0, -7.5};
    Constraints moved = cs;
    for (auto& c : moved) c.neighbor_position += v;
    const Vec2 init = centroid(cs);
    const LocationEstimate a = solve_location(cs, init);
    const LocationEstimate b = solve_location(moved, init + v);
    CHECK(std::abs(a.objective_value - b.objective_value) <= 1e-6);
    // the minimizer is unique only when the optimum is positive
    if (a.objective_value > 1e-3) CHECK(distance(a.position + v, b.position) < 1e-4);
  }
}

TEST_CASE("solver trace") {
  std::vector<SolverTraceRow> trace;
  SolverOptions opt;
  opt.trace = &trace;
  const Constraints tri = exact_triangle();
  const LocationEstimate est = solve_location(tri, {30, 30}, opt);
  REQUIRE(!trace.empty());
  CHECK(trace.front().iteration == 0);
  CHECK(trace.front().position == Vec2{30, 30});
  CHECK(static_cast<int>(trace.size()) == est.iterations + 1);
  CHECK(est.iterations <= 500);
}
