#pragma once
// Ranging from decoded amplitudes and position estimation from ranges.

#include <span>
#include <vector>

#include "rodd/geometry.hpp"
#include "rodd/netmodel.hpp"

namespace rodd {

struct RangeConstraint {
  Vec2 neighbor_position;  // as decoded
  double range = 0.0;      // meters
  Role source = Role::client;
};

enum class Confidence { determined, underdetermined };

struct LocationEstimate {
  Vec2 position;
  double objective_value = 0.0;  // hinge objective at `position`
  int constraint_count = 0;
  Confidence confidence = Confidence::underdetermined;
  int iterations = 0;            // subgradient steps taken
};

// r = (u^2 / |h|^2)^(-1/alpha), clamped to [0.01, (|h|^2/theta)^(1/alpha)].
// Throws std::invalid_argument for non-positive amplitude or gain.
double estimate_distance(double amplitude, double fading_gain, double alpha, double theta);

// sum_i max(0, |z - z_i|^2 - r_i^2).
//
// This is the relaxed second-order cone program
//   minimize sum t_i  s.t.  y_i >= |z - z_i|^2,  t_i >= |y_i - r_i^2|
// with the slacks eliminated: for fixed z the best choice is
// y_i = max(r_i^2, |z - z_i|^2), which leaves t_i = max(0, |z - z_i|^2 - r_i^2).
// Minimizing over z therefore has the same optimum as the cone program.
double hinge_objective(Vec2 z, std::span<const RangeConstraint> constraints);

// sum_i | |z - z_i|^2 - r_i^2 |, the unrelaxed (non-convex) error.
double consistency_error(Vec2 z, std::span<const RangeConstraint> constraints);

Vec2 centroid(std::span<const RangeConstraint> constraints);

struct SolverTraceRow {
  int iteration = 0;
  Vec2 position;
  double objective = 0.0;
};

struct SolverOptions {
  int max_iterations = 500;
  double step_fraction = 0.5;     // c = step_fraction * mean(r_i)
  double stall_tolerance = 1e-9;  // m^2 of best-objective improvement ...
  int stall_window = 20;          // ... over this many steps
  // Smoothed Newton continuation from the best subgradient iterate.
  bool refine = true;
  // Local descent on consistency_error after the convex solve.
  bool polish = false;
  std::vector<SolverTraceRow>* trace = nullptr;
};

// Normalized subgradient descent on hinge_objective with step c / sqrt(t).
// Returns the best point found, never worse than `init`. Throws
// std::invalid_argument for an empty constraint list.
LocationEstimate solve_location(std::span<const RangeConstraint> constraints, Vec2 init,
                                const SolverOptions& options = {});

}  // namespace rodd
