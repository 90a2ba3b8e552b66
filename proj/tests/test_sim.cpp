#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rodd/sim.hpp"

using namespace rodd;

namespace {

std::vector<std::complex<double>> unit_fading(std::size_t n) {
  std::vector<std::complex<double>> f(n * (n - 1) / 2);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::polar(1.0, 0.7 * static_cast<double>(k));
  return f;
}

SimConfig small_config() {
  SimConfig c;
  c.bits = 8;
  c.frame_length = 200;
  c.total_iterations = 3;
  c.stage_one_iterations = 2;
  c.snr_db = 60.0;
  return c;
}

}  // namespace

TEST_CASE("three anchors and one client") {
  const std::vector<Node> nodes{{0, {10.3, 10.9}, Role::anchor},
                                {1, {17.6, 11.4}, Role::anchor},
                                {2, {11.1, 17.2}, Role::anchor},
                                {3, {12.9, 13.2}, Role::client}};
  const Network net(50.0, 3.0, 1e-3, nodes, unit_fading(4));
  for (int i = 0; i < 4; ++i) REQUIRE(net.neighbors(i).size() == 3);

  SimConfig cfg = small_config();
  cfg.network.node_count = 4;
  cfg.network.anchors = RandomAnchors{3};
  const SimContext ctx(cfg, net);
  auto state = ctx.initial_state();
  CHECK(state[3].estimate == Vec2{0, 0});
  const IterationRecord rec = run_iteration(ctx, state, 1);
  CHECK(rec.transmitter_count == 3);
  CHECK(rec.clients_updated == 1);
  CHECK(rec.nodes[3].heard == 3);
  // reported anchor positions are cell midpoints, off by at most sqrt(2) Delta / 2
  const double bound = std::numbers::sqrt2 * quantization_step(50.0, 8) / 2.0;
  CHECK(rec.nodes[3].error <= bound + 1e-2);
  for (int a = 0; a < 3; ++a) CHECK(rec.nodes[static_cast<std::size_t>(a)].error == 0.0);
  CHECK(rec.average_error == rec.nodes[3].error);
}

TEST_CASE("an iteration with nobody on the air leaves the state alone") {
  const std::vector<Node> nodes{{0, {10, 10}, Role::client}, {1, {12, 10}, Role::client}, {2, {10, 13}, Role::client}};
  const Network net(50.0, 3.0, 1e-3, nodes, unit_fading(3));
  SimConfig cfg = small_config();
  cfg.network.node_count = 3;
  cfg.network.anchors = RandomAnchors{0};
  const SimContext ctx(cfg, net);
  auto state = ctx.initial_state();
  const auto before = state;
  const IterationRecord rec = run_iteration(ctx, state, 1);
  CHECK(rec.transmitter_count == 0);
  CHECK(rec.clients_updated == 0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    CHECK(state[i].estimate == before[i].estimate);
    CHECK(state[i].heard_count_last == before[i].heard_count_last);
  }
}

TEST_CASE("all anchors: zero error from the first iteration") {
  SimConfig cfg = small_config();
  cfg.network.node_count = 20;
  cfg.network.anchors = RandomAnchors{20};
  const SimulationResult r = run_simulation(cfg);
  REQUIRE(r.records.size() == 3);
  for (const auto& n : r.records[0].nodes) CHECK(n.error == 0.0);
  CHECK(r.records[0].transmitter_count == 20);
}

TEST_CASE("small protocol run: invariants and determinism") {
  SimConfig cfg;
  cfg.network.node_count = 40;
  cfg.bits = 6;
  cfg.frame_length = 200;
  cfg.stage_one_iterations = 3;
  cfg.total_iterations = 6;
  cfg.network.geometry_seed = 5;
  cfg.run_seed = 9;
  const SimContext ctx(cfg);
  const SimulationResult a = run_simulation(ctx);
  REQUIRE(a.records.size() == 6);

  cfg.threads = 3;
  const SimulationResult b = run_simulation(cfg);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    const auto& ra = a.records[t];
    const auto& rb = b.records[t];
    CHECK(ra.average_error == rb.average_error);
    CHECK(ra.transmitter_count == rb.transmitter_count);
    for (std::size_t i = 0; i < ra.nodes.size(); ++i) CHECK(ra.nodes[i].estimate == rb.nodes[i].estimate);
  }

  const Network& net = ctx.network();
  std::vector<NodeState> state = ctx.initial_state();
  for (int t = 1; t <= 6; ++t) {
    const auto before = state;
    const IterationRecord rec = run_iteration(ctx, state, t);
    CHECK(rec.symbol_intervals == 2L * 200 * t);
    CHECK(rec.average_error >= 0.0);
    if (t <= 3) CHECK(rec.participation_monotone);
    else CHECK(rec.transmitter_count == 40);
    std::vector<Vec2> est, truth;
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (state[i].role == Role::anchor) {
        CHECK(state[i].estimate == net.node(static_cast<int>(i)).position);
        continue;
      }
      // clients hearing fewer than three neighbors keep their estimate
      if (state[i].heard_count_last < 3) CHECK(state[i].estimate == before[i].estimate);
      est.push_back(state[i].estimate);
      truth.push_back(net.node(static_cast<int>(i)).position);
    }
    // metrics match a recomputation from the per-node table
    double sum = 0.0;
    int within = 0;
    for (std::size_t k = 0; k < est.size(); ++k) {
      const double e = std::hypot(est[k].x - truth[k].x, est[k].y - truth[k].y);
      sum += e;
      within += e <= 1.0;
    }
    CHECK(rec.average_error == doctest::Approx(sum / static_cast<double>(est.size())).epsilon(1e-12));
    CHECK(rec.count_within_1m == within);
  }
}

TEST_CASE("average_error and count_within") {
  const std::vector<Vec2> truth{{0, 0}, {5, 5}};
  const std::vector<Vec2> exact = truth;
  const std::vector<Vec2> off{{1, 0}, {5, 8}};
  CHECK(average_error(exact, truth) == 0.0);
  CHECK(average_error(off, truth) == 2.0);
  CHECK(count_within(exact, truth) == 2);
  CHECK(count_within(off, truth) == 1);
  CHECK(count_within(off, truth, 0.5) == 0);
  CHECK_THROWS_AS(average_error(std::vector<Vec2>{}, std::vector<Vec2>{}), std::invalid_argument);
}

TEST_CASE("hull helpers") {
  const std::vector<Vec2> pts{{0, 0}, {4, 0}, {4, 4}, {0, 4}, {2, 2}, {2, 0}};
  const auto hull = convex_hull(pts);
  REQUIRE(hull.size() == 4);
  double area2 = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i], b = hull[(i + 1) % hull.size()];
    area2 += a.x * b.y - a.y * b.x;
  }
  CHECK(area2 == 32.0);  // counter-clockwise, twice the area
  CHECK(inside_hull(hull, {2, 2}));
  CHECK_FALSE(inside_hull(hull, {4, 2}));
  CHECK_FALSE(inside_hull(hull, {5, 2}));

  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), std::invalid_argument);

  const std::vector<Node> nodes{{0, {0, 0}, Role::anchor}, {1, {10, 0}, Role::anchor}, {2, {0, 10}, Role::anchor},
                                {3, {2, 2}, Role::client}, {4, {9, 9}, Role::client}};
  const Network net(50.0, 3.0, 1e-3, nodes, unit_fading(5));
  CHECK(hull_interior_clients(net) == std::vector<int>{3});
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(SimConfig{}.validate());
  CHECK(SimConfig{}.nominal_snr() == doctest::Approx(1000.0));
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.bits = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.frame_length = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.duty_cycle = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.stage_one_iterations = 30; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.stage_one_iterations = -1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.bp_iterations = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.threads = 0; }).validate(), std::invalid_argument);
}
