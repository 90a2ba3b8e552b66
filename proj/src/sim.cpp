#include "rodd/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace rodd {

double SimConfig::nominal_snr() const { return std::pow(10.0, snr_db / 10.0); }

void SimConfig::validate() const {
  NetworkConfig net = network;
  net.nominal_snr = nominal_snr();
  net.validate();
  if (bits < 1 || bits > 16) throw std::invalid_argument("bits must be in [1, 16]");
  if (frame_length < 1) throw std::invalid_argument("frame_length must be positive");
  if (!(duty_cycle > 0.0 && duty_cycle < 1.0)) {
    throw std::invalid_argument("duty_cycle must be in (0, 1)");
  }
  if (bp_iterations < 1) throw std::invalid_argument("bp_iterations must be positive");
  if (stage_one_iterations < 0) throw std::invalid_argument("stage_one_iterations must be >= 0");
  if (total_iterations < stage_one_iterations) {
    throw std::invalid_argument("total_iterations must be >= stage_one_iterations");
  }
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (!(heard_threshold >= 0.0)) throw std::invalid_argument("heard_threshold must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
}

SimContext::SimContext(SimConfig config)
    : config_((config.validate(), std::move(config))), network_(generate_network([&] {
        NetworkConfig n = config_.network;
        n.nominal_snr = config_.nominal_snr();
        return n;
      }())) {
  build();
}

SimContext::SimContext(SimConfig config, Network network)
    : config_((config.validate(), std::move(config))), network_(std::move(network)) {
  build();
}

void SimContext::build() {
  books_.reserve(network_.size());
  for (const auto& node : network_.nodes()) {
    books_.push_back(generate_codebook(node.id, config_.bits, config_.frame_length,
                                       config_.duty_cycle, config_.codebook_salt));
  }
  const double intensity =
      static_cast<double>(network_.size()) / (network_.area_side() * network_.area_side());
  channel_.nominal_snr = config_.nominal_snr();
  channel_.sigma2 = interference_variance(intensity, config_.duty_cycle, channel_.nominal_snr,
                                          network_.neighbor_threshold(),
                                          network_.path_loss_exponent());
  channel_.mode = config_.noise_mode;
}

std::vector<NodeState> SimContext::initial_state() const {
  std::vector<NodeState> state;
  state.reserve(network_.size());
  for (const auto& node : network_.nodes()) {
    NodeState s;
    s.id = node.id;
    s.role = node.role;
    s.estimate = node.role == Role::anchor ? node.position : Vec2{};
    state.push_back(s);
  }
  return state;
}

namespace {

struct ClientUpdate {
  bool solved = false;
  Vec2 estimate;
  int heard = 0;
};

ClientUpdate process_client(const SimContext& ctx, const NodeState& self,
                            const std::array<FrameTraffic, 2>& frames, int iteration) {
  const SimConfig& cfg = ctx.config();
  const Network& net = ctx.network();
  DecodeOptions dopt;
  dopt.bp.iterations = cfg.bp_iterations;
  dopt.bp.heard_threshold = cfg.heard_threshold;
  dopt.acquired_gains = cfg.acquired_gains;

  std::array<DecodeOutput, 2> out;
  for (std::size_t f = 0; f < 2; ++f) {
    const Observation obs =
        observe(net, ctx.books(), self.id, frames[f], ctx.channel(),
                {cfg.run_seed, static_cast<std::uint64_t>(iteration), f});
    if (obs.empty()) return {false, self.estimate, 0};
    out[f] = decode_frame(obs, dopt);
  }

  std::vector<RangeConstraint> constraints;
  const auto neighbors = net.neighbors(self.id);
  for (std::size_t b = 0; b < neighbors.size(); ++b) {
    const BlockDecision& dx = out[0].blocks[b];
    const BlockDecision& dy = out[1].blocks[b];
    if (!dx.heard || !dy.heard) continue;
    const double amplitude = 0.5 * (std::abs(dx.amplitude) + std::abs(dy.amplitude));
    if (!(amplitude > 0.0)) continue;
    const int nb = neighbors[b];
    const double gain = std::norm(net.fading(self.id, nb));
    RangeConstraint c;
    c.neighbor_position = {dequantize(dx.message, net.area_side(), cfg.bits),
                           dequantize(dy.message, net.area_side(), cfg.bits)};
    c.range = estimate_distance(amplitude, gain, net.path_loss_exponent(),
                                net.neighbor_threshold());
    c.source = net.node(nb).role;
    constraints.push_back(c);
  }

  ClientUpdate up;
  up.heard = static_cast<int>(constraints.size());
  up.estimate = self.estimate;
  const std::size_t needed = cfg.update_with_fewer_than_three ? 1 : 3;
  if (constraints.size() >= needed) {
    const Vec2 init = self.has_solved ? self.estimate : centroid(constraints);
    up.estimate = solve_location(constraints, init).position;
    up.solved = true;
  }
  return up;
}

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

IterationRecord run_iteration(const SimContext& ctx, std::vector<NodeState>& state,
                              int iteration_index) {
  const SimConfig& cfg = ctx.config();
  const Network& net = ctx.network();
  const std::size_t n = net.size();
  if (state.size() != n) throw std::invalid_argument("state does not match network");

  IterationRecord rec;
  rec.iteration = iteration_index;
  rec.symbol_intervals = 2L * cfg.frame_length * iteration_index;

  std::array<FrameTraffic, 2> frames;
  for (auto& f : frames) {
    f.transmitting.assign(n, 0);
    f.message.assign(n, 0);
  }
  const bool stage_two = iteration_index > cfg.stage_one_iterations;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeState& s = state[i];
    const bool on = s.role == Role::anchor || s.heard_count_last >= 3 || stage_two;
    if (!on) continue;
    const QuantizedLocation ql = quantize_location(s.estimate, net.area_side(), cfg.bits);
    frames[0].transmitting[i] = frames[1].transmitting[i] = 1;
    frames[0].message[i] = ql.omega;
    frames[1].message[i] = ql.nu;
    ++rec.transmitter_count;
  }
  if (!stage_two) {
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i].role == Role::client && state[i].has_transmitted && !frames[0].transmitting[i]) {
        rec.participation_monotone = false;
      }
    }
  }

  std::vector<int> clients;
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i].role == Role::client) clients.push_back(static_cast<int>(i));
  }
  std::vector<ClientUpdate> updates(clients.size());
  // Nothing on the air: every receiver sees pure noise and skips decoding.
  if (rec.transmitter_count > 0) {
    parallel_for(static_cast<int>(clients.size()), cfg.threads, [&](int k) {
      const NodeState& self = state[static_cast<std::size_t>(clients[static_cast<std::size_t>(k)])];
      updates[static_cast<std::size_t>(k)] = process_client(ctx, self, frames, iteration_index);
    });
  } else {
    for (std::size_t k = 0; k < clients.size(); ++k) {
      updates[k].estimate = state[static_cast<std::size_t>(clients[k])].estimate;
    }
  }

  // barrier: commit
  for (std::size_t i = 0; i < n; ++i) state[i].has_transmitted = frames[0].transmitting[i] != 0;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    NodeState& s = state[static_cast<std::size_t>(clients[k])];
    const ClientUpdate& u = updates[k];
    if (rec.transmitter_count > 0) s.heard_count_last = u.heard;
    if (u.solved) {
      s.estimate = u.estimate;
      s.has_solved = true;
      ++rec.clients_updated;
    }
  }

  std::vector<Vec2> est, truth;
  rec.nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 t = net.nodes()[i].position;
    rec.nodes.push_back({state[i].estimate, distance(state[i].estimate, t), state[i].heard_count_last});
    if (state[i].role == Role::client) {
      est.push_back(state[i].estimate);
      truth.push_back(t);
    }
  }
  if (!est.empty()) {
    rec.average_error = average_error(est, truth);
    rec.count_within_1m = count_within(est, truth, 1.0);
  }
  return rec;
}

SimulationResult run_simulation(const SimContext& ctx) {
  SimulationResult result;
  result.final_state = ctx.initial_state();
  for (int t = 1; t <= ctx.config().total_iterations; ++t) {
    result.records.push_back(run_iteration(ctx, result.final_state, t));
  }
  return result;
}

SimulationResult run_simulation(const SimConfig& config) { return run_simulation(SimContext(config)); }

double average_error(std::span<const Vec2> estimates, std::span<const Vec2> truths) {
  if (estimates.empty()) throw std::invalid_argument("average_error needs at least one client");
  if (estimates.size() != truths.size()) throw std::invalid_argument("size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) s += distance(estimates[i], truths[i]);
  return s / static_cast<double>(estimates.size());
}

int count_within(std::span<const Vec2> estimates, std::span<const Vec2> truths, double radius) {
  if (estimates.size() != truths.size()) throw std::invalid_argument("size mismatch");
  int c = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (distance(estimates[i], truths[i]) <= radius) ++c;
  }
  return c;
}

namespace {
double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }
}  // namespace

std::vector<Vec2> convex_hull(std::vector<Vec2> p) {
  std::sort(p.begin(), p.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  std::vector<Vec2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

bool inside_hull(std::span<const Vec2> hull, Vec2 p) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) <= 0.0) return false;
  }
  return true;
}

std::vector<int> hull_interior_clients(const Network& net) {
  std::vector<Vec2> anchors;
  for (const auto& node : net.nodes()) {
    if (node.role == Role::anchor) anchors.push_back(node.position);
  }
  const auto hull = convex_hull(std::move(anchors));
  std::vector<int> ids;
  for (const auto& node : net.nodes()) {
    if (node.role == Role::client && inside_hull(hull, node.position)) ids.push_back(node.id);
  }
  return ids;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace rodd
