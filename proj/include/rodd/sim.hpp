#pragma once
// The iterative two-stage protocol. Each iteration is two frames: every
// transmitting node sends the codeword of its quantized x coordinate, then
// the one of its y coordinate. Clients decode both frames, turn heard
// neighbors into range constraints and re-solve their position.

#include <cstdint>
#include <span>
#include <vector>

#include "rodd/channel.hpp"
#include "rodd/codec.hpp"
#include "rodd/decoder.hpp"
#include "rodd/locator.hpp"
#include "rodd/netmodel.hpp"

namespace rodd {

struct SimConfig {
  NetworkConfig network;
  int bits = 8;                   // l
  int frame_length = 600;         // M_s
  double duty_cycle = 0.5;        // q
  int bp_iterations = 10;         // T
  int stage_one_iterations = 7;   // T1
  int total_iterations = 20;
  double snr_db = 30.0;           // overrides network.nominal_snr
  NoiseMode noise_mode = NoiseMode::analytic;
  double heard_threshold = 0.5;   // tau_act on the combined score
  std::uint64_t run_seed = 1;
  std::uint64_t codebook_salt = 0;
  // Feed acquisition amplitudes to the detector as gains.
  bool acquired_gains = true;
  // Clients re-solve with any number of heard neighbors instead of >= 3.
  bool update_with_fewer_than_three = false;
  int threads = 1;

  double nominal_snr() const;
  void validate() const;  // std::invalid_argument on violation
};

struct NodeState {
  int id = 0;
  Role role = Role::client;
  Vec2 estimate;             // anchors: true position; clients start at the origin
  int heard_count_last = 0;
  bool has_transmitted = false;
  bool has_solved = false;
};

struct NodeSnapshot {
  Vec2 estimate;
  double error = 0.0;
  int heard = 0;
};

struct IterationRecord {
  int iteration = 0;
  int transmitter_count = 0;
  double average_error = 0.0;  // over clients
  int count_within_1m = 0;
  int clients_updated = 0;
  long symbol_intervals = 0;   // cumulative
  bool participation_monotone = true;  // stage one only
  std::vector<NodeSnapshot> nodes;
};

// Immutable per-run context: network, books and channel parameters.
class SimContext {
 public:
  explicit SimContext(SimConfig config);
  SimContext(SimConfig config, Network network);

  const SimConfig& config() const { return config_; }
  const Network& network() const { return network_; }
  std::span<const Codebook> books() const { return books_; }
  const ChannelParams& channel() const { return channel_; }

  std::vector<NodeState> initial_state() const;

 private:
  void build();

  SimConfig config_;
  Network network_;
  std::vector<Codebook> books_;
  ChannelParams channel_;
};

// Runs iteration `iteration_index` (1-based) and commits the new state.
IterationRecord run_iteration(const SimContext& ctx, std::vector<NodeState>& state,
                              int iteration_index);

struct SimulationResult {
  std::vector<IterationRecord> records;
  std::vector<NodeState> final_state;
};

SimulationResult run_simulation(const SimConfig& config);
SimulationResult run_simulation(const SimContext& ctx);

// mean |estimate - truth|; throws std::invalid_argument when empty
double average_error(std::span<const Vec2> estimates, std::span<const Vec2> truths);
int count_within(std::span<const Vec2> estimates, std::span<const Vec2> truths, double radius = 1.0);

// Counter-clockwise convex hull, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);
// Strictly inside a counter-clockwise hull with at least three vertices.
bool inside_hull(std::span<const Vec2> hull, Vec2 p);
// Ids of clients strictly inside the anchors' convex hull.
std::vector<int> hull_interior_clients(const Network& net);
// Throws std::invalid_argument when empty.
double median(std::vector<double> values);

}  // namespace rodd
