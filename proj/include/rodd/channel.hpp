#pragma once
// What one receiver observes during one frame: its off-slots, the rows of
// every neighbor codebook at those slots, and the superposed received
// samples scaled so that received = sqrt(gamma_s) * S_norm * X + W with
// unit-variance complex Gaussian W.

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rodd/codec.hpp"
#include "rodd/netmodel.hpp"

namespace rodd {

enum class NoiseMode {
  analytic,   // non-neighbor interference folded into Gaussian noise of variance sigma^2
  empirical,  // unit noise plus the actual non-neighbor transmissions
};

struct Observation {
  int receiver_id = -1;
  int bits = 0;             // l
  int frame_length = 0;     // M_s
  double duty_cycle = 0.5;  // q
  double gamma_s = 0.0;
  std::vector<int> visible_rows;  // the receiver's off-slots
  std::vector<int> block_map;     // neighbor id of each block
  // Column-major M x N raw ternary entries; column b * 2^bits + w is
  // neighbor b's codeword w restricted to the visible rows.
  std::vector<std::int8_t> signature;
  std::vector<std::complex<double>> received;

  int rows() const { return static_cast<int>(visible_rows.size()); }
  int blocks() const { return static_cast<int>(block_map.size()); }
  int block_size() const { return 1 << bits; }
  int columns() const { return blocks() * block_size(); }
  bool empty() const { return block_map.empty() || visible_rows.empty(); }

  std::span<const std::int8_t> column(int k) const {
    return std::span(signature).subspan(static_cast<std::size_t>(k) * visible_rows.size(),
                                        visible_rows.size());
  }
  std::int8_t entry(int row, int col) const {
    return signature[static_cast<std::size_t>(col) * visible_rows.size() + row];
  }
  // 1 / sqrt(M_s (1-q) q): the normalization that gives unit expected
  // column energy.
  double column_scale() const;
};

// gamma * M_s * (1-q) * q / sigma^2
double effective_snr(double nominal_snr, int frame_length, double duty_cycle, double sigma2);

// Who is on the air in one frame and which codeword each node sends.
struct FrameTraffic {
  std::vector<std::uint8_t> transmitting;  // per node
  std::vector<int> message;                // per node, codeword index
};

struct ChannelParams {
  double nominal_snr = 1000.0;
  double sigma2 = 1.0;  // noise + interference variance assumed by the receiver
  NoiseMode mode = NoiseMode::analytic;
};

// Noise streams are keyed by (run_seed, iteration, frame, receiver).
struct NoiseKey {
  std::uint64_t run_seed = 0;
  std::uint64_t iteration = 0;
  std::uint64_t frame = 0;
};

// A silent receiver listens over the whole frame. A receiver without
// neighbors yields an observation with no blocks.
Observation observe(const Network& net, std::span<const Codebook> books, int receiver,
                    const FrameTraffic& traffic, const ChannelParams& params,
                    const NoiseKey& key);

// A listen-only receiver with one block per codebook and no network:
// received = sqrt(gamma_s) * S_norm * X + noise_scale * CN(0, 1).
// messages[k] < 0 leaves block k silent.
Observation synthesize(std::span<const Codebook> books, std::span<const int> messages,
                       std::span<const std::complex<double>> amplitudes, double gamma_s,
                       double noise_scale, std::mt19937_64& rng);

}  // namespace rodd
