#pragma once
// Recovering, from one Observation, which codeword each neighbor sent and
// the complex link amplitude it arrived with.
//
// decode_bp is the belief-propagation support detector. It runs on the real
// and the imaginary part of the received frame separately, over the same
// bipartite graph. Each part is modelled as y = sqrt(gamma_s) * sum_k
// s_k g_k x_k + w with binary x_k, where g_k is a per-block gain of that
// part. Unit gains give the plain on/off model; the receiver chain feeds in
// the complex amplitudes found by a greedy acquisition pass, which makes the
// binary model match frames that carry fading amplitudes.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rodd/channel.hpp"

namespace rodd {

// Edges (mu, k) for every nonzero signature entry, grouped by measurement.
struct FactorGraph {
  int measurements = 0;
  int symbols = 0;
  std::vector<std::uint32_t> row_start;  // size measurements + 1
  std::vector<std::uint32_t> col;        // symbol of each edge
  std::vector<std::int8_t> sign;         // s_{mu k} of each edge
  std::vector<std::uint32_t> symbol_degree;
  double l2 = 0.0;                       // sum over mu of |d mu|^2

  std::size_t edges() const { return col.size(); }  // L
  std::size_t row_degree(int mu) const {
    return row_start[static_cast<std::size_t>(mu) + 1] - row_start[static_cast<std::size_t>(mu)];
  }
};

FactorGraph build_factor_graph(const Observation& obs);

// Per-part gains, one entry per block. Empty means unit gains.
struct ComponentGains {
  std::vector<double> real;
  std::vector<double> imag;

  static ComponentGains from_amplitudes(std::span<const std::complex<double>> amplitudes);
};

struct BpOptions {
  int iterations = 10;            // T
  double heard_threshold = 0.5;   // on the combined score
};

struct BlockDecision {
  int neighbor_id = -1;
  int message = 0;           // w_i, zero-based
  double score = 0.0;        // combined activity score in [0, 2]
  double raw_belief_re = 0;  // max_j |m_j| over the block, real part
  double raw_belief_im = 0;  // same, imaginary part
  std::complex<double> amplitude{};  // refined estimate of U
  bool heard = false;
  bool amplitude_fallback = false;
};

struct DecodeOutput {
  std::vector<BlockDecision> blocks;
  // Combined score of every symbol, indexed like the signature columns.
  std::vector<double> scores;
  // Final half log-likelihood ratios per part (tanh of these are m_k).
  std::vector<double> half_llr_re;
  std::vector<double> half_llr_im;
  std::uint64_t edge_updates = 0;  // message updates performed
};

// Algorithm 1 on both parts. Throws std::invalid_argument for gamma_s <= 0,
// T < 1 or an observation without edges.
DecodeOutput decode_bp(const Observation& obs, const BpOptions& options,
                       const ComponentGains& gains = {});

// Messages are clamped to [-1 + eps, 1 - eps].
inline constexpr double kBeliefEpsilon = 1e-12;

struct RefinedAmplitudes {
  std::vector<std::complex<double>> amplitude;  // per block, 0 when unsupported
  std::vector<bool> fallback;                   // matched-filter estimate used
  bool rank_deficient = false;
};

// Least squares fit of received ~ sqrt(gamma_s) * S_norm[:, support] * a.
// support[i] is a codeword index or -1 to leave block i out. If the
// selected columns are rank deficient every block falls back to its own
// matched-filter estimate and the result is flagged.
RefinedAmplitudes refine_amplitudes(const Observation& obs, std::span<const int> support);

// Greedy block pursuit: repeatedly take the column with the largest
// normalized correlation among blocks not yet chosen, then refit all chosen
// amplitudes jointly.
struct Acquisition {
  std::vector<int> support;
  std::vector<std::complex<double>> amplitude;
};

Acquisition acquire(const Observation& obs);

struct DecodeOptions {
  BpOptions bp;
  // Feed acquisition amplitudes to decode_bp as part gains. Off runs the
  // detector with unit gains.
  bool acquired_gains = true;
};

// Receiver chain used by the protocol: acquire, detect, refine.
DecodeOutput decode_frame(const Observation& obs, const DecodeOptions& options);

struct OracleResult {
  std::vector<int> messages;
  std::vector<std::complex<double>> amplitudes;
  double residual = 0.0;  // squared norm at the optimum
  bool ambiguous = false; // another combination reaches the same residual
};

// Exhaustive maximum likelihood over all (2^l)^K codeword combinations.
// Throws std::length_error when that exceeds 10^6.
OracleResult oracle_decode(const Observation& obs);

}  // namespace rodd
