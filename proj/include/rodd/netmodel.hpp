#pragma once
// Random network geometry: nodes on a square conditioned on their count,
// reciprocal Rayleigh fading per unordered pair, threshold neighborhoods,
// and the closed-form statistics of the infinite-plane Poisson model.

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "rodd/geometry.hpp"

namespace rodd {

enum class Role { anchor, client };

struct LatticeAnchors {
  int rows = 4;
  int cols = 4;
};

struct RandomAnchors {
  int count = 0;
};

using AnchorLayout = std::variant<LatticeAnchors, RandomAnchors>;

struct NetworkConfig {
  double area_side = 50.0;            // meters
  int node_count = 100;
  AnchorLayout anchors = LatticeAnchors{};
  double path_loss_exponent = 3.0;    // alpha
  double neighbor_threshold = 1e-3;   // theta, linear power ratio
  double nominal_snr = 1000.0;        // gamma, linear
  std::uint64_t geometry_seed = 1;

  double intensity() const { return node_count / (area_side * area_side); }
  int anchor_count() const;
  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

struct Node {
  int id = 0;
  Vec2 position;
  Role role = Role::client;
};

// Immutable after construction; safe to share across threads.
class Network {
 public:
  // `fading` holds one coefficient per unordered pair (i < j), ordered
  // lexicographically; see pair_index().
  Network(double area_side, double path_loss_exponent,
          double neighbor_threshold, std::vector<Node> nodes,
          std::vector<std::complex<double>> fading);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  double area_side() const { return area_side_; }
  double path_loss_exponent() const { return alpha_; }
  double neighbor_threshold() const { return theta_; }

  // h_ij; fading(i, j) == fading(j, i) bit for bit.
  std::complex<double> fading(int i, int j) const;
  const std::vector<std::complex<double>>& fading_table() const { return fading_; }

  // |h_ij|^2 * d_ij^(-alpha)
  double channel_gain(int i, int j) const;

  std::span<const int> neighbors(int id) const;
  bool are_neighbors(int i, int j) const;

  std::size_t pair_index(int i, int j) const;

 private:
  double area_side_;
  double alpha_;
  double theta_;
  std::vector<Node> nodes_;
  std::vector<std::complex<double>> fading_;
  std::vector<std::vector<int>> neighbors_;
};

// Clients uniform on [0,A]^2; lattice anchors at cell centers of an r x c
// grid, random anchors are the first `count` uniformly placed nodes.
Network generate_network(const NetworkConfig& config);

// U_ij = h_ij * d_ij^(-alpha/2). Throws std::domain_error for i == j or
// coincident positions.
std::complex<double> channel_coefficient(const Network& net, int i, int j);

// Expected neighbor count of a typical node:
// (2/alpha) pi lambda theta^(-2/alpha) Gamma(2/alpha).
double mean_neighbor_count(double intensity, double theta, double alpha);

// Per-slot noise plus non-neighbor interference power seen by a typical
// receiver when each node is on with probability q. Throws
// std::domain_error for alpha <= 2 (the interference integral diverges).
double interference_variance(double intensity, double duty_cycle,
                             double nominal_snr, double theta, double alpha);

// Density of |U| for a typical neighbor: (4/alpha) theta^(2/alpha)
// u^(-4/alpha-1) on [sqrt(theta), inf).
double neighbor_amplitude_pdf(double u, double theta, double alpha);
double neighbor_amplitude_cdf(double u, double theta, double alpha);

// Radius beyond which a node is a neighbor with probability below e^-1000,
// so degree and amplitude statistics are unaffected by truncating there.
// Interference is not: its mass outside radius R decays only like R^(2-alpha).
double boundary_free_radius(double theta, double alpha);

// One draw of the Palm distribution around a typical node at the origin,
// restricted to a disc. Interference counts non-neighbors that are on in a
// given slot (independent thinning with retention q).
struct TypicalNodeSample {
  int degree = 0;
  double interference_power = 0.0;  // excludes the unit noise
  std::vector<double> neighbor_amplitudes;
};

TypicalNodeSample sample_typical_node(double intensity, double theta,
                                      double alpha, double duty_cycle,
                                      double nominal_snr, double radius,
                                      std::mt19937_64& rng);

// Mean non-neighbor interference power from nodes farther than `radius`
// (all of which are non-neighbors up to e^-(theta radius^alpha)):
// q gamma lambda 2 pi radius^(2-alpha) / (alpha - 2).
double interference_tail(double intensity, double duty_cycle, double nominal_snr,
                         double alpha, double radius);

// Monte Carlo of `samples` typical nodes on a disc of boundary_free_radius,
// against the closed forms above. The interference estimate is the sampled
// in-disc power plus interference_tail for the outside. Interference is
// reported without the unit noise on both sides.
struct StatsReport {
  double degree_closed = 0.0;
  double degree_mc = 0.0;
  double interference_closed = 0.0;
  double interference_mc = 0.0;    // interference_disc + interference_tail
  double interference_disc = 0.0;  // sampled
  double interference_tail = 0.0;  // exact mean outside the disc
  double ks_distance = 0.0;  // empirical |U| vs neighbor_amplitude_cdf
  long amplitude_samples = 0;
};

StatsReport validate_statistics(double intensity, double theta, double alpha, double duty_cycle,
                                double nominal_snr, long samples, std::uint64_t seed);

}  // namespace rodd
