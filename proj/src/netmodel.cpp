#include "rodd/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rodd/random.hpp"

namespace rodd {

int NetworkConfig::anchor_count() const {
  if (const auto* lattice = std::get_if<LatticeAnchors>(&anchors)) {
    return lattice->rows * lattice->cols;
  }
  return std::get<RandomAnchors>(anchors).count;
}

void NetworkConfig::validate() const {
  if (!(area_side > 0.0)) throw std::invalid_argument("area_side must be positive");
  if (node_count < 1) throw std::invalid_argument("node_count must be at least 1");
  if (!(path_loss_exponent > 2.0)) {
    throw std::invalid_argument("path_loss_exponent must exceed 2");
  }
  if (!(neighbor_threshold > 0.0)) {
    throw std::invalid_argument("neighbor_threshold must be positive");
  }
  if (!(nominal_snr > 0.0)) throw std::invalid_argument("nominal_snr must be positive");
  if (const auto* lattice = std::get_if<LatticeAnchors>(&anchors)) {
    if (lattice->rows < 0 || lattice->cols < 0) {
      throw std::invalid_argument("anchor lattice dimensions must be non-negative");
    }
  } else if (std::get<RandomAnchors>(anchors).count < 0) {
    throw std::invalid_argument("anchor count must be non-negative");
  }
  if (anchor_count() > node_count) {
    throw std::invalid_argument("anchor layout needs " + std::to_string(anchor_count()) +
                                " nodes but node_count is " + std::to_string(node_count));
  }
}

Network::Network(double area_side, double path_loss_exponent,
                 double neighbor_threshold, std::vector<Node> nodes,
                 std::vector<std::complex<double>> fading)
    : area_side_(area_side),
      alpha_(path_loss_exponent),
      theta_(neighbor_threshold),
      nodes_(std::move(nodes)),
      fading_(std::move(fading)) {
  const std::size_t n = nodes_.size();
  if (fading_.size() != n * (n - 1) / 2 && !(n == 0 && fading_.empty())) {
    throw std::invalid_argument("fading table size does not match node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes_[i].id != static_cast<int>(i)) {
      throw std::invalid_argument("node ids must be 0..n-1 in order");
    }
  }
  neighbors_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = norm2(nodes_[i].position - nodes_[j].position);
      if (d2 == 0.0) continue;
      const double gain = std::norm(fading_[pair_index(static_cast<int>(i), static_cast<int>(j))]) *
                          std::pow(d2, -alpha_ / 2.0);
      if (gain >= theta_) {
        neighbors_[i].push_back(static_cast<int>(j));
        neighbors_[j].push_back(static_cast<int>(i));
      }
    }
  }
}

std::size_t Network::pair_index(int i, int j) const {
  if (i == j) throw std::domain_error("no self pair");
  if (i > j) std::swap(i, j);
  const std::size_t n = nodes_.size();
  const auto a = static_cast<std::size_t>(i);
  const auto b = static_cast<std::size_t>(j);
  return a * n - a * (a + 1) / 2 + (b - a - 1);
}

std::complex<double> Network::fading(int i, int j) const { return fading_[pair_index(i, j)]; }

double Network::channel_gain(int i, int j) const {
  const double d2 = norm2(node(i).position - node(j).position);
  return std::norm(fading(i, j)) * std::pow(d2, -alpha_ / 2.0);
}

std::span<const int> Network::neighbors(int id) const {
  return neighbors_.at(static_cast<std::size_t>(id));
}

bool Network::are_neighbors(int i, int j) const {
  for (int k : neighbors(i)) {
    if (k == j) return true;
  }
  return false;
}

Network generate_network(const NetworkConfig& config) {
  config.validate();
  auto rng = keyed_engine({static_cast<std::uint64_t>(Stream::geometry), config.geometry_seed});
  std::uniform_real_distribution<double> coord(0.0, config.area_side);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(config.node_count));
  int next_id = 0;
  if (const auto* lattice = std::get_if<LatticeAnchors>(&config.anchors)) {
    const double dx = config.area_side / lattice->cols;
    const double dy = config.area_side / lattice->rows;
    for (int r = 0; r < lattice->rows; ++r) {
      for (int c = 0; c < lattice->cols; ++c) {
        nodes.push_back({next_id++, {(c + 0.5) * dx, (r + 0.5) * dy}, Role::anchor});
      }
    }
  }
  const int random_anchors = std::holds_alternative<RandomAnchors>(config.anchors)
                                 ? std::get<RandomAnchors>(config.anchors).count
                                 : 0;
  while (next_id < config.node_count) {
    const double x = coord(rng);
    const double y = coord(rng);
    const Role role = next_id < random_anchors ? Role::anchor : Role::client;
    nodes.push_back({next_id++, {x, y}, role});
  }

  const std::size_t n = nodes.size();
  std::vector<std::complex<double>> fading;
  fading.reserve(n * (n - 1) / 2);
  for (std::size_t p = 0; p < n * (n - 1) / 2; ++p) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    fading.emplace_back(re, im);
  }
  return Network(config.area_side, config.path_loss_exponent, config.neighbor_threshold,
                 std::move(nodes), std::move(fading));
}

std::complex<double> channel_coefficient(const Network& net, int i, int j) {
  if (i == j) throw std::domain_error("channel coefficient needs two distinct nodes");
  const double d = distance(net.node(i).position, net.node(j).position);
  if (d == 0.0) throw std::domain_error("coincident node positions");
  return net.fading(i, j) * std::pow(d, -net.path_loss_exponent() / 2.0);
}

double mean_neighbor_count(double intensity, double theta, double alpha) {
  return (2.0 / alpha) * std::numbers::pi * intensity * std::pow(theta, -2.0 / alpha) *
         std::tgamma(2.0 / alpha);
}

double interference_variance(double intensity, double duty_cycle, double nominal_snr,
                             double theta, double alpha) {
  if (!(alpha > 2.0)) {
    throw std::domain_error("interference integral diverges for alpha <= 2");
  }
  return 4.0 / (alpha * (alpha - 2.0)) * std::numbers::pi * intensity * duty_cycle *
             nominal_snr * std::pow(theta, 1.0 - 2.0 / alpha) * std::tgamma(2.0 / alpha) +
         1.0;
}

double neighbor_amplitude_pdf(double u, double theta, double alpha) {
  if (u < std::sqrt(theta)) return 0.0;
  return (4.0 / alpha) * std::pow(theta, 2.0 / alpha) * std::pow(u, -4.0 / alpha - 1.0);
}

double neighbor_amplitude_cdf(double u, double theta, double alpha) {
  if (u < std::sqrt(theta)) return 0.0;
  return 1.0 - std::pow(theta, 2.0 / alpha) * std::pow(u, -4.0 / alpha);
}

double boundary_free_radius(double theta, double alpha) {
  return 10.0 * std::pow(theta, -1.0 / alpha);
}

TypicalNodeSample sample_typical_node(double intensity, double theta, double alpha,
                                      double duty_cycle, double nominal_snr, double radius,
                                      std::mt19937_64& rng) {
  TypicalNodeSample out;
  const double mean_points = intensity * std::numbers::pi * radius * radius;
  if (!(mean_points > 0.0)) return out;
  std::poisson_distribution<long> count(mean_points);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> power_fade(1.0);
  const long points = count(rng);
  for (long p = 0; p < points; ++p) {
    // uniform on the disc: r = R sqrt(U)
    const double r = radius * std::sqrt(unit(rng));
    const double fade = power_fade(rng);
    const bool on = unit(rng) < duty_cycle;
    if (r == 0.0) continue;
    const double gain = fade * std::pow(r, -alpha);
    if (gain >= theta) {
      ++out.degree;
      out.neighbor_amplitudes.push_back(std::sqrt(gain));
    } else if (on) {
      out.interference_power += nominal_snr * gain;
    }
  }
  return out;
}

double interference_tail(double intensity, double duty_cycle, double nominal_snr,
                         double alpha, double radius) {
  if (!(alpha > 2.0)) throw std::domain_error("interference integral diverges for alpha <= 2");
  return duty_cycle * nominal_snr * intensity * 2.0 * std::numbers::pi *
         std::pow(radius, 2.0 - alpha) / (alpha - 2.0);
}

StatsReport validate_statistics(double intensity, double theta, double alpha, double duty_cycle,
                                double nominal_snr, long samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("samples must be positive");
  StatsReport r;
  r.degree_closed = mean_neighbor_count(intensity, theta, alpha);
  r.interference_closed =
      interference_variance(intensity, duty_cycle, nominal_snr, theta, alpha) - 1.0;
  auto rng = keyed_engine({static_cast<std::uint64_t>(Stream::interference), seed});
  const double radius = boundary_free_radius(theta, alpha);
  std::vector<double> amplitudes;
  double degree = 0.0;
  double interference = 0.0;
  for (long s = 0; s < samples; ++s) {
    TypicalNodeSample t =
        sample_typical_node(intensity, theta, alpha, duty_cycle, nominal_snr, radius, rng);
    degree += t.degree;
    interference += t.interference_power;
    amplitudes.insert(amplitudes.end(), t.neighbor_amplitudes.begin(), t.neighbor_amplitudes.end());
  }
  r.degree_mc = degree / static_cast<double>(samples);
  r.interference_disc = interference / static_cast<double>(samples);
  r.interference_tail = interference_tail(intensity, duty_cycle, nominal_snr, alpha, radius);
  r.interference_mc = r.interference_disc + r.interference_tail;
  r.amplitude_samples = static_cast<long>(amplitudes.size());
  std::sort(amplitudes.begin(), amplitudes.end());
  const double n = static_cast<double>(amplitudes.size());
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    const double f = neighbor_amplitude_cdf(amplitudes[i], theta, alpha);
    r.ks_distance = std::max({r.ks_distance, static_cast<double>(i + 1) / n - f,
                              f - static_cast<double>(i) / n});
  }
  return r;
}

}  // namespace rodd
