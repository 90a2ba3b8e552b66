#include "rodd/decoder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rodd/kernels.hpp"

namespace rodd {
namespace {

using Eigen::ColPivHouseholderQR;
using Eigen::Index;
using Eigen::MatrixXd;

// sqrt(gamma_s) * S_norm restricted to `cols`, one real column per entry.
MatrixXd design_matrix(const Observation& obs, std::span<const int> cols) {
  const double unit = std::sqrt(obs.gamma_s) * obs.column_scale();
  MatrixXd a(obs.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto s = obs.column(cols[c]);
    for (int r = 0; r < obs.rows(); ++r) a(r, static_cast<Index>(c)) = unit * s[static_cast<std::size_t>(r)];
  }
  return a;
}

MatrixXd received_matrix(const Observation& obs) {
  MatrixXd y(obs.rows(), 2);
  for (int r = 0; r < obs.rows(); ++r) {
    y(r, 0) = obs.received[static_cast<std::size_t>(r)].real();
    y(r, 1) = obs.received[static_cast<std::size_t>(r)].imag();
  }
  return y;
}

std::complex<double> matched_filter(const Observation& obs, int col) {
  const auto s = obs.column(col);
  double energy = 0.0;
  std::complex<double> acc{};
  for (int r = 0; r < obs.rows(); ++r) {
    const double v = s[static_cast<std::size_t>(r)];
    energy += v * v;
    acc += v * obs.received[static_cast<std::size_t>(r)];
  }
  if (energy == 0.0) return {};
  return acc / (std::sqrt(obs.gamma_s) * obs.column_scale() * energy);
}

void check_decodable(const Observation& obs) {
  if (!(obs.gamma_s > 0.0)) throw std::invalid_argument("gamma_s must be positive");
  if (obs.empty()) throw std::invalid_argument("observation has no blocks or no rows");
}

}  // namespace

FactorGraph build_factor_graph(const Observation& obs) {
  FactorGraph g;
  g.measurements = obs.rows();
  g.symbols = obs.columns();
  const auto rows = static_cast<std::size_t>(g.measurements);
  const auto cols = static_cast<std::size_t>(g.symbols);
  const std::int8_t* sig = obs.signature.data();
  g.row_start.assign(rows + 1, 0);
  g.symbol_degree.assign(cols, 0);
  // Nonzero pattern is random, so both passes avoid data-dependent branches.
  std::vector<std::uint32_t> row_count(rows, 0);
  for (std::size_t k = 0; k < cols; ++k) {
    const std::int8_t* s = sig + k * rows;
    std::uint32_t deg = 0;
    for (std::size_t mu = 0; mu < rows; ++mu) {
      const std::uint32_t nz = s[mu] != 0;
      row_count[mu] += nz;
      deg += nz;
    }
    g.symbol_degree[k] = deg;
  }
  for (std::size_t mu = 0; mu < rows; ++mu) {
    const double d = row_count[mu];
    g.l2 += d * d;
    g.row_start[mu + 1] = g.row_start[mu] + row_count[mu];
  }
  // one slot of slack: a zero entry is written at the cursor and overwritten
  g.col.resize(g.row_start.back() + 1);
  g.sign.resize(g.row_start.back() + 1);
  for (std::size_t mu = 0; mu < rows; ++mu) {
    std::size_t pos = g.row_start[mu];
    for (std::size_t k = 0; k < cols; ++k) {
      const std::int8_t v = sig[k * rows + mu];
      g.col[pos] = static_cast<std::uint32_t>(k);
      g.sign[pos] = v;
      pos += v != 0;
    }
  }
  g.col.pop_back();
  g.sign.pop_back();
  return g;
}

ComponentGains ComponentGains::from_amplitudes(std::span<const std::complex<double>> amplitudes) {
  ComponentGains g;
  g.real.reserve(amplitudes.size());
  g.imag.reserve(amplitudes.size());
  for (auto a : amplitudes) {
    g.real.push_back(a.real());
    g.imag.push_back(a.imag());
  }
  return g;
}

DecodeOutput decode_bp(const Observation& obs, const BpOptions& options,
                       const ComponentGains& gains) {
  check_decodable(obs);
  if (options.iterations < 1) throw std::invalid_argument("at least one BP iteration required");
  const FactorGraph graph = build_factor_graph(obs);
  if (graph.edges() == 0) throw std::invalid_argument("factor graph has no edges");
  const bool unit_gains = gains.real.empty() && gains.imag.empty();
  if (!unit_gains && (gains.real.size() != static_cast<std::size_t>(obs.blocks()) ||
                      gains.imag.size() != static_cast<std::size_t>(obs.blocks()))) {
    throw std::invalid_argument("one gain per block and part required");
  }

  const auto& kern = kernels::active();
  const int words = obs.block_size();
  const std::size_t edges = graph.edges();
  const auto symbols = static_cast<std::size_t>(graph.symbols);
  const double prior = -std::log(static_cast<double>(words - 1));  // Lambda
  const double half_prior = prior / 2.0;
  const double msg_limit = 1.0 - kBeliefEpsilon;
  // m_hat is kept as its tanh argument; atanh(m_hat) is then that argument
  // clamped to atanh(1 - eps), so atanh is never evaluated.
  const double llr_limit = std::atanh(msg_limit);
  const double noise_term = 4.0 / obs.gamma_s;
  const double inv_sqrt_gs = 1.0 / std::sqrt(obs.gamma_s);
  const double scale = obs.column_scale();

  DecodeOutput out;
  std::vector<double> entry(edges), to_check(edges), to_symbol(edges), total(symbols);
  std::vector<double> rho(static_cast<std::size_t>(graph.measurements));
  std::vector<double> predicted(static_cast<std::size_t>(graph.measurements));

  auto run_part = [&](bool imaginary, std::vector<double>& half_llr) {
    const std::vector<double>* g = unit_gains ? nullptr : (imaginary ? &gains.imag : &gains.real);
    for (std::size_t e = 0; e < edges; ++e) {
      const double gk = g ? (*g)[graph.col[e] / static_cast<std::uint32_t>(words)] : 1.0;
      entry[e] = graph.sign[e] * scale * gk;
    }
    for (int mu = 0; mu < graph.measurements; ++mu) {
      const auto y = obs.received[static_cast<std::size_t>(mu)];
      double row_sum = 0.0;
      for (auto e = graph.row_start[static_cast<std::size_t>(mu)];
           e < graph.row_start[static_cast<std::size_t>(mu) + 1]; ++e) {
        row_sum += entry[e];
      }
      rho[static_cast<std::size_t>(mu)] = 2.0 * inv_sqrt_gs * (imaginary ? y.imag() : y.real()) - row_sum;
    }
    std::fill(to_symbol.begin(), to_symbol.end(), 0.0);
    std::fill(total.begin(), total.end(), half_prior);

    for (int t = 1; t < options.iterations; ++t) {
      // Interference variance seen on an average edge. With unit gains every
      // entry squared is 1/(M_s(1-q)q) and this is L2 (1 - Q^t) / (M_s(1-q)q L).
      double weighted_variance = 0.0;
      for (int mu = 0; mu < graph.measurements; ++mu) {
        const std::size_t b = graph.row_start[static_cast<std::size_t>(mu)];
        const std::size_t n = graph.row_degree(mu);
        const auto stats = kern.gather_row(std::span(graph.col).subspan(b, n),
                                           std::span(entry).subspan(b, n), total,
                                           std::span(to_symbol).subspan(b, n), msg_limit,
                                           std::span(to_check).subspan(b, n));
        predicted[static_cast<std::size_t>(mu)] = stats.weighted_sum;
        weighted_variance += static_cast<double>(n) * stats.residual_variance;
      }
      const double a_t = 1.0 / (noise_term + weighted_variance / static_cast<double>(edges));

      std::fill(total.begin(), total.end(), half_prior);
      for (int mu = 0; mu < graph.measurements; ++mu) {
        const std::size_t b = graph.row_start[static_cast<std::size_t>(mu)];
        const std::size_t n = graph.row_degree(mu);
        kern.check_row(std::span(graph.col).subspan(b, n), std::span(entry).subspan(b, n),
                       std::span(to_check).subspan(b, n),
                       rho[static_cast<std::size_t>(mu)] - predicted[static_cast<std::size_t>(mu)],
                       a_t, llr_limit, std::span(to_symbol).subspan(b, n), total);
      }
      out.edge_updates += 2 * edges;
    }
    half_llr = total;
  };

  run_part(false, out.half_llr_re);
  run_part(true, out.half_llr_im);

  std::vector<double> m_re(symbols), m_im(symbols);
  kern.tanh(out.half_llr_re, m_re);
  kern.tanh(out.half_llr_im, m_im);
  out.scores.resize(symbols);
  for (std::size_t k = 0; k < symbols; ++k) {
    m_re[k] = std::clamp(m_re[k], -msg_limit, msg_limit);
    m_im[k] = std::clamp(m_im[k], -msg_limit, msg_limit);
    // posterior probability that the symbol is on, per part
    const double p_re = 0.5 * (1.0 + m_re[k]);
    const double p_im = 0.5 * (1.0 + m_im[k]);
    out.scores[k] = p_re * p_re + p_im * p_im;
  }

  out.blocks.resize(static_cast<std::size_t>(obs.blocks()));
  for (int b = 0; b < obs.blocks(); ++b) {
    BlockDecision& d = out.blocks[static_cast<std::size_t>(b)];
    d.neighbor_id = obs.block_map[static_cast<std::size_t>(b)];
    const std::size_t first = static_cast<std::size_t>(b) * static_cast<std::size_t>(words);
    d.message = 0;
    d.score = out.scores[first];
    for (int w = 0; w < words; ++w) {
      const std::size_t k = first + static_cast<std::size_t>(w);
      if (out.scores[k] > d.score) {
        d.score = out.scores[k];
        d.message = w;
      }
      d.raw_belief_re = std::max(d.raw_belief_re, std::abs(m_re[k]));
      d.raw_belief_im = std::max(d.raw_belief_im, std::abs(m_im[k]));
    }
    d.heard = d.score >= options.heard_threshold;
  }
  return out;
}

RefinedAmplitudes refine_amplitudes(const Observation& obs, std::span<const int> support) {
  if (support.size() != static_cast<std::size_t>(obs.blocks())) {
    throw std::invalid_argument("one support entry per block required");
  }
  RefinedAmplitudes out;
  out.amplitude.assign(support.size(), {});
  out.fallback.assign(support.size(), false);

  std::vector<int> cols;
  std::vector<std::size_t> owner;
  for (std::size_t b = 0; b < support.size(); ++b) {
    if (support[b] < 0) continue;
    if (support[b] >= obs.block_size()) throw std::out_of_range("support index");
    cols.push_back(static_cast<int>(b) * obs.block_size() + support[b]);
    owner.push_back(b);
  }
  if (cols.empty() || obs.rows() == 0) return out;

  const MatrixXd a = design_matrix(obs, cols);
  ColPivHouseholderQR<MatrixXd> qr(a);
  if (qr.rank() < static_cast<Index>(cols.size())) {
    out.rank_deficient = true;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out.amplitude[owner[c]] = matched_filter(obs, cols[c]);
      out.fallback[owner[c]] = true;
    }
    return out;
  }
  const MatrixXd sol = qr.solve(received_matrix(obs));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.amplitude[owner[c]] = {sol(static_cast<Index>(c), 0), sol(static_cast<Index>(c), 1)};
  }
  return out;
}

Acquisition acquire(const Observation& obs) {
  Acquisition acq;
  const int blocks = obs.blocks();
  acq.support.assign(static_cast<std::size_t>(blocks), -1);
  acq.amplitude.assign(static_cast<std::size_t>(blocks), {});
  if (obs.empty()) return acq;

  const auto& kern = kernels::active();
  const int words = obs.block_size();
  const auto rows = static_cast<std::size_t>(obs.rows());
  std::vector<double> energy(static_cast<std::size_t>(obs.columns()));
  for (int k = 0; k < obs.columns(); ++k) {
    double e = 0.0;
    for (auto v : obs.column(k)) e += v != 0 ? 1.0 : 0.0;
    energy[static_cast<std::size_t>(k)] = e;
  }

  std::vector<double> res_re(rows), res_im(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    res_re[r] = obs.received[r].real();
    res_im[r] = obs.received[r].imag();
  }
  const MatrixXd y = received_matrix(obs);
  std::vector<int> cols;
  std::vector<int> chosen_blocks;

  for (int pick = 0; pick < blocks; ++pick) {
    double best = -1.0;
    int best_col = -1;
    for (int b = 0; b < blocks; ++b) {
      if (acq.support[static_cast<std::size_t>(b)] >= 0) continue;
      for (int w = 0; w < words; ++w) {
        const int k = b * words + w;
        const double e = energy[static_cast<std::size_t>(k)];
        if (e == 0.0) continue;
        const auto d = kern.ternary_dot(obs.column(k), res_re, res_im);
        const double score = (d.re * d.re + d.im * d.im) / e;
        if (score > best) {
          best = score;
          best_col = k;
        }
      }
    }
    if (best_col < 0) break;
    acq.support[static_cast<std::size_t>(best_col / words)] = best_col % words;
    cols.push_back(best_col);
    chosen_blocks.push_back(best_col / words);

    const MatrixXd a = design_matrix(obs, cols);
    const MatrixXd sol = a.colPivHouseholderQr().solve(y);
    const MatrixXd fit = y - a * sol;
    for (std::size_t r = 0; r < rows; ++r) {
      res_re[r] = fit(static_cast<Index>(r), 0);
      res_im[r] = fit(static_cast<Index>(r), 1);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      acq.amplitude[static_cast<std::size_t>(chosen_blocks[c])] = {sol(static_cast<Index>(c), 0),
                                                                   sol(static_cast<Index>(c), 1)};
    }
  }
  return acq;
}

DecodeOutput decode_frame(const Observation& obs, const DecodeOptions& options) {
  if (obs.empty()) return {};
  ComponentGains gains;
  if (options.acquired_gains) {
    const Acquisition acq = acquire(obs);
    gains = ComponentGains::from_amplitudes(acq.amplitude);
  }
  DecodeOutput out = decode_bp(obs, options.bp, gains);
  std::vector<int> support;
  support.reserve(out.blocks.size());
  for (const auto& d : out.blocks) support.push_back(d.message);
  const RefinedAmplitudes refined = refine_amplitudes(obs, support);
  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    out.blocks[b].amplitude = refined.amplitude[b];
    out.blocks[b].amplitude_fallback = refined.fallback[b];
  }
  return out;
}

OracleResult oracle_decode(const Observation& obs) {
  check_decodable(obs);
  const int blocks = obs.blocks();
  const int words = obs.block_size();
  double combos = 1.0;
  for (int b = 0; b < blocks; ++b) combos *= words;
  if (combos > 1e6) throw std::length_error("exhaustive search limited to 10^6 combinations");

  const MatrixXd y = received_matrix(obs);
  std::vector<int> digits(static_cast<std::size_t>(blocks), 0);
  std::vector<int> cols(static_cast<std::size_t>(blocks));
  OracleResult best;
  best.residual = std::numeric_limits<double>::infinity();
  int ties = 0;
  const auto total = static_cast<long>(combos);
  for (long c = 0; c < total; ++c) {
    for (int b = 0; b < blocks; ++b) cols[static_cast<std::size_t>(b)] = b * words + digits[static_cast<std::size_t>(b)];
    const MatrixXd a = design_matrix(obs, cols);
    const MatrixXd sol = a.colPivHouseholderQr().solve(y);
    const double r = (y - a * sol).squaredNorm();
    const double tol = 1e-9 * std::max(1.0, std::min(r, best.residual));
    if (r < best.residual - tol) {
      best.residual = r;
      best.messages = digits;
      best.amplitudes.resize(static_cast<std::size_t>(blocks));
      for (int b = 0; b < blocks; ++b) {
        best.amplitudes[static_cast<std::size_t>(b)] = {sol(b, 0), sol(b, 1)};
      }
      ties = 1;
    } else if (std::abs(r - best.residual) <= tol) {
      ++ties;
    }
    for (int b = blocks - 1; b >= 0; --b) {
      if (++digits[static_cast<std::size_t>(b)] < words) break;
      digits[static_cast<std::size_t>(b)] = 0;
    }
  }
  best.ambiguous = ties > 1;
  return best;
}

}  // namespace rodd
