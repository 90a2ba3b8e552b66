#include "rodd/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "rodd/kernels.hpp"
#include "rodd/random.hpp"

namespace rodd {

double Observation::column_scale() const {
  return 1.0 / std::sqrt(frame_length * (1.0 - duty_cycle) * duty_cycle);
}

double effective_snr(double nominal_snr, int frame_length, double duty_cycle, double sigma2) {
  return nominal_snr * frame_length * (1.0 - duty_cycle) * duty_cycle / sigma2;
}

Observation observe(const Network& net, std::span<const Codebook> books, int receiver,
                    const FrameTraffic& traffic, const ChannelParams& params,
                    const NoiseKey& key) {
  if (books.size() != net.size()) throw std::invalid_argument("one codebook per node required");
  if (traffic.transmitting.size() != net.size() || traffic.message.size() != net.size()) {
    throw std::invalid_argument("traffic must cover every node");
  }
  if (!(params.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");

  const Codebook& own = books[static_cast<std::size_t>(receiver)];
  Observation obs;
  obs.receiver_id = receiver;
  obs.bits = own.bits();
  obs.frame_length = own.frame_length();
  obs.duty_cycle = own.duty_cycle();
  obs.gamma_s = effective_snr(params.nominal_snr, obs.frame_length, obs.duty_cycle, params.sigma2);

  if (traffic.transmitting[static_cast<std::size_t>(receiver)]) {
    const auto word = own.word(traffic.message[static_cast<std::size_t>(receiver)]);
    for (int m = 0; m < obs.frame_length; ++m) {
      if (word[static_cast<std::size_t>(m)] == 0) obs.visible_rows.push_back(m);
    }
  } else {
    obs.visible_rows.resize(static_cast<std::size_t>(obs.frame_length));
    for (int m = 0; m < obs.frame_length; ++m) obs.visible_rows[static_cast<std::size_t>(m)] = m;
  }

  const auto neighbors = net.neighbors(receiver);
  obs.block_map.assign(neighbors.begin(), neighbors.end());
  const std::size_t rows = obs.visible_rows.size();
  const int words = obs.block_size();
  obs.signature.resize(rows * static_cast<std::size_t>(obs.columns()));
  for (int b = 0; b < obs.blocks(); ++b) {
    const Codebook& book = books[static_cast<std::size_t>(obs.block_map[static_cast<std::size_t>(b)])];
    if (book.bits() != obs.bits || book.frame_length() != obs.frame_length) {
      throw std::invalid_argument("all codebooks must share bits and frame length");
    }
    for (int w = 0; w < words; ++w) {
      const auto word = book.word(w);
      std::int8_t* dst = obs.signature.data() + static_cast<std::size_t>(b * words + w) * rows;
      for (std::size_t r = 0; r < rows; ++r) dst[r] = word[static_cast<std::size_t>(obs.visible_rows[r])];
    }
  }

  const auto& k = kernels::active();
  std::vector<double> re(rows, 0.0), im(rows, 0.0);
  const double sigma = std::sqrt(params.sigma2);
  const double amp = std::sqrt(params.nominal_snr) / sigma;

  for (int b = 0; b < obs.blocks(); ++b) {
    const int nb = obs.block_map[static_cast<std::size_t>(b)];
    if (!traffic.transmitting[static_cast<std::size_t>(nb)]) continue;
    const std::complex<double> coef = amp * channel_coefficient(net, receiver, nb);
    const int col = b * words + traffic.message[static_cast<std::size_t>(nb)];
    k.ternary_axpy(obs.column(col), coef.real(), coef.imag(), re, im);
  }

  auto rng = keyed_engine({static_cast<std::uint64_t>(Stream::noise), key.run_seed, key.iteration,
                           key.frame, static_cast<std::uint64_t>(receiver)});
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  if (params.mode == NoiseMode::analytic) {
    // CN(0, sigma^2) scaled by 1/sigma
    for (std::size_t r = 0; r < rows; ++r) {
      re[r] += gauss(rng);
      im[r] += gauss(rng);
    }
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      re[r] += gauss(rng) / sigma;
      im[r] += gauss(rng) / sigma;
    }
    std::vector<std::int8_t> gathered(rows);
    for (std::size_t j = 0; j < net.size(); ++j) {
      const int other = static_cast<int>(j);
      if (other == receiver || !traffic.transmitting[j]) continue;
      if (net.are_neighbors(receiver, other)) continue;
      const auto word = books[j].word(traffic.message[j]);
      for (std::size_t r = 0; r < rows; ++r) gathered[r] = word[static_cast<std::size_t>(obs.visible_rows[r])];
      const std::complex<double> coef = amp * channel_coefficient(net, receiver, other);
      k.ternary_axpy(gathered, coef.real(), coef.imag(), re, im);
    }
  }

  obs.received.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) obs.received[r] = {re[r], im[r]};
  return obs;
}

Observation synthesize(std::span<const Codebook> books, std::span<const int> messages,
                       std::span<const std::complex<double>> amplitudes, double gamma_s,
                       double noise_scale, std::mt19937_64& rng) {
  if (books.empty()) throw std::invalid_argument("synthesize needs at least one codebook");
  if (messages.size() != books.size() || amplitudes.size() != books.size()) {
    throw std::invalid_argument("one message and amplitude per codebook required");
  }
  Observation obs;
  obs.bits = books[0].bits();
  obs.frame_length = books[0].frame_length();
  obs.duty_cycle = books[0].duty_cycle();
  obs.gamma_s = gamma_s;
  const auto rows = static_cast<std::size_t>(obs.frame_length);
  obs.visible_rows.resize(rows);
  for (std::size_t m = 0; m < rows; ++m) obs.visible_rows[m] = static_cast<int>(m);
  const int words = obs.block_size();
  obs.signature.reserve(rows * books.size() * static_cast<std::size_t>(words));
  for (std::size_t b = 0; b < books.size(); ++b) {
    if (books[b].bits() != obs.bits || books[b].frame_length() != obs.frame_length) {
      throw std::invalid_argument("all codebooks must share bits and frame length");
    }
    obs.block_map.push_back(books[b].owner_nia());
    obs.signature.insert(obs.signature.end(), books[b].entries().begin(), books[b].entries().end());
  }
  const auto& k = kernels::active();
  std::vector<double> re(rows, 0.0), im(rows, 0.0);
  const double amp = std::sqrt(gamma_s) * obs.column_scale();
  for (std::size_t b = 0; b < books.size(); ++b) {
    if (messages[b] < 0) continue;
    const std::complex<double> coef = amp * amplitudes[b];
    k.ternary_axpy(obs.column(static_cast<int>(b) * words + messages[b]), coef.real(), coef.imag(), re, im);
  }
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  obs.received.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double nr = gauss(rng);
    const double ni = gauss(rng);
    obs.received[r] = {re[r] + noise_scale * nr, im[r] + noise_scale * ni};
  }
  return obs;
}

}  // namespace rodd
