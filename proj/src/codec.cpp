#include "rodd/codec.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rodd/random.hpp"

namespace rodd {
namespace {

void check_book_params(int bits, int frame_length, double duty_cycle) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("bits per coordinate must be in [1, 16]");
  if (frame_length < 1) throw std::invalid_argument("frame length must be positive");
  if (!(duty_cycle > 0.0 && duty_cycle < 1.0)) {
    throw std::invalid_argument("duty cycle must lie in (0, 1)");
  }
}

}  // namespace

Codebook::Codebook(int owner_nia, int bits, int frame_length, double duty_cycle,
                   std::uint64_t salt, std::vector<std::int8_t> entries)
    : owner_nia_(owner_nia),
      bits_(bits),
      frame_length_(frame_length),
      duty_cycle_(duty_cycle),
      salt_(salt),
      entries_(std::move(entries)) {
  check_book_params(bits, frame_length, duty_cycle);
  if (entries_.size() != static_cast<std::size_t>(word_count()) * frame_length_) {
    throw std::invalid_argument("codebook entry count does not match 2^bits x frame length");
  }
}

std::span<const std::int8_t> Codebook::word(int index) const {
  if (index < 0 || index >= word_count()) throw std::out_of_range("codeword index");
  return std::span(entries_).subspan(static_cast<std::size_t>(index) * frame_length_,
                                     static_cast<std::size_t>(frame_length_));
}

Codebook generate_codebook(int owner_nia, int bits, int frame_length, double duty_cycle,
                           std::uint64_t salt) {
  check_book_params(bits, frame_length, duty_cycle);
  auto rng = keyed_engine({static_cast<std::uint64_t>(Stream::codebook),
                           static_cast<std::uint64_t>(owner_nia), salt});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::int8_t> entries(static_cast<std::size_t>(1 << bits) * frame_length);
  const double half = duty_cycle / 2.0;
  for (auto& e : entries) {
    const double u = unit(rng);
    e = u < half ? std::int8_t{1} : (u < duty_cycle ? std::int8_t{-1} : std::int8_t{0});
  }
  return Codebook(owner_nia, bits, frame_length, duty_cycle, salt, std::move(entries));
}

double quantization_step(double area_side, int bits) { return std::ldexp(area_side, -bits); }

int quantize(double x, double area_side, int bits) {
  const int top = (1 << bits) - 1;
  const double cell = std::floor(x / quantization_step(area_side, bits));
  if (!(cell >= 0.0)) return 0;  // also catches NaN
  if (cell >= top) return top;
  return static_cast<int>(cell);
}

double dequantize(int index, double area_side, int bits) {
  return (index + 0.5) * quantization_step(area_side, bits);
}

QuantizedLocation quantize_location(Vec2 z, double area_side, int bits) {
  return {quantize(z.x, area_side, bits), quantize(z.y, area_side, bits),
          quantization_step(area_side, bits)};
}

Vec2 dequantize_location(const QuantizedLocation& q, double area_side, int bits) {
  return {dequantize(q.omega, area_side, bits), dequantize(q.nu, area_side, bits)};
}

SparseVector::SparseVector(int blocks, int bits)
    : blocks_(blocks),
      bits_(bits),
      values_(static_cast<std::size_t>(blocks) << bits) {}

std::span<const std::complex<double>> SparseVector::block(int i) const {
  return std::span(values_).subspan(static_cast<std::size_t>(i) << bits_,
                                    static_cast<std::size_t>(block_size()));
}

std::size_t SparseVector::nonzero_count() const {
  return static_cast<std::size_t>(std::count_if(
      values_.begin(), values_.end(), [](std::complex<double> v) { return v != 0.0; }));
}

void SparseVector::set(int block, int offset, std::complex<double> value) {
  if (block < 0 || block >= blocks_) throw std::out_of_range("block index");
  if (offset < 0 || offset >= block_size()) throw std::out_of_range("message index");
  auto first = values_.begin() + (static_cast<std::ptrdiff_t>(block) << bits_);
  std::fill(first, first + block_size(), std::complex<double>{});
  first[offset] = value;
}

SparseVector build_sparse_vector(std::span<const int> messages,
                                 std::span<const std::complex<double>> amplitudes, int bits) {
  if (messages.size() != amplitudes.size()) {
    throw std::invalid_argument("one amplitude per message required");
  }
  SparseVector x(static_cast<int>(messages.size()), bits);
  for (std::size_t i = 0; i < messages.size(); ++i) {
    x.set(static_cast<int>(i), messages[i], amplitudes[i]);
  }
  return x;
}

}  // namespace rodd
