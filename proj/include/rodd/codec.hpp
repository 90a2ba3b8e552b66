#pragma once
// Coordinate quantization, per-node random on-off codebooks, and the
// block-sparse vector that describes one frame of superposed codewords.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "rodd/geometry.hpp"

namespace rodd {

// 2^bits codewords of `frame_length` symbols in {-1, 0, +1}, drawn i.i.d.
// with P(0) = 1 - q and P(+1) = P(-1) = q/2 from a stream keyed by
// (owner_nia, salt). Any node can regenerate a neighbor's book from its NIA.
class Codebook {
 public:
  Codebook(int owner_nia, int bits, int frame_length, double duty_cycle,
           std::uint64_t salt, std::vector<std::int8_t> entries);

  int owner_nia() const { return owner_nia_; }
  int bits() const { return bits_; }
  int frame_length() const { return frame_length_; }
  double duty_cycle() const { return duty_cycle_; }
  std::uint64_t salt() const { return salt_; }
  int word_count() const { return 1 << bits_; }

  std::span<const std::int8_t> word(int index) const;
  std::int8_t symbol(int index, int slot) const {
    return entries_[static_cast<std::size_t>(index) * frame_length_ + slot];
  }
  const std::vector<std::int8_t>& entries() const { return entries_; }

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  int owner_nia_;
  int bits_;
  int frame_length_;
  double duty_cycle_;
  std::uint64_t salt_;
  std::vector<std::int8_t> entries_;
};

Codebook generate_codebook(int owner_nia, int bits, int frame_length,
                           double duty_cycle, std::uint64_t salt = 0);

struct QuantizedLocation {
  int omega = 0;
  int nu = 0;
  double step = 0.0;
};

// Delta = 2^-bits * A
double quantization_step(double area_side, int bits);

// floor(x / Delta) clamped to [0, 2^bits - 1]
int quantize(double x, double area_side, int bits);

// midpoint of cell `index`
double dequantize(int index, double area_side, int bits);

QuantizedLocation quantize_location(Vec2 z, double area_side, int bits);
Vec2 dequantize_location(const QuantizedLocation& q, double area_side, int bits);

// K blocks of 2^bits entries with at most one nonzero per block.
class SparseVector {
 public:
  SparseVector(int blocks, int bits);

  int blocks() const { return blocks_; }
  int block_size() const { return 1 << bits_; }
  std::size_t size() const { return values_.size(); }

  std::span<const std::complex<double>> values() const { return values_; }
  std::span<const std::complex<double>> block(int i) const;
  std::size_t nonzero_count() const;

  void set(int block, int offset, std::complex<double> value);

 private:
  int blocks_;
  int bits_;
  std::vector<std::complex<double>> values_;
};

// Entry (i, messages[i]) holds amplitudes[i]; messages are zero-based.
// Throws std::out_of_range for an index outside [0, 2^bits).
SparseVector build_sparse_vector(std::span<const int> messages,
                                 std::span<const std::complex<double>> amplitudes,
                                 int bits);

}  // namespace rodd
