#pragma once
// Data-parallel inner loops shared by the channel synthesizer and the
// message-passing decoder. Every kernel has a scalar reference
// implementation; vectorized variants must agree with it to within a few
// ulps and are selected once at runtime.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rodd::kernels {

struct RowStats {
  double weighted_sum = 0.0;       // sum of entry * msg
  double residual_variance = 0.0;  // sum of entry^2 * (1 - msg^2)
};

struct DotResult {
  double re = 0.0;
  double im = 0.0;
};

struct KernelTable {
  std::string_view name;

  // One measurement row, symbol-to-check direction:
  //   out[e] = clamp(tanh(total[col[e]] - inbound[e]), -limit, limit)
  // and the row statistics of entry against out.
  RowStats (*gather_row)(std::span<const std::uint32_t> col,
                         std::span<const double> entry,
                         std::span<const double> total,
                         std::span<const double> inbound, double limit,
                         std::span<double> out);

  // One measurement row, check-to-symbol direction:
  //   out[e] = clamp(scale * entry[e] * (residual + entry[e] * msg[e]),
  //                  -limit, limit)
  // then total[col[e]] += out[e] in edge order.
  void (*check_row)(std::span<const std::uint32_t> col,
                    std::span<const double> entry, std::span<const double> msg,
                    double residual, double scale, double limit,
                    std::span<double> out, std::span<double> total);

  void (*tanh)(std::span<const double> in, std::span<double> out);

  // re += coef_re * s, im += coef_im * s for ternary s
  void (*ternary_axpy)(std::span<const std::int8_t> s, double coef_re,
                       double coef_im, std::span<double> re,
                       std::span<double> im);

  // (sum s*re, sum s*im)
  DotResult (*ternary_dot)(std::span<const std::int8_t> s,
                           std::span<const double> re,
                           std::span<const double> im);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();

// The table used by the library. Chosen on first use: RODD_KERNEL=scalar
// or RODD_KERNEL=avx2 forces a variant, otherwise the widest supported one.
const KernelTable& active();

// Overrides the active table; returns false if `name` is unavailable.
bool select(std::string_view name);

}  // namespace rodd::kernels
