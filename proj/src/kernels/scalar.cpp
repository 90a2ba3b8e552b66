#include "rodd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace rodd::kernels {
namespace {

RowStats gather_row(std::span<const std::uint32_t> col, std::span<const double> entry,
                    std::span<const double> total, std::span<const double> inbound,
                    double limit, std::span<double> out) {
  RowStats s;
  for (std::size_t e = 0; e < col.size(); ++e) {
    const double m = std::clamp(std::tanh(total[col[e]] - inbound[e]), -limit, limit);
    out[e] = m;
    s.weighted_sum += entry[e] * m;
    s.residual_variance += entry[e] * entry[e] * (1.0 - m * m);
  }
  return s;
}

void check_row(std::span<const std::uint32_t> col, std::span<const double> entry,
               std::span<const double> msg, double residual, double scale, double limit,
               std::span<double> out, std::span<double> total) {
  for (std::size_t e = 0; e < col.size(); ++e) {
    const double v = std::clamp(scale * entry[e] * (residual + entry[e] * msg[e]), -limit, limit);
    out[e] = v;
    total[col[e]] += v;
  }
}

void tanh_all(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
}

void ternary_axpy(std::span<const std::int8_t> s, double coef_re,
                  double coef_im, std::span<double> re, std::span<double> im) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s[i];
    re[i] += coef_re * v;
    im[i] += coef_im * v;
  }
}

DotResult ternary_dot(std::span<const std::int8_t> s, std::span<const double> re,
                      std::span<const double> im) {
  DotResult d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s[i];
    d.re += v * re[i];
    d.im += v * im[i];
  }
  return d;
}

const KernelTable kScalar{
    "scalar", gather_row, check_row, tanh_all, ternary_axpy, ternary_dot,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace rodd::kernels
