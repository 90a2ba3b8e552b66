// AVX2 + FMA variants. Functions carry a target attribute instead of the
// whole translation unit being built with -mavx2, so nothing here can leak
// AVX2 encodings into inline functions shared with the scalar path.

#include "rodd/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define RODD_HAVE_AVX2_VARIANT 1
#include <immintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <cstring>

namespace rodd::kernels {

#ifdef RODD_HAVE_AVX2_VARIANT
namespace {

#define RODD_AVX2 __attribute__((target("avx2,fma")))

// tanh(x) for any x. With 2|x| (clipped at 44) = n ln2 + r, the Cephes exp
// rational gives e^r = (q + p) / (q - p), so
//   tanh|x| = (2^n (q + p) - (q - p)) / (2^n (q + p) + (q - p)),
// one division and no cancellation near zero.
RODD_AVX2 inline __m256d tanh_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d sign = _mm256_and_pd(sign_mask, x);
  __m256d ax = _mm256_andnot_pd(sign_mask, x);
  ax = _mm256_min_pd(ax, _mm256_set1_pd(22.0));
  const __m256d y = _mm256_add_pd(ax, ax);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(y, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, y);
  r = _mm256_fnmadd_pd(n, c2, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

  // 2^n through the exponent field, n in [0, 64]
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  __m256i ni = _mm256_castpd_si256(_mm256_add_pd(n, magic));
  ni = _mm256_sub_epi64(ni, _mm256_castpd_si256(magic));
  const __m256d pow2 = _mm256_castsi256_pd(
      _mm256_add_epi64(_mm256_slli_epi64(ni, 52), _mm256_castpd_si256(_mm256_set1_pd(1.0))));

  const __m256d up = _mm256_mul_pd(pow2, _mm256_add_pd(q, p));
  const __m256d down = _mm256_sub_pd(q, p);
  const __m256d t = _mm256_div_pd(_mm256_sub_pd(up, down), _mm256_add_pd(up, down));
  return _mm256_or_pd(t, sign);
}

RODD_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

RODD_AVX2 inline __m256d load_ternary(const std::int8_t* p) {
  std::int32_t packed;
  std::memcpy(&packed, p, sizeof(packed));
  return _mm256_cvtepi32_pd(_mm_cvtepi8_epi32(_mm_cvtsi32_si128(packed)));
}

// scalar tail helper matching the vector lanes
RODD_AVX2 double tanh_one(double x) {
  double buf[4] = {x, 0.0, 0.0, 0.0};
  _mm256_storeu_pd(buf, tanh_pd(_mm256_loadu_pd(buf)));
  return buf[0];
}

RODD_AVX2 RowStats gather_row(std::span<const std::uint32_t> col,
                              std::span<const double> entry,
                              std::span<const double> total,
                              std::span<const double> inbound, double limit,
                              std::span<double> out) {
  const std::size_t n = col.size();
  const __m256d hi = _mm256_set1_pd(limit);
  const __m256d lo = _mm256_set1_pd(-limit);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d ws = _mm256_setzero_pd();
  __m256d rv = _mm256_setzero_pd();
  std::size_t e = 0;
  for (; e + 4 <= n; e += 4) {
    const __m128i idx =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(col.data() + e));
    const __m256d t = _mm256_i32gather_pd(total.data(), idx, 8);
    __m256d m = tanh_pd(_mm256_sub_pd(t, _mm256_loadu_pd(inbound.data() + e)));
    m = _mm256_max_pd(_mm256_min_pd(m, hi), lo);
    _mm256_storeu_pd(out.data() + e, m);
    const __m256d s = _mm256_loadu_pd(entry.data() + e);
    ws = _mm256_fmadd_pd(s, m, ws);
    rv = _mm256_fmadd_pd(_mm256_mul_pd(s, s), _mm256_fnmadd_pd(m, m, one), rv);
  }
  RowStats r{hsum(ws), hsum(rv)};
  for (; e < n; ++e) {
    const double m = std::clamp(tanh_one(total[col[e]] - inbound[e]), -limit, limit);
    out[e] = m;
    r.weighted_sum += entry[e] * m;
    r.residual_variance += entry[e] * entry[e] * (1.0 - m * m);
  }
  return r;
}

RODD_AVX2 void check_row(std::span<const std::uint32_t> col,
                         std::span<const double> entry,
                         std::span<const double> msg, double residual,
                         double scale, double limit, std::span<double> out,
                         std::span<double> total) {
  const std::size_t n = col.size();
  const __m256d res = _mm256_set1_pd(residual);
  const __m256d sc = _mm256_set1_pd(scale);
  const __m256d hi = _mm256_set1_pd(limit);
  const __m256d lo = _mm256_set1_pd(-limit);
  std::size_t e = 0;
  for (; e + 4 <= n; e += 4) {
    const __m256d s = _mm256_loadu_pd(entry.data() + e);
    const __m256d m = _mm256_loadu_pd(msg.data() + e);
    __m256d v = _mm256_mul_pd(_mm256_mul_pd(sc, s), _mm256_fmadd_pd(s, m, res));
    v = _mm256_max_pd(_mm256_min_pd(v, hi), lo);
    _mm256_storeu_pd(out.data() + e, v);
    // no scatter in AVX2; lanes are added in edge order
    total[col[e]] += out[e];
    total[col[e + 1]] += out[e + 1];
    total[col[e + 2]] += out[e + 2];
    total[col[e + 3]] += out[e + 3];
  }
  for (; e < n; ++e) {
    const double v = std::clamp(scale * entry[e] * (residual + entry[e] * msg[e]), -limit, limit);
    out[e] = v;
    total[col[e]] += v;
  }
}

RODD_AVX2 void tanh_all(std::span<const double> in, std::span<double> out) {
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, tanh_pd(_mm256_loadu_pd(in.data() + i)));
  }
  for (; i < n; ++i) out[i] = tanh_one(in[i]);
}

RODD_AVX2 void ternary_axpy(std::span<const std::int8_t> s, double coef_re,
                            double coef_im, std::span<double> re,
                            std::span<double> im) {
  const std::size_t n = s.size();
  const __m256d cr = _mm256_set1_pd(coef_re);
  const __m256d ci = _mm256_set1_pd(coef_im);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = load_ternary(s.data() + i);
    _mm256_storeu_pd(re.data() + i,
                     _mm256_fmadd_pd(cr, v, _mm256_loadu_pd(re.data() + i)));
    _mm256_storeu_pd(im.data() + i,
                     _mm256_fmadd_pd(ci, v, _mm256_loadu_pd(im.data() + i)));
  }
  for (; i < n; ++i) {
    const double v = s[i];
    re[i] += coef_re * v;
    im[i] += coef_im * v;
  }
}

RODD_AVX2 DotResult ternary_dot(std::span<const std::int8_t> s,
                                std::span<const double> re,
                                std::span<const double> im) {
  const std::size_t n = s.size();
  __m256d ar = _mm256_setzero_pd();
  __m256d ai = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = load_ternary(s.data() + i);
    ar = _mm256_fmadd_pd(v, _mm256_loadu_pd(re.data() + i), ar);
    ai = _mm256_fmadd_pd(v, _mm256_loadu_pd(im.data() + i), ai);
  }
  DotResult d{hsum(ar), hsum(ai)};
  for (; i < n; ++i) {
    const double v = s[i];
    d.re += v * re[i];
    d.im += v * im[i];
  }
  return d;
}

const KernelTable kAvx2{
    "avx2", gather_row, check_row, tanh_all, ternary_axpy, ternary_dot,
};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace rodd::kernels
