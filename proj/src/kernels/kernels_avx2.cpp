// Compiled with -mavx2 -mfma. Only raw pointers and intrinsics cross this
// translation unit's boundary so that no inline library code is emitted here
// with AVX encodings and then picked by the linker for the generic build.

#include "hjbpinn/kernels.hpp"

#if defined(HJBPINN_HAVE_AVX2)

#include <immintrin.h>

namespace hjbpinn::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

/// exp(v) for v <= 0; arguments below -700 are clamped.
inline __m256d exp_nonpos(__m256d v) {
  v = _mm256_max_pd(v, _mm256_set1_pd(-700.0));
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(v, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, v);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);
  // Taylor series of e^r, |r| <= ln2/2, through r^13.
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  // 2^n assembled in the exponent field; n is an integer in [-1010, 0].
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
  const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

/// 1 - exp(-u) for u >= 0 without cancellation near zero.
inline __m256d one_minus_exp_neg(__m256d u, __m256d e) {
  // Series u - u^2/2! + u^3/3! - ... through u^13, used for u < 1/4.
  const __m256d nu = _mm256_sub_pd(_mm256_setzero_pd(), u);
  __m256d p = _mm256_set1_pd(-1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 720.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 120.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 24.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0 / 6.0));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-0.5));
  p = _mm256_fmadd_pd(p, nu, _mm256_set1_pd(-1.0));
  const __m256d series = _mm256_mul_pd(p, nu);
  const __m256d direct = _mm256_sub_pd(_mm256_set1_pd(1.0), e);
  const __m256d small = _mm256_cmp_pd(u, _mm256_set1_pd(0.25), _CMP_LT_OQ);
  return _mm256_blendv_pd(direct, series, small);
}

struct Act4 {
  __m256d v, d1, d2, d3;
};

inline Act4 activation4(ActivationKind kind, __m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d ax = abs_pd(x);
  const __m256d sign = _mm256_and_pd(x, _mm256_set1_pd(-0.0));
  if (kind == ActivationKind::Sigmoid) {
    const __m256d e = exp_nonpos(_mm256_sub_pd(_mm256_setzero_pd(), ax));
    const __m256d inv = _mm256_div_pd(one, _mm256_add_pd(one, e));
    const __m256d einv = _mm256_mul_pd(e, inv);
    const __m256d neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
    const __m256d s = _mm256_blendv_pd(inv, einv, neg);
    const __m256d c = _mm256_blendv_pd(einv, inv, neg);
    const __m256d d1 = _mm256_mul_pd(s, c);
    const __m256d d2 = _mm256_mul_pd(d1, _mm256_sub_pd(c, s));
    const __m256d d3 = _mm256_mul_pd(d1, _mm256_fnmadd_pd(_mm256_set1_pd(6.0), d1, one));
    return {s, d1, d2, d3};
  }
  const __m256d u = _mm256_add_pd(ax, ax);
  const __m256d e = exp_nonpos(_mm256_sub_pd(_mm256_setzero_pd(), u));
  const __m256d inv = _mm256_div_pd(one, _mm256_add_pd(one, e));
  const __m256d mag = _mm256_mul_pd(one_minus_exp_neg(u, e), inv);
  const __m256d t = _mm256_or_pd(mag, sign);
  const __m256d d1 = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(4.0), e), _mm256_mul_pd(inv, inv));
  const __m256d d2 = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), t), d1);
  const __m256d d3 = _mm256_mul_pd(d1, _mm256_fmsub_pd(_mm256_set1_pd(6.0), _mm256_mul_pd(t, t), _mm256_set1_pd(2.0)));
  return {t, d1, d2, d3};
}

inline __m256d pre_activation4(const NetView& net, const double* x, __m256d tv, int q) {
  __m256d z = _mm256_mul_pd(_mm256_loadu_pd(net.w2 + q), tv);
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    z = _mm256_fmadd_pd(_mm256_loadu_pd(col + q), _mm256_set1_pd(x[i]), z);
  }
  return z;
}

double value(const NetView& net, const double* x, double t, const Scratch& ws) {
  const __m256d tv = _mm256_set1_pd(t);
  __m256d acc = _mm256_setzero_pd();
  for (int q = 0; q < net.kp; q += kLanes) {
    const __m256d z = pre_activation4(net, x, tv, q);
    const Act4 s = activation4(net.activation, z);
    const __m256d av = _mm256_loadu_pd(net.a + q);
    acc = _mm256_fmadd_pd(av, s.v, acc);
    _mm256_storeu_pd(ws.s1 + q, _mm256_mul_pd(av, s.d1));
  }
  return hsum(acc);
}

void derivs(const NetView& net, const double* x, double t, const Scratch& ws, PointOut& out, double* grad_x) {
  const __m256d tv = _mm256_set1_pd(t);
  __m256d hv = _mm256_setzero_pd(), dtv = _mm256_setzero_pd(), lapv = _mm256_setzero_pd();
  for (int q = 0; q < net.kp; q += kLanes) {
    const __m256d z = pre_activation4(net, x, tv, q);
    const Act4 s = activation4(net.activation, z);
    const __m256d av = _mm256_loadu_pd(net.a + q);
    const __m256d s1 = _mm256_mul_pd(av, s.d1);
    const __m256d s2 = _mm256_mul_pd(av, s.d2);
    _mm256_storeu_pd(ws.s1 + q, s1);
    _mm256_storeu_pd(ws.s2 + q, s2);
    _mm256_storeu_pd(ws.s3 + q, _mm256_mul_pd(av, s.d3));
    hv = _mm256_fmadd_pd(av, s.v, hv);
    dtv = _mm256_fmadd_pd(s1, _mm256_loadu_pd(net.w2 + q), dtv);
    lapv = _mm256_fmadd_pd(s2, _mm256_loadu_pd(net.rowsq + q), lapv);
  }
  for (int i = 0; i < net.n; ++i) {
    const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
    __m256d g = _mm256_setzero_pd();
    for (int q = 0; q < net.kp; q += kLanes) {
      g = _mm256_fmadd_pd(_mm256_loadu_pd(ws.s1 + q), _mm256_loadu_pd(col + q), g);
    }
    grad_x[i] = hsum(g);
  }
  out.value = hsum(hv);
  out.dt = hsum(dtv);
  out.laplacian = hsum(lapv);
}

void backprop_value(const NetView& net, const double* x, double t, const Scratch& ws, double g_value,
                    const GradView& grad) {
  for (int i = 0; i < net.n; ++i) {
    double* gc = grad.gcols + static_cast<std::ptrdiff_t>(i) * net.kp;
    const __m256d c = _mm256_set1_pd(g_value * x[i]);
    for (int q = 0; q < net.kp; q += kLanes) {
      _mm256_storeu_pd(gc + q, _mm256_fmadd_pd(c, _mm256_loadu_pd(ws.s1 + q), _mm256_loadu_pd(gc + q)));
    }
  }
  const __m256d c = _mm256_set1_pd(g_value * t);
  for (int q = 0; q < net.kp; q += kLanes) {
    _mm256_storeu_pd(grad.gw2 + q, _mm256_fmadd_pd(c, _mm256_loadu_pd(ws.s1 + q), _mm256_loadu_pd(grad.gw2 + q)));
  }
}

void backprop(const NetView& net, const double* x, double t, const Scratch& ws, double g_value, double g_dt,
              const double* g_grad_x, double g_laplacian, const GradView& grad) {
  const __m256d gv = _mm256_set1_pd(g_value);
  const __m256d gdt = _mm256_set1_pd(g_dt);
  const __m256d glap = _mm256_set1_pd(g_laplacian);
  const __m256d glap2 = _mm256_set1_pd(2.0 * g_laplacian);
  const __m256d tv = _mm256_set1_pd(t);
  for (int q = 0; q < net.kp; q += kLanes) {
    const __m256d s1 = _mm256_loadu_pd(ws.s1 + q);
    const __m256d s2 = _mm256_loadu_pd(ws.s2 + q);
    const __m256d s3 = _mm256_loadu_pd(ws.s3 + q);
    __m256d dz = _mm256_mul_pd(gv, s1);
    dz = _mm256_fmadd_pd(_mm256_mul_pd(gdt, s2), _mm256_loadu_pd(net.w2 + q), dz);
    dz = _mm256_fmadd_pd(_mm256_mul_pd(glap, s3), _mm256_loadu_pd(net.rowsq + q), dz);
    for (int i = 0; i < net.n; ++i) {
      const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
      dz = _mm256_fmadd_pd(_mm256_mul_pd(s2, _mm256_set1_pd(g_grad_x[i])), _mm256_loadu_pd(col + q), dz);
    }
    for (int i = 0; i < net.n; ++i) {
      const double* col = net.cols + static_cast<std::ptrdiff_t>(i) * net.kp;
      double* gc = grad.gcols + static_cast<std::ptrdiff_t>(i) * net.kp;
      __m256d g = _mm256_loadu_pd(gc + q);
      g = _mm256_fmadd_pd(dz, _mm256_set1_pd(x[i]), g);
      g = _mm256_fmadd_pd(_mm256_set1_pd(g_grad_x[i]), s1, g);
      g = _mm256_fmadd_pd(_mm256_mul_pd(glap2, s2), _mm256_loadu_pd(col + q), g);
      _mm256_storeu_pd(gc + q, g);
    }
    __m256d g2 = _mm256_loadu_pd(grad.gw2 + q);
    g2 = _mm256_fmadd_pd(dz, tv, g2);
    g2 = _mm256_fmadd_pd(gdt, s1, g2);
    _mm256_storeu_pd(grad.gw2 + q, g2);
  }
}

const KernelTable kAvx2Table{"avx2", &value, &derivs, &backprop_value, &backprop};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2Table; }

}  // namespace hjbpinn::kernels

#else

namespace hjbpinn::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace hjbpinn::kernels

#endif
