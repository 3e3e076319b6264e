#include <immintrin.h>

#include "dagalpha/kernels.hpp"

// Compiled with -mavx2 only; reached through avx2_table() after a CPU check.

namespace dagalpha::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256d nan_v() { return _mm256_set1_pd(__builtin_nan("")); }
inline __m256d abs_v(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }
inline __m256d unord(__m256d a, __m256d b) { return _mm256_cmp_pd(a, b, _CMP_UNORD_Q); }

template <class Vec, class Scalar>
inline void binary_loop(const double* a, const double* b, double* out, std::size_t n, Vec vec,
                        Scalar scalar) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, vec(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = scalar(a[i], b[i]);
}

template <class Vec, class Scalar>
inline void unary_loop(const double* a, double* out, std::size_t n, Vec vec, Scalar scalar) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(out + i, vec(_mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = scalar(a[i]);
}

inline bool is_nan(double x) { return x != x; }

void add(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
              [](double x, double y) { return x + y; });
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
              [](double x, double y) { return x - y; });
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
              [](double x, double y) { return x * y; });
}

void div_guarded(const double* a, const double* b, double eps, double* out, std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(a + i);
    const __m256d y = _mm256_loadu_pd(b + i);
    const __m256d ay = abs_v(y);
    const __m256d mag = _mm256_blendv_pd(veps, ay, _mm256_cmp_pd(ay, veps, _CMP_GT_OQ));
    const __m256d neg = _mm256_sub_pd(zero, mag);
    const __m256d den = _mm256_blendv_pd(neg, mag, _mm256_cmp_pd(y, zero, _CMP_GE_OQ));
    const __m256d q = _mm256_div_pd(x, den);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(q, nan_v(), unord(y, y)));
  }
  for (; i < n; ++i) {
    if (is_nan(b[i])) {
      out[i] = __builtin_nan("");
      continue;
    }
    const double ab = b[i] < 0.0 ? -b[i] : b[i];
    const double mag = ab > eps ? ab : eps;
    out[i] = a[i] / (b[i] >= 0.0 ? mag : -mag);
  }
}

template <int Cmp>
inline __m256d indicator(__m256d x, __m256d y) {
  const __m256d r = _mm256_and_pd(_mm256_cmp_pd(x, y, Cmp), _mm256_set1_pd(1.0));
  return _mm256_blendv_pd(r, nan_v(), unord(x, y));
}

void greater(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(a, b, out, n, indicator<_CMP_GT_OQ>, [](double x, double y) {
    return (is_nan(x) || is_nan(y)) ? __builtin_nan("") : (x > y ? 1.0 : 0.0);
  });
}

void less(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(a, b, out, n, indicator<_CMP_LT_OQ>, [](double x, double y) {
    return (is_nan(x) || is_nan(y)) ? __builtin_nan("") : (x < y ? 1.0 : 0.0);
  });
}

void max(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(
      a, b, out, n,
      [](__m256d x, __m256d y) { return _mm256_blendv_pd(_mm256_max_pd(x, y), nan_v(), unord(x, y)); },
      [](double x, double y) { return (is_nan(x) || is_nan(y)) ? __builtin_nan("") : (x > y ? x : y); });
}

void min(const double* a, const double* b, double* out, std::size_t n) {
  binary_loop(
      a, b, out, n,
      [](__m256d x, __m256d y) { return _mm256_blendv_pd(_mm256_min_pd(x, y), nan_v(), unord(x, y)); },
      [](double x, double y) { return (is_nan(x) || is_nan(y)) ? __builtin_nan("") : (x < y ? x : y); });
}

void abs(const double* a, double* out, std::size_t n) {
  unary_loop(a, out, n, abs_v, [](double x) { return __builtin_fabs(x); });
}

void sign(const double* a, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  unary_loop(
      a, out, n,
      [zero](__m256d x) {
        const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GT_OQ), _mm256_set1_pd(1.0));
        const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_LT_OQ), _mm256_set1_pd(-1.0));
        return _mm256_blendv_pd(_mm256_or_pd(pos, neg), nan_v(), unord(x, x));
      },
      [](double x) { return is_nan(x) ? __builtin_nan("") : (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0)); });
}

void div_scalar(const double* a, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  unary_loop(a, out, n, [vs](__m256d x) { return _mm256_div_pd(x, vs); },
             [s](double x) { return x / s; });
}

void sub_scalar(const double* a, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  unary_loop(a, out, n, [vs](__m256d x) { return _mm256_sub_pd(x, vs); },
             [s](double x) { return x - s; });
}

void acc_add(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void acc_add_scaled(double* acc, const double* x, double w, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = _mm256_mul_pd(vw, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), p));
  }
  for (; i < n; ++i) acc[i] += w * x[i];
}

void acc_sq_dev(double* acc, const double* x, const double* m, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(d, d)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - m[i];
    acc[i] += d * d;
  }
}

void acc_cross_dev(double* acc, const double* x, const double* mx, const double* y, const double* my,
                   std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(mx + i));
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(my + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(dx, dy)));
  }
  for (; i < n; ++i) acc[i] += (x[i] - mx[i]) * (y[i] - my[i]);
}

void acc_dev_moments(double* acc2, double* acc3, double* acc4, const double* x, const double* m,
                     std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i));
    const __m256d d2 = _mm256_mul_pd(d, d);
    _mm256_storeu_pd(acc2 + i, _mm256_add_pd(_mm256_loadu_pd(acc2 + i), d2));
    _mm256_storeu_pd(acc3 + i, _mm256_add_pd(_mm256_loadu_pd(acc3 + i), _mm256_mul_pd(d2, d)));
    _mm256_storeu_pd(acc4 + i, _mm256_add_pd(_mm256_loadu_pd(acc4 + i), _mm256_mul_pd(d2, d2)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - m[i];
    const double d2 = d * d;
    acc2[i] += d2;
    acc3[i] += d2 * d;
    acc4[i] += d2 * d2;
  }
}

void sanitize(double* x, std::size_t n) {
  const __m256d inf = _mm256_set1_pd(__builtin_inf());
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d is_inf = _mm256_cmp_pd(abs_v(v), inf, _CMP_EQ_OQ);
    _mm256_storeu_pd(x + i, _mm256_blendv_pd(v, nan_v(), is_inf));
  }
  for (; i < n; ++i) {
    if (__builtin_isinf(x[i])) x[i] = __builtin_nan("");
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{
      Isa::avx2,   add,        sub,        mul,     div_guarded,    greater,
      less,        max,        min,        abs,     sign,           div_scalar,
      sub_scalar,  acc_add,    acc_add_scaled, acc_sq_dev, acc_cross_dev, acc_dev_moments,
      sanitize,
  };
  return t;
}

}  // namespace dagalpha::kernels::avx2
