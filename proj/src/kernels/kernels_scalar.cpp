#include <cmath>
#include <limits>

#include "dagalpha/kernels.hpp"

namespace dagalpha::kernels {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

inline bool either_nan(double a, double b) { return std::isnan(a) || std::isnan(b); }

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void div_guarded(const double* a, const double* b, double eps, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(b[i])) {
      out[i] = kNan;
      continue;
    }
    const double mag = std::fabs(b[i]) > eps ? std::fabs(b[i]) : eps;
    const double den = b[i] >= 0.0 ? mag : -mag;
    out[i] = a[i] / den;
  }
}

void greater(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = either_nan(a[i], b[i]) ? kNan : (a[i] > b[i] ? 1.0 : 0.0);
}

void less(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = either_nan(a[i], b[i]) ? kNan : (a[i] < b[i] ? 1.0 : 0.0);
}

void max(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = either_nan(a[i], b[i]) ? kNan : (a[i] > b[i] ? a[i] : b[i]);
}

void min(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = either_nan(a[i], b[i]) ? kNan : (a[i] < b[i] ? a[i] : b[i]);
}

void abs(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(a[i]);
}

void sign(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(a[i])) {
      out[i] = kNan;
    } else {
      out[i] = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
    }
  }
}

void div_scalar(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / s;
}

void sub_scalar(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - s;
}

void acc_add(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void acc_add_scaled(double* acc, const double* x, double w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += w * x[i];
}

void acc_sq_dev(double* acc, const double* x, const double* m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m[i];
    acc[i] += d * d;
  }
}

void acc_cross_dev(double* acc, const double* x, const double* mx, const double* y, const double* my,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += (x[i] - mx[i]) * (y[i] - my[i]);
}

void acc_dev_moments(double* acc2, double* acc3, double* acc4, const double* x, const double* m,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m[i];
    const double d2 = d * d;
    acc2[i] += d2;
    acc3[i] += d2 * d;
    acc4[i] += d2 * d2;
  }
}

void sanitize(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isinf(x[i])) x[i] = kNan;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar, add,        sub,        mul,     div_guarded,    greater,
      less,        max,        min,        abs,     sign,           div_scalar,
      sub_scalar,  acc_add,    acc_add_scaled, acc_sq_dev, acc_cross_dev, acc_dev_moments,
      sanitize,
  };
  return table;
}

}  // namespace dagalpha::kernels
