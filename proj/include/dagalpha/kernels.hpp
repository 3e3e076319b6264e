#pragma once

#include <cstddef>
#include <string_view>

// Row kernels over contiguous runs of doubles (one date's cross-section).
// Every variant must produce bit-identical results to the scalar reference:
// lanes are independent and each lane performs the same IEEE operations in
// the same order. Non-finite results are the caller's business; see sanitize.

namespace dagalpha::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // out = f(a, b). NaN in either input yields NaN.
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  /// a / (sign(b) * max(|b|, eps)), sign(0) = +1.
  void (*div_guarded)(const double* a, const double* b, double eps, double* out, std::size_t n);
  void (*greater)(const double* a, const double* b, double* out, std::size_t n);
  void (*less)(const double* a, const double* b, double* out, std::size_t n);
  void (*max)(const double* a, const double* b, double* out, std::size_t n);
  void (*min)(const double* a, const double* b, double* out, std::size_t n);

  void (*abs)(const double* a, double* out, std::size_t n);
  void (*sign)(const double* a, double* out, std::size_t n);
  /// out = a / s
  void (*div_scalar)(const double* a, double s, double* out, std::size_t n);
  /// out = a - s
  void (*sub_scalar)(const double* a, double s, double* out, std::size_t n);

  // Window accumulators; acc is updated in place.
  /// acc += x
  void (*acc_add)(double* acc, const double* x, std::size_t n);
  /// acc += w * x
  void (*acc_add_scaled)(double* acc, const double* x, double w, std::size_t n);
  /// acc += (x - m)^2
  void (*acc_sq_dev)(double* acc, const double* x, const double* m, std::size_t n);
  /// acc += (x - mx) * (y - my)
  void (*acc_cross_dev)(double* acc, const double* x, const double* mx, const double* y,
                        const double* my, std::size_t n);
  /// d = x - m; acc2 += d*d; acc3 += (d*d)*d; acc4 += (d*d)*(d*d)
  void (*acc_dev_moments)(double* acc2, double* acc3, double* acc4, const double* x,
                          const double* m, std::size_t n);

  /// Replaces +-inf with NaN.
  void (*sanitize)(double* x, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// The table chosen at startup: AVX2 when supported, unless the environment
/// variable DAGALPHA_ISA=scalar forces the reference kernels.
const KernelTable& active();
/// Overrides the active table (tests and benchmarks). Returns false if the
/// requested ISA is unavailable.
bool set_active(Isa isa);

}  // namespace dagalpha::kernels
