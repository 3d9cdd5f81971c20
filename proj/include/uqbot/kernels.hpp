#pragma once

// Dense double-precision kernels used by the recurrent network, the SGD
// updates and the SWAG moment accumulation. Each kernel has a portable scalar
// reference and, where the CPU supports it, an AVX2+FMA (x86-64) or NEON
// (aarch64) variant. The variant is chosen once at startup; setting the
// environment variable UQBOT_KERNELS=scalar forces the reference path.

#include <cassert>
#include <cstddef>
#include <span>
#include <string_view>

namespace uqbot::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y += a * (x - y); exact fixed point when x == y
  void (*lerp)(double a, const double* x, double* y, std::size_t n);
  // y += a * (x * x - y), with x * x rounded before the subtraction
  void (*lerp_sq)(double a, const double* x, double* y, std::size_t n);
  // y += A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x, A row-major rows x cols
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * u v^T, A row-major rows x cols
  void (*ger)(double alpha, const double* u, const double* v, double* a, std::size_t rows,
              std::size_t cols);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

// Best table supported by the running CPU, honoring UQBOT_KERNELS.
const KernelTable& active() noexcept;

// Overrides the active table (tests and benchmarks). Returns false and leaves
// the selection unchanged if `isa` is unavailable.
bool select(Isa isa) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(a, x.data(), y.data(), x.size());
}

inline void lerp(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().lerp(a, x.data(), y.data(), x.size());
}

inline void lerp_sq(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().lerp_sq(a, x.data(), y.data(), x.size());
}

inline void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  active().gemv(a.data(), rows, cols, x.data(), y.data());
}

inline void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == rows && y.size() == cols);
  active().gemv_t(a.data(), rows, cols, x.data(), y.data());
}

inline void ger(double alpha, std::span<const double> u, std::span<const double> v,
                std::span<double> a) {
  assert(a.size() == u.size() * v.size());
  active().ger(alpha, u.data(), v.data(), a.data(), u.size(), v.size());
}

}  // namespace uqbot::kernels
