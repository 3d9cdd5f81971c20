#include "uqbot/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace uqbot::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void lerp_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vy = vld1q_f64(y + i);
    vst1q_f64(y + i, vfmaq_f64(vy, va, vsubq_f64(vld1q_f64(x + i), vy)));
  }
  for (; i < n; ++i) y[i] += a * (x[i] - y[i]);
}

void lerp_sq_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vx = vld1q_f64(x + i);
    const float64x2_t vy = vld1q_f64(y + i);
    vst1q_f64(y + i, vfmaq_f64(vy, va, vsubq_f64(vmulq_f64(vx, vx), vy)));
  }
  for (; i < n; ++i) {
    const double sq = x[i] * x[i];
    y[i] += a * (sq - y[i]);
  }
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_neon(a + r * cols, x, cols);
}

void gemv_t_neon(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(x[r], a + r * cols, y, cols);
}

void ger_neon(double alpha, const double* u, const double* v, double* a, std::size_t rows,
              std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_neon(alpha * u[r], v, a + r * cols, cols);
}

}  // namespace

const KernelTable* neon_table() noexcept {
  static const KernelTable table{Isa::neon,   dot_neon,  axpy_neon,   lerp_neon,
                                 lerp_sq_neon, gemv_neon, gemv_t_neon, ger_neon};
  return &table;
}

}  // namespace uqbot::kernels

#else

namespace uqbot::kernels {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace uqbot::kernels

#endif
