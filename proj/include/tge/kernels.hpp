#pragma once

#include <cstddef>

// Data-parallel inner loops behind everything numeric. Each operation has a
// scalar reference implementation and (on x86-64) an AVX2 variant; the active
// set is selected once at startup from cpuid, overridable with
// TGE_KERNEL=scalar|avx2 or force_isa() for equivalence tests.
namespace tge::kern {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);
const char* isa_name(Isa isa);
bool cpu_has_avx2();

namespace detail {
extern float (*dot_f32)(const float*, const float*, std::size_t);
extern double (*dot_f64)(const double*, const double*, std::size_t);
extern void (*axpy_f32)(float*, float, const float*, std::size_t);
extern void (*axpy_f64)(double*, double, const double*, std::size_t);
extern void (*scal_f32)(float*, float, std::size_t);
extern void (*scal_f64)(double*, double, std::size_t);
extern void (*vadd_f32)(float*, const float*, std::size_t);
extern void (*vadd_f64)(double*, const double*, std::size_t);
extern float (*vsum_f32)(const float*, std::size_t);
extern double (*vsum_f64)(const double*, std::size_t);
extern float (*vmax_f32)(const float*, std::size_t);
extern double (*vmax_f64)(const double*, std::size_t);
extern void (*adam_f32)(float*, float*, float*, const float*, std::size_t, float, float, float,
                        float, float, float);
extern void (*adam_f64)(double*, double*, double*, const double*, std::size_t, double, double,
                        double, double, double, double);
}  // namespace detail

// sum_i a[i]*b[i]
inline float dot(const float* a, const float* b, std::size_t n) { return detail::dot_f32(a, b, n); }
inline double dot(const double* a, const double* b, std::size_t n) {
  return detail::dot_f64(a, b, n);
}

// y[i] += a*x[i]
inline void axpy(float* y, float a, const float* x, std::size_t n) { detail::axpy_f32(y, a, x, n); }
inline void axpy(double* y, double a, const double* x, std::size_t n) {
  detail::axpy_f64(y, a, x, n);
}

// x[i] *= a
inline void scal(float* x, float a, std::size_t n) { detail::scal_f32(x, a, n); }
inline void scal(double* x, double a, std::size_t n) { detail::scal_f64(x, a, n); }

// y[i] += x[i]
inline void vadd(float* y, const float* x, std::size_t n) { detail::vadd_f32(y, x, n); }
inline void vadd(double* y, const double* x, std::size_t n) { detail::vadd_f64(y, x, n); }

inline float vsum(const float* x, std::size_t n) { return detail::vsum_f32(x, n); }
inline double vsum(const double* x, std::size_t n) { return detail::vsum_f64(x, n); }

// max over x[0..n), n >= 1
inline float vmax(const float* x, std::size_t n) { return detail::vmax_f32(x, n); }
inline double vmax(const double* x, std::size_t n) { return detail::vmax_f64(x, n); }

// Fused Adam step for one tensor. bc1/bc2 are the bias corrections
// 1/(1-beta1^t) and 1/(1-beta2^t).
inline void adam_update(float* w, float* m, float* v, const float* g, std::size_t n, float lr,
                        float beta1, float beta2, float eps, float bc1, float bc2) {
  detail::adam_f32(w, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}
inline void adam_update(double* w, double* m, double* v, const double* g, std::size_t n, double lr,
                        double beta1, double beta2, double eps, double bc1, double bc2) {
  detail::adam_f64(w, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

// Reference implementations, callable directly for equivalence tests.
namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float* y, float a, const float* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void scal(float* x, float a, std::size_t n);
void scal(double* x, double a, std::size_t n);
void vadd(float* y, const float* x, std::size_t n);
void vadd(double* y, const double* x, std::size_t n);
float vsum(const float* x, std::size_t n);
double vsum(const double* x, std::size_t n);
float vmax(const float* x, std::size_t n);
double vmax(const double* x, std::size_t n);
void adam_update(float* w, float* m, float* v, const float* g, std::size_t n, float lr,
                 float beta1, float beta2, float eps, float bc1, float bc2);
void adam_update(double* w, double* m, double* v, const double* g, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float* y, float a, const float* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void scal(float* x, float a, std::size_t n);
void scal(double* x, double a, std::size_t n);
void vadd(float* y, const float* x, std::size_t n);
void vadd(double* y, const double* x, std::size_t n);
float vsum(const float* x, std::size_t n);
double vsum(const double* x, std::size_t n);
float vmax(const float* x, std::size_t n);
double vmax(const double* x, std::size_t n);
void adam_update(float* w, float* m, float* v, const float* g, std::size_t n, float lr,
                 float beta1, float beta2, float eps, float bc1, float bc2);
void adam_update(double* w, double* m, double* v, const double* g, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2);
}  // namespace avx2
#endif

}  // namespace tge::kern
