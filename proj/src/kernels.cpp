#include "tge/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace tge::kern {

namespace detail {
float (*dot_f32)(const float*, const float*, std::size_t) = scalar::dot;
double (*dot_f64)(const double*, const double*, std::size_t) = scalar::dot;
void (*axpy_f32)(float*, float, const float*, std::size_t) = scalar::axpy;
void (*axpy_f64)(double*, double, const double*, std::size_t) = scalar::axpy;
void (*scal_f32)(float*, float, std::size_t) = scalar::scal;
void (*scal_f64)(double*, double, std::size_t) = scalar::scal;
void (*vadd_f32)(float*, const float*, std::size_t) = scalar::vadd;
void (*vadd_f64)(double*, const double*, std::size_t) = scalar::vadd;
float (*vsum_f32)(const float*, std::size_t) = scalar::vsum;
double (*vsum_f64)(const double*, std::size_t) = scalar::vsum;
float (*vmax_f32)(const float*, std::size_t) = scalar::vmax;
double (*vmax_f64)(const double*, std::size_t) = scalar::vmax;
void (*adam_f32)(float*, float*, float*, const float*, std::size_t, float, float, float, float,
                 float, float) = scalar::adam_update;
void (*adam_f64)(double*, double*, double*, const double*, std::size_t, double, double, double,
                 double, double, double) = scalar::adam_update;
}  // namespace detail

static Isa g_isa = Isa::scalar;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  using namespace detail;
  g_isa = Isa::scalar;
  dot_f32 = scalar::dot;
  dot_f64 = scalar::dot;
  axpy_f32 = scalar::axpy;
  axpy_f64 = scalar::axpy;
  scal_f32 = scalar::scal;
  scal_f64 = scalar::scal;
  vadd_f32 = scalar::vadd;
  vadd_f64 = scalar::vadd;
  vsum_f32 = scalar::vsum;
  vsum_f64 = scalar::vsum;
  vmax_f32 = scalar::vmax;
  vmax_f64 = scalar::vmax;
  adam_f32 = scalar::adam_update;
  adam_f64 = scalar::adam_update;
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2 && cpu_has_avx2()) {
    g_isa = Isa::avx2;
    dot_f32 = avx2::dot;
    dot_f64 = avx2::dot;
    axpy_f32 = avx2::axpy;
    axpy_f64 = avx2::axpy;
    scal_f32 = avx2::scal;
    scal_f64 = avx2::scal;
    vadd_f32 = avx2::vadd;
    vadd_f64 = avx2::vadd;
    vsum_f32 = avx2::vsum;
    vsum_f64 = avx2::vsum;
    vmax_f32 = avx2::vmax;
    vmax_f64 = avx2::vmax;
    adam_f32 = avx2::adam_update;
    adam_f64 = avx2::adam_update;
  }
#else
  (void)isa;
#endif
}

Isa active_isa() { return g_isa; }

namespace {
struct SelectAtStartup {
  SelectAtStartup() {
    Isa want = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
    if (const char* env = std::getenv("TGE_KERNEL")) {
      if (std::strcmp(env, "scalar") == 0) want = Isa::scalar;
      if (std::strcmp(env, "avx2") == 0) want = Isa::avx2;
    }
    force_isa(want);
  }
};
const SelectAtStartup g_select;
}  // namespace

}  // namespace tge::kern
