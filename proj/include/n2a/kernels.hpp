#pragma once

#include <cstddef>

namespace n2a::kernels {

enum class Backend { Scalar, Avx2 };

// The arithmetic inner loops everything else is built on. Each entry has a
// scalar reference implementation and an AVX2 variant; the active table is
// chosen once at startup from CPUID and can be overridden with select() or
// the N2A_KERNELS environment variable ("scalar" | "avx2").
struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sumsq)(const double* x, std::size_t n);
  double (*sqdist)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // falls back to scalar_ops() on non-x86 builds

bool avx2_supported();

// Explicit override; throws ConfigError for an unsupported backend.
void select(Backend b);
// CPUID probe plus N2A_KERNELS override.
void select_auto();

const Ops& active();
Backend active_backend();

}  // namespace n2a::kernels
