#pragma once

#include <cstddef>

namespace npgnn::kernels {

// Flat-array kernels behind the dense matrix ops. One scalar reference
// implementation plus an AVX2/FMA variant picked at runtime.
struct Ops {
  const char* name;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double a, const double* x, double* out, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  void (*relu)(const double* x, double* out, std::size_t n);
};

const Ops& scalar_ops();
// nullptr when the CPU (or build) lacks AVX2+FMA.
const Ops* avx2_ops();

// Selected once per process: NPGNN_KERNELS=scalar|avx2 overrides autodetect.
const Ops& active();

}  // namespace npgnn::kernels
