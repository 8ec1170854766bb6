#include <cblas.h>

#include "hal/ops.hpp"

namespace hal::ops::detail {

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
          float* c) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)m, (int)n, (int)k, 1.0f,
                a, (int)k, b, (int)n, 0.0f, c, (int)n);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)m, (int)n, (int)k, 1.0,
                a, (int)k, b, (int)n, 0.0, c, (int)n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
             float* c) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)m, (int)n, (int)k, 1.0f,
                a, (int)k, b, (int)k, 0.0f, c, (int)n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)m, (int)n, (int)k, 1.0,
                a, (int)k, b, (int)k, 0.0, c, (int)n);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
             float* c) {
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)m, (int)n, (int)k, 1.0f,
                a, (int)m, b, (int)n, 0.0f, c, (int)n);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)m, (int)n, (int)k, 1.0,
                a, (int)m, b, (int)n, 0.0, c, (int)n);
}

}  // namespace hal::ops::detail
