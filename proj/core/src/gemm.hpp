#pragma once

#include <Eigen/Core>

// Row-major float32 GEMM wrappers. Eigen without OpenMP is single-threaded,
// so results are reproducible run to run.
namespace atrfas::nd::detail {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;

// C[M,N] = A[M,K] * B[K,N]
inline void gemm_nn(const float* A, const float* B, float* C, int M, int N, int K,
                    bool accumulate = false) {
    CMap a(A, M, K), b(B, K, N);
    Map c(C, M, N);
    if (accumulate)
        c.noalias() += a * b;
    else
        c.noalias() = a * b;
}

// C[M,N] = A[M,K] * B[N,K]^T
inline void gemm_nt(const float* A, const float* B, float* C, int M, int N, int K,
                    bool accumulate = false) {
    CMap a(A, M, K), b(B, N, K);
    Map c(C, M, N);
    if (accumulate)
        c.noalias() += a * b.transpose();
    else
        c.noalias() = a * b.transpose();
}

// C[M,N] = A[K,M]^T * B[K,N]
inline void gemm_tn(const float* A, const float* B, float* C, int M, int N, int K,
                    bool accumulate = false) {
    CMap a(A, K, M), b(B, K, N);
    Map c(C, M, N);
    if (accumulate)
        c.noalias() += a.transpose() * b;
    else
        c.noalias() = a.transpose() * b;
}

} // namespace atrfas::nd::detail
