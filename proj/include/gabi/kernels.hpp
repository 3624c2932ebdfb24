#ifndef GABI_KERNELS_HPP
#define GABI_KERNELS_HPP

#include <cstdint>
#include <vector>

namespace gabi {

/// Compressed sparse row matrix (square, used for graph operators).
struct Csr {
  int64_t n = 0;
  std::vector<int64_t> row_ptr;  // size n+1
  std::vector<int64_t> cols;
  std::vector<double> vals;

  int64_t nnz() const { return static_cast<int64_t>(cols.size()); }

  static Csr from_triplets(int64_t n,
                           const std::vector<int64_t>& rows,
                           const std::vector<int64_t>& cols,
                           const std::vector<double>& vals);
};

// Dense kernels, row-major. Each has a serial reference and an OpenMP
// version; both accumulate in the same order per output element, so they
// are bit-identical for every thread count. The unsuffixed name is the
// OpenMP one.
namespace kernels {

// C = A(m×k) · B(k×n), optionally accumulating into C.
void gemm_nn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc = false);
void gemm_nn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc = false);

// C = A(m×k) · B(n×k)ᵀ
void gemm_nt_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc = false);
void gemm_nt(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc = false);

// C = A(k×m)ᵀ · B(k×n)
void gemm_tn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc = false);
void gemm_tn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc = false);

// Y = S · X with S sparse n×n and X dense n×c.
void spmm_serial(const Csr& s, const double* x, double* y, int64_t c,
                 bool acc = false);
void spmm(const Csr& s, const double* x, double* y, int64_t c,
          bool acc = false);

// y = tanh(x) elementwise.
void tanh_serial(const double* x, double* y, int64_t n);
void tanh_omp(const double* x, double* y, int64_t n);

}  // namespace kernels
}  // namespace gabi

#endif  // GABI_KERNELS_HPP
