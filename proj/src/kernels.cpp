#include "gabi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gabi/errors.hpp"

namespace gabi {

Csr Csr::from_triplets(int64_t n,
                       const std::vector<int64_t>& rows,
                       const std::vector<int64_t>& cols,
                       const std::vector<double>& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw ShapeError("Csr::from_triplets: triplet arrays differ in length");
  Csr s;
  s.n = n;
  s.row_ptr.assign(static_cast<size_t>(n) + 1, 0);
  const size_t nnz = vals.size();
  for (size_t t = 0; t < nnz; ++t) {
    if (rows[t] < 0 || rows[t] >= n || cols[t] < 0 || cols[t] >= n)
      throw ShapeError("Csr::from_triplets: index out of range");
    ++s.row_ptr[static_cast<size_t>(rows[t]) + 1];
  }
  for (int64_t i = 0; i < n; ++i)
    s.row_ptr[static_cast<size_t>(i) + 1] += s.row_ptr[static_cast<size_t>(i)];
  s.cols.resize(nnz);
  s.vals.resize(nnz);
  std::vector<int64_t> cursor(s.row_ptr.begin(), s.row_ptr.end() - 1);
  for (size_t t = 0; t < nnz; ++t) {
    const int64_t at = cursor[static_cast<size_t>(rows[t])]++;
    s.cols[static_cast<size_t>(at)] = cols[t];
    s.vals[static_cast<size_t>(at)] = vals[t];
  }
  // Sort columns within each row so products have a fixed accumulation order.
  for (int64_t i = 0; i < n; ++i) {
    const int64_t lo = s.row_ptr[static_cast<size_t>(i)];
    const int64_t hi = s.row_ptr[static_cast<size_t>(i) + 1];
    std::vector<int64_t> order(static_cast<size_t>(hi - lo));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      return s.cols[static_cast<size_t>(lo + a)] <
             s.cols[static_cast<size_t>(lo + b)];
    });
    std::vector<int64_t> c2(order.size());
    std::vector<double> v2(order.size());
    for (size_t j = 0; j < order.size(); ++j) {
      c2[j] = s.cols[static_cast<size_t>(lo + order[j])];
      v2[j] = s.vals[static_cast<size_t>(lo + order[j])];
    }
    std::copy(c2.begin(), c2.end(), s.cols.begin() + lo);
    std::copy(v2.begin(), v2.end(), s.vals.begin() + lo);
  }
  return s;
}

namespace kernels {
namespace {

// Four-row micro-block of the i-k-j loop; accumulation over k is ascending
// for every output element, independent of threading.
inline void gemm_nn_rows(const double* a, const double* b, double* c,
                         int64_t i0, int64_t i1, int64_t k, int64_t n,
                         bool acc) {
  for (int64_t ib = i0; ib < i1; ib += 4) {
    const int64_t rows = std::min<int64_t>(4, i1 - ib);
    if (!acc)
      for (int64_t r = 0; r < rows; ++r)
        std::fill(c + (ib + r) * n, c + (ib + r + 1) * n, 0.0);
    for (int64_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      for (int64_t r = 0; r < rows; ++r) {
        const double av = a[(ib + r) * k + p];
        double* ci = c + (ib + r) * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

inline void gemm_nt_rows(const double* a, const double* b, double* c,
                         int64_t i0, int64_t i1, int64_t k, int64_t n,
                         bool acc) {
  for (int64_t i = i0; i < i1; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double sum = 0.0;
      for (int64_t p = 0; p < k; ++p) sum += ai[p] * bj[p];
      ci[j] = acc ? ci[j] + sum : sum;
    }
  }
}

}  // namespace

void gemm_nn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc) {
  gemm_nn_rows(a, b, c, 0, m, k, n, acc);
}

void gemm_nn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int64_t ib = 0; ib < (m + 3) / 4; ++ib)
    gemm_nn_rows(a, b, c, ib * 4, std::min(m, ib * 4 + 4), k, n, acc);
}

void gemm_nt_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc) {
  gemm_nt_rows(a, b, c, 0, m, k, n, acc);
}

void gemm_nt(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) gemm_nt_rows(a, b, c, i, i + 1, k, n, acc);
}

namespace {
inline void gemm_tn_row(const double* a, const double* b, double* c,
                        int64_t i, int64_t m, int64_t k, int64_t n, bool acc) {
  double* ci = c + i * n;
  if (!acc) std::fill(ci, ci + n, 0.0);
  for (int64_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* bp = b + p * n;
    for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}
}  // namespace

void gemm_tn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool acc) {
  for (int64_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, i, m, k, n, acc);
}

void gemm_tn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, i, m, k, n, acc);
}

namespace {
inline void spmm_row(const Csr& s, const double* x, double* y, int64_t c,
                     int64_t i, bool acc) {
  double* yi = y + i * c;
  if (!acc) std::fill(yi, yi + c, 0.0);
  for (int64_t e = s.row_ptr[static_cast<size_t>(i)];
       e < s.row_ptr[static_cast<size_t>(i) + 1]; ++e) {
    const double v = s.vals[static_cast<size_t>(e)];
    const double* xj = x + s.cols[static_cast<size_t>(e)] * c;
    for (int64_t q = 0; q < c; ++q) yi[q] += v * xj[q];
  }
}
}  // namespace

void spmm_serial(const Csr& s, const double* x, double* y, int64_t c,
                 bool acc) {
  for (int64_t i = 0; i < s.n; ++i) spmm_row(s, x, y, c, i, acc);
}

void spmm(const Csr& s, const double* x, double* y, int64_t c, bool acc) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < s.n; ++i) spmm_row(s, x, y, c, i, acc);
}

void tanh_serial(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_omp(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

}  // namespace kernels
}  // namespace gabi
