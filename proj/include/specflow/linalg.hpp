#pragma once

#include <vector>

namespace specflow {

using Vector = std::vector<double>;

// Dense row-major matrix. Everything downstream (PCA on 160-dim vectors,
// MLP layers up to 256 wide) lives comfortably in this one type.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(size_t(r) * size_t(c), 0.0) {}

  double& operator()(int r, int c) { return a[size_t(r) * cols + c]; }
  double operator()(int r, int c) const { return a[size_t(r) * cols + c]; }
  double* row(int r) { return a.data() + size_t(r) * cols; }
  const double* row(int r) const { return a.data() + size_t(r) * cols; }

  static Matrix identity(int n);
};

// Fixed-order dot product: four independent accumulator lanes combined as
// (s0+s1)+(s2+s3), then a serial tail. Same result for any call site.
double dot(const double* x, const double* y, int n);

// y += a*x
void axpy(double a, const double* x, double* y, int n);

double norm2(const double* x, int n);
inline double norm2(const Vector& x) { return norm2(x.data(), int(x.size())); }

// C += A·B. Inner loop runs over contiguous columns of B (vectorizable,
// lanes independent); the k-accumulation order is ascending for every C
// element, so blocked or threaded callers get bit-identical sums.
void gemm_acc(const Matrix& A, const Matrix& B, Matrix& C);

Matrix matmul(const Matrix& A, const Matrix& B);
Matrix transpose(const Matrix& A);

Vector matvec(const Matrix& A, const Vector& x);    // A x
Vector matvec_t(const Matrix& A, const Vector& x);  // A^T x

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // eigenvectors in columns, matching values order
};

// Cyclic Jacobi. Input must be square and symmetric within 1e-9 relative;
// throws NUMERIC_FAILURE after 100 sweeps without convergence. Eigenvector
// sign convention: the largest-magnitude component of each vector is
// positive (first such index on ties), so decompositions are reproducible.
SymEigen sym_eigen(const Matrix& s);

}  // namespace specflow
