#include "specflow/linalg.hpp"

#include <cmath>
#include <string>

#include "specflow/errors.hpp"

namespace specflow {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(const double* x, const double* y, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

void gemm_acc(const Matrix& A, const Matrix& B, Matrix& C) {
  require(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols,
          ErrClass::BadInput,
          "gemm shape mismatch: " + std::to_string(A.rows) + "x" +
              std::to_string(A.cols) + " * " + std::to_string(B.rows) + "x" +
              std::to_string(B.cols) + " += " + std::to_string(C.rows) + "x" +
              std::to_string(C.cols));
  const int n = B.cols;
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double* ci = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const double aik = ai[k];
      const double* bk = B.row(k);
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

Matrix matmul(const Matrix& A, const Matrix& B) {
  require(A.cols == B.rows, ErrClass::BadInput,
          "matmul dimension mismatch: " + std::to_string(A.cols) +
              " vs " + std::to_string(B.rows));
  Matrix C(A.rows, B.cols);
  gemm_acc(A, B, C);
  return C;
}

Matrix transpose(const Matrix& A) {
  Matrix T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

Vector matvec(const Matrix& A, const Vector& x) {
  require(int(x.size()) == A.cols, ErrClass::BadInput, "matvec size mismatch");
  Vector y(size_t(A.rows));
  for (int i = 0; i < A.rows; ++i) y[size_t(i)] = dot(A.row(i), x.data(), A.cols);
  return y;
}

Vector matvec_t(const Matrix& A, const Vector& x) {
  require(int(x.size()) == A.rows, ErrClass::BadInput,
          "matvec_t size mismatch");
  Vector y(size_t(A.cols), 0.0);
  for (int i = 0; i < A.rows; ++i) axpy(x[size_t(i)], A.row(i), y.data(), A.cols);
  return y;
}

namespace {

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.a) v = std::max(v, std::fabs(x));
  return v;
}

double offdiag_frob(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace

SymEigen sym_eigen(const Matrix& s) {
  require(s.rows == s.cols, ErrClass::BadInput, "sym_eigen: matrix not square");
  const int n = s.rows;
  const double scale = max_abs(s);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      require(std::fabs(s(i, j) - s(j, i)) <= 1e-9 * (1.0 + scale),
              ErrClass::BadInput, "sym_eigen: matrix not symmetric");

  Matrix A = s;
  Matrix V = Matrix::identity(n);
  const double stop = 1e-14 * (1.0 + scale) * n;

  constexpr int kMaxSweeps = 100;
  bool converged = (n == 1);
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    if (offdiag_frob(A) <= stop) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        // stable tangent: smaller root of t^2 + 2t*theta - 1 = 0
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        // A <- J^T A J on rows/cols p,q
        for (int i = 0; i < n; ++i) {
          const double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - sn * aiq;
          A(i, q) = sn * aip + c * aiq;
        }
        for (int j = 0; j < n; ++j) {
          const double apj = A(p, j), aqj = A(q, j);
          A(p, j) = c * apj - sn * aqj;
          A(q, j) = sn * apj + c * aqj;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - sn * viq;
          V(i, q) = sn * vip + c * viq;
        }
      }
    }
  }
  if (!converged && offdiag_frob(A) > stop)
    fail(ErrClass::NumericFailure, "sym_eigen: no convergence in 100 sweeps");

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[size_t(i)] = i;
  // stable insertion sort by descending eigenvalue keeps tie order fixed
  for (int i = 1; i < n; ++i) {
    int key = order[size_t(i)];
    int j = i - 1;
    while (j >= 0 && A(order[size_t(j)], order[size_t(j)]) < A(key, key)) {
      order[size_t(j + 1)] = order[size_t(j)];
      --j;
    }
    order[size_t(j + 1)] = key;
  }

  SymEigen out;
  out.values.resize(size_t(n));
  out.vectors = Matrix(n, n);
  for (int k = 0; k < n; ++k) {
    const int src = order[size_t(k)];
    out.values[size_t(k)] = A(src, src);
    int pivot = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double m = std::fabs(V(i, src));
      if (m > best) {
        best = m;
        pivot = i;
      }
    }
    const double flip = V(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors(i, k) = flip * V(i, src);
  }
  return out;
}

}  // namespace specflow
