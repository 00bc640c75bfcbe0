#include "czbench/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace czb::linalg {

namespace {

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols())
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
}

}  // namespace

GmresResult gmres_solve(const Matrix& A, const Vector& b, const GmresPolicy& policy) {
  require_square(A, "gmres_solve");
  const Eigen::Index n = A.rows();
  if (b.size() != n) throw std::invalid_argument("gmres_solve: dimension mismatch");
  if (!(policy.tol > 0.0 && policy.tol < 1.0) || policy.max_iter < 0)
    throw std::invalid_argument("gmres_solve: invalid policy");

  GmresResult out;
  out.x = Vector::Zero(n);
  const double beta = b.norm();
  if (beta == 0.0) {
    out.converged = true;
    return out;
  }
  const int m = policy.max_iter > 0 ? policy.max_iter : static_cast<int>(n);

  Matrix V(n, m + 1);
  Matrix H = Matrix::Zero(m + 1, m);
  Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
  Vector g = Vector::Zero(m + 1);
  V.col(0) = b / beta;
  g(0) = beta;

  int k = 0;
  double res = beta;
  for (; k < m; ++k) {
    Vector w = A * V.col(k);
    // modified Gram-Schmidt
    for (int i = 0; i <= k; ++i) {
      H(i, k) = w.dot(V.col(i));
      w -= H(i, k) * V.col(i);
    }
    H(k + 1, k) = w.norm();
    const bool breakdown = H(k + 1, k) <= 1e-14 * beta;
    if (!breakdown) V.col(k + 1) = w / H(k + 1, k);

    for (int i = 0; i < k; ++i) {
      const double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
      H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
      H(i, k) = t;
    }
    const double rr = std::hypot(H(k, k), H(k + 1, k));
    if (rr == 0.0) {
      cs(k) = 1.0;
      sn(k) = 0.0;
    } else {
      cs(k) = H(k, k) / rr;
      sn(k) = H(k + 1, k) / rr;
    }
    H(k, k) = rr;
    H(k + 1, k) = 0.0;
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);
    res = std::abs(g(k + 1));
    if (res <= policy.tol * beta || breakdown) {
      ++k;
      break;
    }
  }

  // back substitution on the k x k triangle
  Vector y = Vector::Zero(k);
  for (int i = k - 1; i >= 0; --i) {
    double s = g(i);
    for (int j = i + 1; j < k; ++j) s -= H(i, j) * y(j);
    y(i) = H(i, i) != 0.0 ? s / H(i, i) : 0.0;
  }
  out.x = V.leftCols(k) * y;
  out.iterations = k;
  out.rel_residual = (b - A * out.x).norm() / beta;
  out.converged = std::isfinite(out.rel_residual) && out.rel_residual <= policy.tol;
  return out;
}

Vector lu_solve(const Matrix& A, const Vector& b) {
  require_square(A, "lu_solve");
  if (b.size() != A.rows()) throw std::invalid_argument("lu_solve: dimension mismatch");
  Eigen::PartialPivLU<Matrix> lu(A);
  const Matrix& LU = lu.matrixLU();
  const double scale = A.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < LU.rows(); ++i) {
    if (!(std::abs(LU(i, i)) > 1e-14 * scale))
      throw SingularMatrixError("lu_solve: matrix is singular to working precision");
  }
  return lu.solve(b);
}

double condition_number(const Matrix& A) {
  require_square(A, "condition_number");
  if (A.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin < 1e-300) return kInfiniteCondition;
  return s(0) / smin;
}

}  // namespace czb::linalg
