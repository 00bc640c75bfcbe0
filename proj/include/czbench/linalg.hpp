#pragma once

#include <limits>
#include <stdexcept>

#include "czbench/fem.hpp"

namespace czb::linalg {

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GmresPolicy {
  double tol = 1e-5;
  // 0 means n (full memory, no restarts)
  int max_iter = 0;
};

struct GmresResult {
  Vector x;
  double rel_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

GmresResult gmres_solve(const Matrix& A, const Vector& b, const GmresPolicy& policy = {});

Vector lu_solve(const Matrix& A, const Vector& b);

constexpr double kInfiniteCondition = std::numeric_limits<double>::infinity();

// sigma_max / sigma_min; +inf when sigma_min < 1e-300
double condition_number(const Matrix& A);

}  // namespace czb::linalg
