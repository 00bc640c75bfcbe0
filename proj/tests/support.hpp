#pragma once

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "czbench/bench.hpp"
#include "czbench/config.hpp"

namespace testing {

using namespace czb;

inline fem::Problem coarse(double u_right, fem::CaseId id = fem::CaseId::ItP,
                           fem::CohesiveLaw law = {}) {
  return fem::make_case(id, fem::build_mesh(2, 1.0, 0.5), fem::Material{}, law, u_right);
}

inline fem::Problem fine(double u_right, fem::CaseId id = fem::CaseId::ItP) {
  return fem::make_case(id, fem::build_mesh(64, 1.0, 0.5), fem::Material{}, fem::CohesiveLaw{},
                        u_right);
}

// cohesive zone that never leaves its elastic branch over the loads used
inline fem::CohesiveLaw rigid_law() { return fem::CohesiveLaw{100.0, 1e3, 2e3}; }

// default-config calibration, computed once per process
inline const std::map<fem::CaseId, bench::Calibration>& calibrated() {
  static const auto cal = [] {
    const auto rc = config::parse(config::default_document());
    return bench::calibrate_all(rc.mesh(2), rc.material, rc.law, rc.calibration);
  }();
  return cal;
}

inline double load(fem::CaseId id) { return calibrated().at(id).u_right; }

// Roots of the 2-element bar derived by hand, branch by branch:
//   r1 = k u1 - t(D),  r2 = -k (ub - u2) + t(D),  D = u2 - u1,
// with t affine on each branch, t = a + c D. Each branch is a 2x2 linear
// solve whose solution is kept when D falls inside the branch.
struct ExactRoot {
  double u1, u2, opening;
};

inline std::vector<ExactRoot> exact_coarse_roots(double ub, const fem::CohesiveLaw& law,
                                                 double EA = 1.0, double Lbar = 1.0) {
  const double k = EA / (Lbar / 2.0);
  const double s = law.K_p * law.delta_0 / (law.delta_f - law.delta_0);
  struct Branch {
    double a, c, lo, hi;
  };
  const Branch branches[] = {
      {0.0, law.K_p, -INFINITY, law.delta_0},
      {law.K_p * law.delta_0 + s * law.delta_0, -s, law.delta_0, law.delta_f},
      {0.0, 0.0, law.delta_f, INFINITY},
  };
  std::vector<ExactRoot> out;
  for (const auto& b : branches) {
    // k u1 - a - c (u2 - u1) = 0 ;  k u2 - k ub + a + c (u2 - u1) = 0
    const double A11 = k + b.c, A12 = -b.c, A21 = -b.c, A22 = k + b.c;
    const double b1 = b.a, b2 = k * ub - b.a;
    const double det = A11 * A22 - A12 * A21;
    if (std::abs(det) < 1e-14) continue;
    const double u1 = (b1 * A22 - A12 * b2) / det;
    const double u2 = (A11 * b2 - A21 * b1) / det;
    const double D = u2 - u1;
    const double tol = 1e-12 * (1.0 + std::abs(D));
    if (D < b.lo - tol || D > b.hi + tol) continue;
    bool dup = false;
    for (const auto& r : out)
      if (std::hypot(r.u1 - u1, r.u2 - u2) < 1e-9) dup = true;
    if (!dup) out.push_back({u1, u2, D});
  }
  return out;
}

inline Matrix fd_jacobian(const fem::Problem& p, const Vector& u, double h) {
  const int n = p.n_free();
  Matrix J(n, n);
  for (int j = 0; j < n; ++j) {
    Vector a = u, b = u;
    a(j) += h;
    b(j) -= h;
    J.col(j) = (p.residual(a) - p.residual(b)) / (2.0 * h);
  }
  return J;
}

// random coarse point whose opening is at least `gap` away from both kinks
inline Vector random_away_from_kinks(std::mt19937& rng, const fem::Problem& p, double gap) {
  std::uniform_real_distribution<double> U(-0.5, 1.5);
  const auto& law = p.law();
  while (true) {
    Vector u(p.n_free());
    for (int i = 0; i < p.n_free(); ++i) u(i) = U(rng) * std::max(p.case_spec().u_right, 0.05);
    // pull the opening into the interesting range half the time
    if (rng() % 2) {
      const auto [m, n] = p.mesh().cz_pair;
      const int jm = m - 1, jn = n - 1;
      std::uniform_real_distribution<double> D(-0.5 * law.delta_0, 1.5 * law.delta_f);
      u(jn) = u(jm) + D(rng);
    }
    const double d = p.opening(u);
    if (std::abs(d - law.delta_0) > gap && std::abs(d - law.delta_f) > gap) return u;
  }
}

inline Matrix random_matrix(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = U(rng);
  return A;
}

inline Vector random_vector(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

inline Matrix random_spd(std::mt19937& rng, int n) {
  const Matrix A = random_matrix(rng, n);
  return A * A.transpose() + n * Matrix::Identity(n, n);
}

}  // namespace testing
