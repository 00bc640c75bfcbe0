#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "czbench/fem.hpp"
#include "czbench/linalg.hpp"

namespace czb::solvers {

enum class Method { Picard, NewtonRF, Broyden, BroydenInv, Adam, Adagrad, BFGS, LBFGS, Dogleg, Steihaug };

enum class BroydenInit { ScaledIdentity, ExactJacobian };

enum class Status { Converged, MaxIters, Stalled, Diverged, NumericalFailure };

enum class Trend { Improving, Stalled, Diverging };

const std::vector<Method>& all_methods();
std::string to_string(Method m);
// accepts the canonical names (picard, newton, broyden, broyden_inv, adam,
// adagrad, bfgs, lbfgs, dogleg, steihaug) case-insensitively plus a few aliases
Method parse_method(const std::string& s);
std::string to_string(Status s);
std::string to_string(BroydenInit b);
BroydenInit parse_broyden_init(const std::string& s);

struct SolverConfig {
  Method method = Method::NewtonRF;
  double tol = 1e-6;
  int max_iters = 2000;
  double delta_0 = 1.0;
  double delta_max = 100.0;
  int tr_reset_every = 5;
  double ls_tau = 0.5;
  double ls_c1 = 1e-4;
  double ls_c2 = 0.9;
  double ls_alpha0 = 1.0;
  int ls_max_backtracks = 40;
  double adam_alpha = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double adagrad_alpha = 1e-1;
  double adagrad_eps = 1e-8;
  int lbfgs_memory = 10;
  int stall_window = 10;
  double stall_slope_tol = 1e-3;
  double broyden_denom_eps = 1e-14;
  BroydenInit broyden_init = BroydenInit::ScaledIdentity;
  double picard_omega = 1.0;
  double gmres_tol = 1e-5;
  bool record_cond = false;
  bool record_steps = false;

  void validate() const;
};

struct Counters {
  long residual_evals = 0;
  long jacobian_evals = 0;
  long linear_solves = 0;
};

struct CondSample {
  double kappa_exact = 0.0;
  double kappa_estimate = 0.0;
};

// Per outer iteration bookkeeping, filled when record_steps is set.
struct StepRecord {
  Vector u_before;
  Vector u_after;
  // trust radius used for the step; 0 for methods without one
  double delta = 0.0;
  // Steihaug inner CG sub-iterations
  int inner_iterations = 0;
  // line searches run during the step
  struct Search {
    Vector u;
    Vector p;
    double alpha = 0.0;
    bool armijo = false;
  };
  std::vector<Search> searches;
};

struct SolveReport {
  Method method = Method::NewtonRF;
  Status status = Status::MaxIters;
  int iterations = 0;
  std::vector<double> residual_history;
  Counters counters;
  Vector final_u;
  std::vector<CondSample> cond_history;
  std::vector<StepRecord> steps;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
  // the "*" flavour: stopped by the stall detector close to the target
  bool converged_without_precision() const {
    return status == Status::Stalled && final_residual() < 1e-3;
  }
};

struct TrustRegionState {
  double delta = 1.0;
  int adjust_count = 0;
  double delta_0 = 1.0;
  double delta_max = 100.0;
  int reset_every = 5;

  static TrustRegionState from(const SolverConfig& cfg);
};

struct LineSearchResult {
  double alpha = 0.0;
  bool descent = true;
  bool armijo = false;
  bool curvature = false;
  int evaluations = 0;
};

// Square nonlinear system r(u) = 0 with analytic Jacobian.
struct System {
  int n = 0;
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  // characteristic stiffness (E*A/h for a bar); scales Picard and Broyden J0
  double stiffness = 1.0;
};

System as_system(const fem::Problem& problem);
// r(u) = A u - b
System affine_system(const Matrix& A, const Vector& b);

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

double phi(const Vector& r);
Vector grad_phi(const Matrix& J, const Vector& r);
Matrix gn_hessian(const Matrix& J);
double quad_model(double phi_val, const Vector& g, const Matrix& H, const Vector& p);

// Backtracking from ls_alpha0 by ls_tau until Armijo holds. The curvature
// inequality is checked at the accepted point only when grad is given.
LineSearchResult line_search(const Objective& objective, const Vector& g0, const Vector& u,
                             const Vector& p, const SolverConfig& cfg,
                             const Gradient& grad = nullptr);

TrustRegionState adjust_delta(TrustRegionState state, double phi_prev, double phi_curr,
                              double model_pred);

Trend detect_trend(const std::vector<double>& history, int window, double slope_tol);

// Rank-one updates; nullopt signals the small-denominator guard.
std::optional<Matrix> broyden_update(const Matrix& J, const Vector& du, const Vector& dr,
                                     double eps);
std::optional<Matrix> broyden_inv_update(const Matrix& B, const Vector& du, const Vector& dr,
                                         double eps);
// Skips (returns H unchanged) when du.dg <= 0.
Matrix bfgs_update(const Matrix& H, const Vector& du, const Vector& dg);

struct CurvaturePair {
  Vector du;
  Vector dg;
};
Vector lbfgs_direction(const Vector& g, const std::vector<CurvaturePair>& history);

struct AdamState {
  Vector m1;
  Vector m2;
  int t = 0;
};
Vector step_adam(const Vector& u, AdamState& state, const Vector& g, const SolverConfig& cfg);
Vector step_adagrad(const Vector& u, Vector& G, const Vector& g, const SolverConfig& cfg);

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step functions take the residual r at u, already evaluated by the caller.
Vector step_picard(const Vector& u, const Vector& r, const System& sys, double omega);
// Throws NumericalFailure when the inner solve fails.
Vector step_newton(const Vector& u, const Vector& r, const System& sys,
                   const linalg::GmresPolicy& policy, Counters* counters = nullptr);

struct TrustStep {
  Vector u;
  // residual at the new u
  Vector r;
  TrustRegionState tr;
  double step_norm = 0.0;
  double radius = 0.0;
  bool newton_step = false;
  bool flagged = false;
  int inner_iterations = 0;
  std::vector<StepRecord::Search> searches;
};
TrustStep step_dogleg(const Vector& u, const Vector& r, const System& sys, TrustRegionState tr,
                      const SolverConfig& cfg, Counters* counters = nullptr);
TrustStep step_steihaug(const Vector& u, const Vector& r, const System& sys, TrustRegionState tr,
                        const SolverConfig& cfg, Counters* counters = nullptr);

SolveReport solve(const System& sys, const SolverConfig& cfg,
                  const std::optional<Vector>& u0 = std::nullopt);
SolveReport solve(const fem::Problem& problem, const SolverConfig& cfg,
                  const std::optional<Vector>& u0 = std::nullopt);

}  // namespace czb::solvers
