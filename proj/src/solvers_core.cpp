#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "czbench/solvers.hpp"

namespace czb::solvers {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
  return s;
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::Picard, Method::NewtonRF, Method::Broyden,
                                     Method::BroydenInv, Method::Adam, Method::Adagrad,
                                     Method::BFGS, Method::LBFGS, Method::Dogleg,
                                     Method::Steihaug};
  return m;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Picard: return "picard";
    case Method::NewtonRF: return "newton";
    case Method::Broyden: return "broyden";
    case Method::BroydenInv: return "broyden_inv";
    case Method::Adam: return "adam";
    case Method::Adagrad: return "adagrad";
    case Method::BFGS: return "bfgs";
    case Method::LBFGS: return "lbfgs";
    case Method::Dogleg: return "dogleg";
    case Method::Steihaug: return "steihaug";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  static const std::map<std::string, Method> names{
      {"picard", Method::Picard},       {"newton", Method::NewtonRF},
      {"newtonrf", Method::NewtonRF},   {"broyden", Method::Broyden},
      {"broydeninv", Method::BroydenInv}, {"adam", Method::Adam},
      {"adagrad", Method::Adagrad},     {"bfgs", Method::BFGS},
      {"lbfgs", Method::LBFGS},         {"dogleg", Method::Dogleg},
      {"steihaug", Method::Steihaug}};
  auto it = names.find(lower(s));
  if (it == names.end()) throw ConfigError("unknown method '" + s + "'");
  return it->second;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxIters: return "MaxIters";
    case Status::Stalled: return "Stalled";
    case Status::Diverged: return "Diverged";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

std::string to_string(BroydenInit b) {
  return b == BroydenInit::ScaledIdentity ? "scaled_identity" : "exact";
}

BroydenInit parse_broyden_init(const std::string& s) {
  const auto t = lower(s);
  if (t == "scaledidentity" || t == "identity") return BroydenInit::ScaledIdentity;
  if (t == "exact" || t == "exactjacobian") return BroydenInit::ExactJacobian;
  throw ConfigError("unknown broyden_init '" + s + "' (expected scaled_identity or exact)");
}

void SolverConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(tol > 0.0, "tol must be positive");
  need(max_iters >= 0, "max_iters must be nonnegative");
  need(delta_0 > 0.0 && delta_0 <= delta_max, "trust region requires 0 < delta_0 <= delta_max");
  need(tr_reset_every >= 1, "tr_reset_every must be at least 1");
  need(ls_tau > 0.0 && ls_tau < 1.0, "ls_tau must lie in (0,1)");
  need(ls_c1 > 0.0 && ls_c1 < ls_c2 && ls_c2 < 1.0, "line search requires 0 < ls_c1 < ls_c2 < 1");
  need(ls_alpha0 > 0.0, "ls_alpha0 must be positive");
  need(ls_max_backtracks >= 0, "ls_max_backtracks must be nonnegative");
  need(adam_alpha > 0.0 && adam_eps > 0.0, "adam_alpha and adam_eps must be positive");
  need(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
       "adam betas must lie in [0,1)");
  need(adagrad_alpha > 0.0 && adagrad_eps > 0.0, "adagrad_alpha and adagrad_eps must be positive");
  need(lbfgs_memory >= 1, "lbfgs_memory must be at least 1");
  need(stall_window >= 2, "stall_window must be at least 2");
  need(stall_slope_tol > 0.0, "stall_slope_tol must be positive");
  need(broyden_denom_eps > 0.0, "broyden_denom_eps must be positive");
  need(picard_omega > 0.0, "picard_omega must be positive");
  need(gmres_tol > 0.0 && gmres_tol < 1.0, "gmres_tol must lie in (0,1)");
}

TrustRegionState TrustRegionState::from(const SolverConfig& cfg) {
  TrustRegionState s;
  s.delta = cfg.delta_0;
  s.delta_0 = cfg.delta_0;
  s.delta_max = cfg.delta_max;
  s.reset_every = cfg.tr_reset_every;
  return s;
}

System as_system(const fem::Problem& problem) {
  System s;
  s.n = problem.n_free();
  s.residual = [&problem](const Vector& u) { return problem.residual(u); };
  s.jacobian = [&problem](const Vector& u) { return problem.jacobian(u); };
  s.stiffness = problem.element_stiffness();
  return s;
}

System affine_system(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw std::invalid_argument("affine_system: dimension mismatch");
  System s;
  s.n = static_cast<int>(b.size());
  s.residual = [A, b](const Vector& u) -> Vector { return A * u - b; };
  s.jacobian = [A](const Vector&) { return A; };
  s.stiffness = A.diagonal().cwiseAbs().maxCoeff();
  if (!(s.stiffness > 0.0)) s.stiffness = 1.0;
  return s;
}

double phi(const Vector& r) { return 0.5 * r.squaredNorm(); }

Vector grad_phi(const Matrix& J, const Vector& r) {
  if (J.rows() != r.size()) throw std::invalid_argument("grad_phi: dimension mismatch");
  return J.transpose() * r;
}

Matrix gn_hessian(const Matrix& J) {
  if (J.rows() != J.cols()) throw std::invalid_argument("gn_hessian: J is not square");
  return J.transpose() * J;
}

double quad_model(double phi_val, const Vector& g, const Matrix& H, const Vector& p) {
  return phi_val + g.dot(p) + 0.5 * p.dot(H * p);
}

LineSearchResult line_search(const Objective& objective, const Vector& g0, const Vector& u,
                             const Vector& p, const SolverConfig& cfg, const Gradient& grad) {
  LineSearchResult res;
  const double slope = g0.dot(p);
  if (!(slope < 0.0)) {
    res.descent = false;
    res.alpha = cfg.ls_alpha0 * std::pow(cfg.ls_tau, cfg.ls_max_backtracks);
    return res;
  }
  const double f0 = objective(u);
  ++res.evaluations;
  double alpha = cfg.ls_alpha0;
  for (int j = 0; j <= cfg.ls_max_backtracks; ++j) {
    const double f = objective(u + alpha * p);
    ++res.evaluations;
    if (f <= f0 + cfg.ls_c1 * alpha * slope) {
      res.armijo = true;
      break;
    }
    if (j < cfg.ls_max_backtracks) alpha *= cfg.ls_tau;
  }
  res.alpha = alpha;
  if (res.armijo && grad) {
    const Vector g1 = grad(u + alpha * p);
    res.curvature = -p.dot(g1) <= -cfg.ls_c2 * slope;
  }
  return res;
}

TrustRegionState adjust_delta(TrustRegionState state, double phi_prev, double phi_curr,
                              double model_pred) {
  const double den = phi_prev - model_pred;
  const double rho = den == 0.0 ? 1.0 : (phi_prev - phi_curr) / den;
  if (rho < 0.25)
    state.delta *= 0.25;
  else if (rho > 0.75)
    state.delta = std::min(2.0 * state.delta, state.delta_max);
  if (++state.adjust_count >= state.reset_every) {
    state.delta = state.delta_0;
    state.adjust_count = 0;
  }
  return state;
}

Trend detect_trend(const std::vector<double>& history, int window, double slope_tol) {
  for (double h : history)
    if (!std::isfinite(h)) return Trend::Diverging;
  if (window < 2 || static_cast<int>(history.size()) < window) return Trend::Improving;
  const auto first = history.end() - window;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < window; ++i) {
    const double x = i;
    const double y = std::log10(std::max(first[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (window * sxy - sx * sy) / (window * sxx - sx * sx);
  if (slope < -slope_tol) return Trend::Improving;
  if (slope > slope_tol) return Trend::Diverging;
  return Trend::Stalled;
}

std::optional<Matrix> broyden_update(const Matrix& J, const Vector& du, const Vector& dr,
                                     double eps) {
  const double den = du.squaredNorm();
  if (!(den > eps)) return std::nullopt;
  return Matrix(J + (dr - J * du) * du.transpose() / den);
}

std::optional<Matrix> broyden_inv_update(const Matrix& B, const Vector& du, const Vector& dr,
                                         double eps) {
  const Vector Bdr = B * dr;
  const double den = du.dot(Bdr);
  if (!(std::abs(den) > eps)) return std::nullopt;
  const Eigen::RowVectorXd duB = du.transpose() * B;
  return Matrix(B + (du - Bdr) * duB / den);
}

Matrix bfgs_update(const Matrix& H, const Vector& du, const Vector& dg) {
  const double sy = du.dot(dg);
  if (!(sy > 0.0)) return H;
  const double rho = 1.0 / sy;
  const Eigen::Index n = H.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix left = I - rho * du * dg.transpose();
  Matrix out = left * H * left.transpose() + rho * du * du.transpose();
  return 0.5 * (out + out.transpose());
}

Vector lbfgs_direction(const Vector& g, const std::vector<CurvaturePair>& history) {
  std::vector<const CurvaturePair*> kept;
  for (const auto& p : history)
    if (p.du.dot(p.dg) > 0.0) kept.push_back(&p);
  Vector q = g;
  if (kept.empty()) return -q;
  std::vector<double> alpha(kept.size());
  for (std::size_t i = kept.size(); i-- > 0;) {
    const auto& p = *kept[i];
    alpha[i] = p.du.dot(q) / p.du.dot(p.dg);
    q -= alpha[i] * p.dg;
  }
  const auto& last = *kept.back();
  q *= last.du.dot(last.dg) / last.dg.squaredNorm();
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& p = *kept[i];
    const double beta = p.dg.dot(q) / p.du.dot(p.dg);
    q += (alpha[i] - beta) * p.du;
  }
  return -q;
}

Vector step_adam(const Vector& u, AdamState& st, const Vector& g, const SolverConfig& cfg) {
  if (st.m1.size() != g.size()) st.m1 = Vector::Zero(g.size());
  if (st.m2.size() != g.size()) st.m2 = Vector::Zero(g.size());
  ++st.t;
  st.m1 = cfg.adam_beta1 * st.m1 + (1.0 - cfg.adam_beta1) * g;
  st.m2 = cfg.adam_beta2 * st.m2 + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
  const Vector mhat = st.m1 / (1.0 - std::pow(cfg.adam_beta1, st.t));
  const Vector vhat = st.m2 / (1.0 - std::pow(cfg.adam_beta2, st.t));
  return u - cfg.adam_alpha * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.adam_eps).matrix());
}

Vector step_adagrad(const Vector& u, Vector& G, const Vector& g, const SolverConfig& cfg) {
  if (G.size() != g.size()) G = Vector::Zero(g.size());
  G += g.cwiseProduct(g);
  return u - cfg.adagrad_alpha * g.cwiseQuotient((G.cwiseSqrt().array() + cfg.adagrad_eps).matrix());
}

}  // namespace czb::solvers
