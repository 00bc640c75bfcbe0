#include <cmath>

#include "czbench/solvers.hpp"

namespace czb::solvers {

namespace {

Vector evaluate(const System& sys, const Vector& u, Counters* c) {
  if (c) ++c->residual_evals;
  return sys.residual(u);
}

Matrix jacobian(const System& sys, const Vector& u, Counters* c) {
  if (c) ++c->jacobian_evals;
  return sys.jacobian(u);
}

Vector inner_solve(const Matrix& A, const Vector& b, const linalg::GmresPolicy& policy,
                   Counters* c) {
  if (c) ++c->linear_solves;
  auto res = linalg::gmres_solve(A, b, policy);
  if (!res.converged || !res.x.allFinite())
    throw NumericalFailure("inner GMRES solve failed (relative residual " +
                           std::to_string(res.rel_residual) + ")");
  return res.x;
}

Objective merit(const System& sys, Counters* c) {
  return [&sys, c](const Vector& v) { return phi(evaluate(sys, v, c)); };
}

// largest tau >= 0 with ||z + tau d|| = delta
Vector to_boundary(const Vector& z, const Vector& d, double delta) {
  const double a = d.squaredNorm();
  const double b = 2.0 * z.dot(d);
  const double c = z.squaredNorm() - delta * delta;
  const double disc = std::max(b * b - 4.0 * a * c, 0.0);
  const double tau = (-b + std::sqrt(disc)) / (2.0 * a);
  return z + tau * d;
}

}  // namespace

Vector step_picard(const Vector& u, const Vector& r, const System& sys, double omega) {
  return u - (omega / sys.stiffness) * r;
}

Vector step_newton(const Vector& u, const Vector& r, const System& sys,
                   const linalg::GmresPolicy& policy, Counters* counters) {
  const Matrix J = jacobian(sys, u, counters);
  return u + inner_solve(J, -r, policy, counters);
}

TrustStep step_dogleg(const Vector& u, const Vector& r, const System& sys, TrustRegionState tr,
                      const SolverConfig& cfg, Counters* counters) {
  TrustStep out;
  const Matrix J = jacobian(sys, u, counters);
  const Vector g = grad_phi(J, r);
  const double phi0 = phi(r);
  const double delta = tr.delta;

  const Vector pg = -g;
  const auto ls = line_search(merit(sys, counters), g, u, pg, cfg);
  out.searches.push_back({u, pg, ls.alpha, ls.armijo});
  const Vector pc = ls.alpha * pg;
  const Vector pn = inner_solve(J, -r, linalg::GmresPolicy{cfg.gmres_tol, 0}, counters);

  Vector step;
  if (pn.norm() <= delta) {
    step = pn;
    out.newton_step = true;
  } else if (pc.norm() >= delta) {
    step = pc * (delta / pc.norm());
  } else {
    const Vector w = pn - pc;
    const double a = w.squaredNorm();
    const double b = 2.0 * pc.dot(w);
    const double c = pc.squaredNorm() - delta * delta;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || a == 0.0) {
      step = pc * (delta / pc.norm());
      out.flagged = true;
    } else {
      const double tau = (-b + std::sqrt(disc)) / (2.0 * a);
      step = pc + tau * w;
    }
  }

  const double model = phi0 + g.dot(step) + 0.5 * (J * step).squaredNorm();
  out.u = u + step;
  out.r = evaluate(sys, out.u, counters);
  out.radius = delta;
  out.step_norm = step.norm();
  out.tr = adjust_delta(tr, phi0, phi(out.r), model);
  return out;
}

TrustStep step_steihaug(const Vector& u, const Vector& r, const System& sys, TrustRegionState tr,
                        const SolverConfig& cfg, Counters* counters) {
  TrustStep out;
  const Matrix J = jacobian(sys, u, counters);
  const Vector g = grad_phi(J, r);
  const Matrix H = gn_hessian(J);
  const double phi0 = phi(r);
  const double delta = tr.delta;
  const Eigen::Index n = u.size();

  Vector z = Vector::Zero(n);
  Vector res = -g;
  Vector d = res;
  Vector zn = z;
  Vector step;
  bool done = g.norm() == 0.0;
  if (done) step = z;

  for (Eigen::Index j = 0; j < n && !done; ++j) {
    ++out.inner_iterations;
    const Vector Hd = H * d;
    const double curv = d.dot(Hd);
    if (curv <= 0.0) {
      step = to_boundary(z, d, delta);
      done = true;
      break;
    }
    Vector gz = g;
    if (j > 0) {
      const Vector uz = u + z;
      gz = grad_phi(jacobian(sys, uz, counters), evaluate(sys, uz, counters));
    }
    const Vector uz = u + z;
    const auto ls = line_search(merit(sys, counters), gz, uz, d, cfg);
    out.searches.push_back({uz, d, ls.alpha, ls.armijo});
    zn = z + ls.alpha * d;
    if (zn.norm() >= delta) {
      step = to_boundary(z, d, delta);
      done = true;
      break;
    }
    const Vector res_n = res - ls.alpha * Hd;
    if (res_n.norm() <= 1e-10 * g.norm()) {
      step = zn;
      done = true;
      break;
    }
    const double beta = res_n.squaredNorm() / res.squaredNorm();
    d = res_n + beta * d;
    res = res_n;
    z = zn;
  }
  if (!done) {
    // loop exhausted: reset the region and take the accumulated step
    step = zn;
    tr.delta = tr.delta_0;
    tr.adjust_count = 0;
    out.flagged = true;
  }

  const double model = quad_model(phi0, g, H, step);
  out.u = u + step;
  out.r = evaluate(sys, out.u, counters);
  out.radius = delta;
  out.step_norm = step.norm();
  out.tr = adjust_delta(tr, phi0, phi(out.r), model);
  return out;
}

SolveReport solve(const fem::Problem& problem, const SolverConfig& cfg,
                  const std::optional<Vector>& u0) {
  return solve(as_system(problem), cfg, u0);
}

SolveReport solve(const System& sys, const SolverConfig& cfg, const std::optional<Vector>& u0) {
  cfg.validate();
  SolveReport rep;
  rep.method = cfg.method;
  Counters& cnt = rep.counters;
  const int n = sys.n;
  const linalg::GmresPolicy policy{cfg.gmres_tol, 0};

  Vector u = u0 ? *u0 : Vector::Zero(n);
  if (u.size() != n) throw std::invalid_argument("solve: initial guess has wrong length");
  Vector r = evaluate(sys, u, &cnt);
  rep.residual_history.push_back(r.norm());

  const bool broyden = cfg.method == Method::Broyden || cfg.method == Method::BroydenInv;
  Matrix Jest, Best;
  AdamState adam;
  Vector G;
  Matrix Hinv;
  std::vector<CurvaturePair> pairs;
  Vector g;
  TrustRegionState tr = TrustRegionState::from(cfg);
  bool failed = false;

  auto cond_sample = [&](const Vector& at) {
    const double ke = linalg::condition_number(sys.jacobian(at));
    const double ks = linalg::condition_number(cfg.method == Method::Broyden ? Jest : Best);
    rep.cond_history.push_back({ke, ks});
  };

  try {
    if (broyden) {
      if (cfg.broyden_init == BroydenInit::ExactJacobian)
        Jest = jacobian(sys, u, &cnt);
      else
        Jest = sys.stiffness * Matrix::Identity(n, n);
      if (cfg.method == Method::BroydenInv) {
        Eigen::FullPivLU<Matrix> lu(Jest);
        if (!lu.isInvertible()) throw NumericalFailure("initial Broyden estimate is singular");
        Best = lu.inverse();
      }
    }
    if (cfg.method == Method::BFGS || cfg.method == Method::LBFGS) {
      g = grad_phi(jacobian(sys, u, &cnt), r);
      Hinv = Matrix::Identity(n, n);
    }
  } catch (const NumericalFailure&) {
    rep.status = Status::NumericalFailure;
    rep.final_u = u;
    return rep;
  }

  const Objective merit_fn = merit(sys, &cnt);

  while (true) {
    const double rn = rep.residual_history.back();
    if (!std::isfinite(rn) || !u.allFinite()) {
      rep.status = Status::NumericalFailure;
      break;
    }
    if (rn < cfg.tol) {
      rep.status = Status::Converged;
      break;
    }
    if (failed) {
      rep.status = Status::NumericalFailure;
      break;
    }
    const Trend trend = detect_trend(rep.residual_history, cfg.stall_window, cfg.stall_slope_tol);
    if (trend == Trend::Diverging) {
      rep.status = Status::Diverged;
      break;
    }
    if (trend == Trend::Stalled) {
      rep.status = Status::Stalled;
      break;
    }
    if (rep.iterations >= cfg.max_iters) {
      rep.status = Status::MaxIters;
      break;
    }
    if (broyden && cfg.record_cond) cond_sample(u);

    StepRecord rec;
    if (cfg.record_steps) rec.u_before = u;
    Vector u_next;
    Vector r_next;
    try {
      switch (cfg.method) {
        case Method::Picard:
          u_next = step_picard(u, r, sys, cfg.picard_omega);
          r_next = evaluate(sys, u_next, &cnt);
          break;
        case Method::NewtonRF:
          u_next = step_newton(u, r, sys, policy, &cnt);
          r_next = evaluate(sys, u_next, &cnt);
          break;
        case Method::Broyden:
        case Method::BroydenInv: {
          Vector du;
          if (cfg.method == Method::Broyden)
            du = inner_solve(Jest, -r, policy, &cnt);
          else
            du = -(Best * r);
          u_next = u + du;
          r_next = evaluate(sys, u_next, &cnt);
          const Vector dr = r_next - r;
          auto upd = cfg.method == Method::Broyden
                         ? broyden_update(Jest, du, dr, cfg.broyden_denom_eps)
                         : broyden_inv_update(Best, du, dr, cfg.broyden_denom_eps);
          if (!upd)
            failed = true;
          else if (cfg.method == Method::Broyden)
            Jest = std::move(*upd);
          else
            Best = std::move(*upd);
          break;
        }
        case Method::Adam:
        case Method::Adagrad: {
          const Vector gk = grad_phi(jacobian(sys, u, &cnt), r);
          u_next = cfg.method == Method::Adam ? step_adam(u, adam, gk, cfg)
                                              : step_adagrad(u, G, gk, cfg);
          r_next = evaluate(sys, u_next, &cnt);
          break;
        }
        case Method::BFGS:
        case Method::LBFGS: {
          const Vector p = cfg.method == Method::BFGS ? Vector(-(Hinv * g))
                                                      : lbfgs_direction(g, pairs);
          const auto ls = line_search(merit_fn, g, u, p, cfg);
          if (cfg.record_steps) rec.searches.push_back({u, p, ls.alpha, ls.armijo});
          u_next = u + ls.alpha * p;
          r_next = evaluate(sys, u_next, &cnt);
          const Vector g_next = grad_phi(jacobian(sys, u_next, &cnt), r_next);
          const Vector du = u_next - u;
          const Vector dg = g_next - g;
          if (cfg.method == Method::BFGS) {
            Hinv = bfgs_update(Hinv, du, dg);
          } else if (du.dot(dg) > 0.0) {
            pairs.push_back({du, dg});
            if (static_cast<int>(pairs.size()) > cfg.lbfgs_memory) pairs.erase(pairs.begin());
          }
          g = g_next;
          break;
        }
        case Method::Dogleg:
        case Method::Steihaug: {
          TrustStep ts = cfg.method == Method::Dogleg ? step_dogleg(u, r, sys, tr, cfg, &cnt)
                                                      : step_steihaug(u, r, sys, tr, cfg, &cnt);
          u_next = std::move(ts.u);
          r_next = std::move(ts.r);
          tr = ts.tr;
          rec.delta = ts.radius;
          rec.inner_iterations = ts.inner_iterations;
          if (cfg.record_steps) rec.searches = std::move(ts.searches);
          break;
        }
      }
    } catch (const NumericalFailure&) {
      rep.status = Status::NumericalFailure;
      break;
    } catch (const linalg::SingularMatrixError&) {
      rep.status = Status::NumericalFailure;
      break;
    }

    u = std::move(u_next);
    r = std::move(r_next);
    ++rep.iterations;
    rep.residual_history.push_back(r.norm());
    if (cfg.record_steps) {
      rec.u_after = u;
      rep.steps.push_back(std::move(rec));
    }
  }

  if (broyden && cfg.record_cond && rep.status != Status::NumericalFailure) cond_sample(u);
  rep.final_u = u;
  return rep;
}

}  // namespace czb::solvers
