#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "czbench/io.hpp"
#include "support.hpp"

using namespace czb;
using solvers::Method;
using solvers::Status;
using bench::MeshKind;
using fem::CaseId;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Shared {
  config::RunConfig rc;
  std::map<CaseId, bench::Calibration> cal;
  bench::BenchSetup setup;
  bench::BenchReport coarse;
  bench::BenchReport fine;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string cell(const bench::BenchReport& rep, Method m, CaseId c, MeshKind k) {
  const auto* x = rep.find(m, c, k);
  if (!x) return "missing";
  return fmt::format("{}:{}({})", solvers::to_string(m), solvers::to_string(x->report.status),
                     x->report.iterations);
}

bool converged(const bench::BenchReport& rep, Method m, CaseId c, MeshKind k) {
  const auto* x = rep.find(m, c, k);
  return x && x->report.status == Status::Converged;
}

int iterations(const bench::BenchReport& rep, Method m, CaseId c) {
  const auto* x = rep.find(m, c, MeshKind::Coarse);
  return x && x->report.status == Status::Converged ? x->report.iterations : -1;
}

Verdict criterion1() {
  std::mt19937 rng(20240601);
  int fails = 0;
  double worst_fd = 0, worst_secant = 0, worst_tr = 0;

  for (int t = 0; t < 100; ++t) {
    const auto p = testing::coarse(0.05 + 0.02 * t);
    const Vector u = testing::random_away_from_kinks(rng, p, 1e-4);
    const Matrix J = p.jacobian(u);
    const double rel = (J - testing::fd_jacobian(p, u, 1e-7)).norm() / J.norm();
    worst_fd = std::max(worst_fd, rel);
    if (rel > 1e-5) ++fails;
  }

  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 8;
    const Vector du = testing::random_vector(rng, n), dr = testing::random_vector(rng, n);
    const auto J1 = solvers::broyden_update(testing::random_matrix(rng, n), du, dr, 1e-14);
    const auto B1 = solvers::broyden_inv_update(
        testing::random_matrix(rng, n) + 3 * Matrix::Identity(n, n), du, dr, 1e-14);
    const Matrix A = testing::random_spd(rng, n);
    const Vector dg = A * du;
    const Matrix H1 = solvers::bfgs_update(testing::random_spd(rng, n) / n, du, dg);
    double e = 0;
    if (J1) e = std::max(e, (*J1 * du - dr).norm() / dr.norm());
    if (B1) e = std::max(e, (*B1 * dr - du).norm() / std::max(du.norm(), B1->norm() * dr.norm()));
    e = std::max(e, (H1 * dg - du).norm() / std::max(du.norm(), H1.norm() * dg.norm()));
    worst_secant = std::max(worst_secant, e);
    if (e > 1e-12 || !J1) ++fails;
  }

  int armijo = 0, armijo_bad = 0, tr_steps = 0;
  for (CaseId id : {CaseId::ItP, CaseId::ItC}) {
    const double ub = testing::load(id);
    for (const auto& p : {testing::coarse(ub, id), testing::fine(ub, id)}) {
      const auto sys = solvers::as_system(p);
      for (Method m : {Method::BFGS, Method::LBFGS, Method::Dogleg, Method::Steihaug}) {
        solvers::SolverConfig c;
        c.method = m;
        c.record_steps = true;
        c.max_iters = 300;
        const auto rep = solvers::solve(sys, c);
        for (const auto& st : rep.steps) {
          for (const auto& s : st.searches) {
            if (!s.armijo) continue;
            const Vector r0 = p.residual(s.u);
            const Vector g0 = solvers::grad_phi(p.jacobian(s.u), r0);
            ++armijo;
            if (solvers::phi(p.residual(s.u + s.alpha * s.p)) >
                solvers::phi(r0) + c.ls_c1 * s.alpha * g0.dot(s.p))
              ++armijo_bad;
          }
          if (m == Method::Dogleg || m == Method::Steihaug) {
            ++tr_steps;
            const double over = (st.u_after - st.u_before).norm() - st.delta;
            worst_tr = std::max(worst_tr, over);
            if (over > 1e-12) ++fails;
          }
        }
      }
    }
  }
  fails += armijo_bad;

  int psd_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const Matrix H = solvers::gn_hessian(testing::random_matrix(rng, 1 + t % 10));
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    if (es.eigenvalues().minCoeff() < -1e-12 * (1 + H.norm())) ++psd_bad;
  }
  fails += psd_bad;

  return {fails == 0,
          fmt::format("fd rel {:.2e}, secant rel {:.2e}, armijo {}/{} ok, tr steps {} (max excess {:.1e}), "
                      "psd failures {}",
                      worst_fd, worst_secant, armijo - armijo_bad, armijo, tr_steps, worst_tr, psd_bad)};
}

Verdict criterion2() {
  const auto p = testing::coarse(0.01, CaseId::ItP, testing::rigid_law());
  bool ok = true;
  std::string detail;
  for (Method m : {Method::NewtonRF, Method::Dogleg}) {
    solvers::SolverConfig c;
    c.method = m;
    c.tol = 1e-8;
    const auto rep = solvers::solve(p, c);
    const bool good = rep.status == Status::Converged && rep.iterations == 1 &&
                      rep.final_residual() <= 1e-8;
    ok = ok && good;
    detail += fmt::format("{} {} it, |r| {:.1e}; ", solvers::to_string(m), rep.iterations,
                          rep.final_residual());
  }
  solvers::SolverConfig c;
  c.method = Method::Steihaug;
  c.tol = 1e-8;
  c.record_steps = true;
  const auto rep = solvers::solve(p, c);
  int inner = 0;
  for (const auto& s : rep.steps) inner += s.inner_iterations;
  const bool good = rep.status == Status::Converged && inner <= p.n_free();
  ok = ok && good;
  detail += fmt::format("steihaug {} inner CG steps over {} outer (limit {}), status {}", inner,
                        rep.iterations, p.n_free(), solvers::to_string(rep.status));
  return {ok, detail};
}

Verdict criterion3(const Shared& s) {
  const auto& r = s.coarse;
  const auto P = CaseId::ItP, C = CaseId::ItC;
  const auto K = MeshKind::Coarse;
  std::vector<std::string> bad;
  auto expect = [&](Method m, CaseId c, bool want) {
    if (converged(r, m, c, K) != want)
      bad.push_back(fmt::format("{} {} expected {}", cell(r, m, c, K), fem::to_string(c),
                                want ? "Converged" : "non-Converged"));
  };
  for (Method m : {Method::NewtonRF, Method::Picard}) {
    expect(m, P, true);
    expect(m, C, false);
  }
  for (Method m : {Method::Dogleg, Method::Steihaug, Method::Broyden, Method::BroydenInv,
                   Method::LBFGS, Method::Adam, Method::Adagrad}) {
    expect(m, P, true);
    expect(m, C, true);
  }
  for (Method m : {Method::Adam, Method::Adagrad})
    for (CaseId c : {P, C}) {
      const auto* x = r.find(m, c, K);
      if (x && x->report.iterations > 5000) bad.push_back(cell(r, m, c, K) + " over 5000");
    }
  std::string detail;
  for (const auto& b : bad) detail += b + "; ";
  if (bad.empty()) detail = "pattern matches";
  return {bad.empty(), detail};
}

Verdict criterion4(const Shared& s) {
  const int nw = iterations(s.coarse, Method::NewtonRF, CaseId::ItP);
  const int lb = iterations(s.coarse, Method::LBFGS, CaseId::ItP);
  const int st = iterations(s.coarse, Method::Steihaug, CaseId::ItP);
  const int dl = iterations(s.coarse, Method::Dogleg, CaseId::ItP);
  const bool ok = nw > 0 && lb > 0 && st > 0 && dl > 0 && nw <= lb && lb <= st && dl == nw;
  return {ok, fmt::format("newton {} <= lbfgs {} <= steihaug {}, dogleg {} == newton {}", nw, lb,
                          st, dl, nw)};
}

Verdict criterion5(const Shared& s) {
  const auto& r = s.fine;
  const auto K = MeshKind::Fine;
  bool ok = true;
  std::string detail;
  for (Method m : {Method::Broyden, Method::BroydenInv}) {
    const auto* x = r.find(m, CaseId::ItC, K);
    int hit = -1;
    if (x)
      for (std::size_t k = 0; k < x->report.residual_history.size() && k <= 100; ++k)
        if (x->report.residual_history[k] < 1e-3) {
          hit = static_cast<int>(k);
          break;
        }
    ok = ok && hit >= 0;
    detail += fmt::format("{} ItC |r|<1e-3 at iteration {}; ", solvers::to_string(m), hit);
  }
  const bool newton = !converged(r, Method::NewtonRF, CaseId::ItC, K);
  const bool picard = !converged(r, Method::Picard, CaseId::ItP, K) &&
                      !converged(r, Method::Picard, CaseId::ItC, K);
  ok = ok && newton && picard;
  detail += cell(r, Method::NewtonRF, CaseId::ItC, K) + " ItC; " +
            cell(r, Method::Picard, CaseId::ItP, K) + " ItP; " +
            cell(r, Method::Picard, CaseId::ItC, K) + " ItC";
  return {ok, detail};
}

Verdict criterion6(const Shared& s) {
  const auto& cal = s.cal.at(CaseId::ItC);
  const auto p = s.rc.mesh(2);
  const auto prob = fem::make_case(CaseId::ItC, p, s.rc.material, s.rc.law, cal.u_right);
  const auto grid = bench::sample_surface(prob, bench::SurfaceSpec::default_for(cal.u_right, 201));
  std::vector<bench::GridIndex> trough;
  for (const auto& m : bench::local_minima(grid)) {
    bool root = false;
    for (const auto& r : cal.roots) {
      const auto ri = bench::nearest_index(grid, r.u);
      if (std::abs(ri.i - m.i) <= 1 && std::abs(ri.j - m.j) <= 1) root = true;
    }
    if (!root) trough.push_back(m);
  }
  auto c = s.rc.solver_for(Method::NewtonRF);
  c.record_steps = true;
  const auto rep = solvers::solve(prob, c);
  int visits = 0;
  std::vector<Vector> iterates{Vector::Zero(2)};
  for (const auto& st : rep.steps) iterates.push_back(st.u_after);
  for (const auto& u : iterates) {
    const auto k = bench::nearest_index(grid, u);
    for (const auto& m : trough)
      if (std::abs(k.i - m.i) <= 1 && std::abs(k.j - m.j) <= 1) {
        ++visits;
        break;
      }
  }
  std::string where;
  for (const auto& m : trough) where += fmt::format("({:.4f},{:.4f}) ", grid.u1(m.i), grid.u2(m.j));
  return {!trough.empty() && visits > 0,
          fmt::format("{} non-root local minima {}; newton {} iterates, {} in a trough cell neighbourhood",
                      trough.size(), where, iterates.size(), visits)};
}

Verdict criterion7(const Shared& s) {
  const auto prob = fem::make_case(CaseId::ItC, s.rc.mesh(2), s.rc.material, s.rc.law,
                                   s.cal.at(CaseId::ItC).u_right);
  const auto tr = bench::condition_trace(prob, Method::Broyden, s.rc.solver_for(Method::Broyden));
  auto argmax = [&](auto get) {
    int best = -1;
    double bv = -1;
    for (std::size_t k = 1; k < tr.size(); ++k) {
      const double d = std::abs(get(tr[k]) - get(tr[k - 1]));
      if (std::isfinite(d) && d > bv) {
        bv = d;
        best = static_cast<int>(k);
      }
    }
    return best;
  };
  const int ex = argmax([](const bench::CondTracePoint& p) { return p.kappa_exact; });
  const int es = argmax([](const bench::CondTracePoint& p) { return p.kappa_estimate; });
  return {ex >= 0 && es > ex,
          fmt::format("{} trace points; argmax |dk_exact| at {}, argmax |dk_estimate| at {}",
                      tr.size(), ex, es)};
}

Verdict criterion8(const Shared& s) {
  double worst = 0;
  int n = 0;
  bool ok = true;
  for (const auto& c : s.coarse.cells) {
    if (c.report.status != Status::Converged) continue;
    double best = INFINITY;
    for (const auto& r : s.cal.at(c.case_id).roots) best = std::min(best, (c.report.final_u - r.u).norm());
    worst = std::max(worst, best);
    ++n;
    if (!(best <= 1e-4)) ok = false;
  }
  return {ok && n > 0, fmt::format("{} converged coarse cells, max distance to oracle root {:.2e}", n, worst)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict criterion9(const Shared& s) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / fmt::format("czbench_accept_{}", ::getpid());
  fs::remove_all(root);
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    const auto cal = bench::calibrate_all(s.rc.mesh(2), s.rc.material, s.rc.law, s.rc.calibration);
    std::map<CaseId, double> ub;
    for (const auto& [id, c] : cal) ub[id] = c.u_right;
    const auto setup = s.rc.setup(ub);
    io::write_bench(d, bench::run_matrix(s.rc.matrix(), setup), setup, cal);
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto other = dirs[1] / fs::relative(e.path(), dirs[0]);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  int files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[1]))
    if (e.is_regular_file()) ++files_b;
  fs::remove_all(root);
  return {files > 0 && differ == 0 && files == files_b,
          fmt::format("{} files compared, {} differ", files, differ)};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failed = 0;
  auto report = [&](int n, double limit, const std::function<Verdict()>& f) {
    const auto t0 = clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    const bool pass = v.pass && (limit <= 0 || dt < limit);
    if (!pass) ++failed;
    std::string lim = limit > 0 ? fmt::format(" < {:g}s", limit) : "";
    std::cout << fmt::format("criterion {}: {}  {}  [{:.2f}s{}]", n, pass ? "PASS" : "FAIL",
                             v.detail, dt, lim)
              << std::endl;
  };

  Shared s;
  s.rc = config::parse(config::default_document());

  report(1, 10.0, criterion1);
  report(2, 1.0, criterion2);

  const auto t_cal = clock::now();
  s.cal = bench::calibrate_all(s.rc.mesh(2), s.rc.material, s.rc.law, s.rc.calibration);
  const double cal_time = seconds_since(t_cal);
  std::cout << fmt::format("calibration: ItP u_right {}, ItC u_right {}  [{:.2f}s]",
                           s.cal.at(CaseId::ItP).u_right, s.cal.at(CaseId::ItC).u_right, cal_time)
            << std::endl;
  s.setup = s.rc.setup({{CaseId::ItP, s.cal.at(CaseId::ItP).u_right},
                        {CaseId::ItC, s.cal.at(CaseId::ItC).u_right}});
  auto matrix = s.rc.matrix();

  report(3, 60.0, [&] {
    const auto t0 = clock::now();
    matrix.meshes = {MeshKind::Coarse};
    s.coarse = bench::run_matrix(matrix, s.setup);
    auto v = criterion3(s);
    // calibration is part of this criterion's budget
    if (seconds_since(t0) + cal_time >= 60.0) v.pass = false;
    return v;
  });
  report(4, 0, [&] { return criterion4(s); });
  report(5, 120.0, [&] {
    matrix.meshes = {MeshKind::Fine};
    s.fine = bench::run_matrix(matrix, s.setup);
    return criterion5(s);
  });
  report(6, 30.0, [&] { return criterion6(s); });
  report(7, 0, [&] { return criterion7(s); });
  report(8, 0, [&] { return criterion8(s); });
  report(9, 0, [&] { return criterion9(s); });

  std::cout << fmt::format("{} of 9 criteria failed", failed) << std::endl;
  return failed == 0 ? 0 : 1;
}
