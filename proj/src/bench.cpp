#include <algorithm>
#include <cctype>
#include <cmath>

#include "czbench/bench.hpp"

namespace czb::bench {

SurfaceSpec SurfaceSpec::default_for(double u_right, int resolution) {
  SurfaceSpec s;
  s.u1_hi = s.u2_hi = 2.0 * u_right;
  s.resolution = resolution;
  return s;
}

double SurfaceGrid::u1(int i) const {
  return spec.u1_lo + (spec.u1_hi - spec.u1_lo) * i / (spec.resolution - 1);
}

double SurfaceGrid::u2(int j) const {
  return spec.u2_lo + (spec.u2_hi - spec.u2_lo) * j / (spec.resolution - 1);
}

SurfaceGrid sample_surface(const fem::Problem& problem, const SurfaceSpec& spec, Exec exec) {
  if (problem.n_free() != 2)
    throw std::invalid_argument("sample_surface: problem must have exactly 2 free DOFs");
  if (spec.resolution < 2) throw std::invalid_argument("sample_surface: resolution must be >= 2");
  SurfaceGrid g;
  g.spec = spec;
  const int n = spec.resolution;
  g.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  auto row = [&](int i) {
    Vector u(2);
    for (int j = 0; j < n; ++j) {
      u << g.u1(i), g.u2(j);
      g.values[static_cast<std::size_t>(i) * n + j] = problem.residual(u).norm();
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) row(i);
  } else {
    for (int i = 0; i < n; ++i) row(i);
  }
  return g;
}

std::vector<GridIndex> local_minima(const SurfaceGrid& grid) {
  std::vector<GridIndex> out;
  const int n = grid.spec.resolution;
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const double v = grid.at(i, j);
      bool lowest = true;
      for (int di = -1; di <= 1 && lowest; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (!(v <= grid.at(i + di, j + dj))) {
            lowest = false;
            break;
          }
        }
      if (lowest) out.push_back({i, j});
    }
  return out;
}

GridIndex nearest_index(const SurfaceGrid& grid, const Vector& u) {
  const auto& s = grid.spec;
  const int n = s.resolution;
  auto clampi = [n](double x) { return static_cast<int>(std::clamp<long>(std::lround(x), 0, n - 1)); };
  return {clampi((u(0) - s.u1_lo) / (s.u1_hi - s.u1_lo) * (n - 1)),
          clampi((u(1) - s.u2_lo) / (s.u2_hi - s.u2_lo) * (n - 1))};
}

std::vector<CondTracePoint> condition_trace(const fem::Problem& problem, solvers::Method method,
                                            solvers::SolverConfig cfg) {
  if (method != solvers::Method::Broyden && method != solvers::Method::BroydenInv)
    throw std::invalid_argument("condition_trace: method must be a Broyden variant");
  cfg.method = method;
  cfg.record_cond = true;
  const auto rep = solvers::solve(problem, cfg);
  std::vector<CondTracePoint> out;
  for (std::size_t k = 0; k < rep.cond_history.size(); ++k)
    out.push_back({static_cast<int>(k), rep.cond_history[k].kappa_exact,
                   rep.cond_history[k].kappa_estimate});
  return out;
}

std::string to_string(MeshKind m) { return m == MeshKind::Coarse ? "coarse" : "fine"; }

MeshKind parse_mesh(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "coarse") return MeshKind::Coarse;
  if (t == "fine") return MeshKind::Fine;
  throw ConfigError("unknown mesh '" + s + "' (expected coarse or fine)");
}

fem::Problem BenchSetup::problem(fem::CaseId c, MeshKind m) const {
  auto it = u_right.find(c);
  if (it == u_right.end())
    throw ConfigError("no prescribed displacement for case " + fem::to_string(c));
  const int n = m == MeshKind::Coarse ? coarse_elements : fine_elements;
  return fem::make_case(c, fem::build_mesh(n, L, cz_fraction), material, law, it->second);
}

solvers::SolverConfig BenchMatrix::config_for(solvers::Method m) const {
  auto it = overrides.find(m);
  solvers::SolverConfig cfg = it == overrides.end() ? base : it->second;
  cfg.method = m;
  return cfg;
}

void BenchMatrix::validate() const {
  for (const auto& [m, cfg] : overrides) {
    if (std::find(methods.begin(), methods.end(), m) == methods.end())
      throw ConfigError("override for unlisted method " + solvers::to_string(m));
    cfg.validate();
  }
  base.validate();
}

const BenchCell* BenchReport::find(solvers::Method m, fem::CaseId c, MeshKind k) const {
  for (const auto& cell : cells)
    if (cell.method == m && cell.case_id == c && cell.mesh == k) return &cell;
  return nullptr;
}

BenchReport run_matrix(const BenchMatrix& matrix, const BenchSetup& setup, Exec exec) {
  matrix.validate();
  BenchReport rep;
  for (auto m : matrix.methods)
    for (auto c : matrix.cases)
      for (auto k : matrix.meshes) rep.cells.push_back({m, c, k, setup.u_right.at(c), {}});

  // problems are built up front so workers share them read-only
  std::map<std::pair<fem::CaseId, MeshKind>, fem::Problem> problems;
  for (auto c : matrix.cases)
    for (auto k : matrix.meshes) problems.emplace(std::make_pair(c, k), setup.problem(c, k));

  const long n = static_cast<long>(rep.cells.size());
  auto run = [&](long i) {
    auto& cell = rep.cells[i];
    try {
      cell.report = solvers::solve(problems.at({cell.case_id, cell.mesh}),
                                   matrix.config_for(cell.method));
    } catch (const std::exception&) {
      cell.report = {};
      cell.report.method = cell.method;
      cell.report.status = solvers::Status::NumericalFailure;
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) run(i);
  } else {
    for (long i = 0; i < n; ++i) run(i);
  }
  return rep;
}

}  // namespace czb::bench
