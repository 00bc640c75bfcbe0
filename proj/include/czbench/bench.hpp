#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "czbench/fem.hpp"
#include "czbench/solvers.hpp"

namespace czb::bench {

// Serial is the reference; Parallel runs the same loops under OpenMP.
enum class Exec { Serial, Parallel };

struct OracleSpec {
  int resolution = 201;
  // acceptance threshold for a root
  double root_tol = 1e-9;
  // cells surviving one refinement level; exceeding it is an error
  long max_cells = 2'000'000;
};

struct OracleRoot {
  Vector u;
  double residual_norm = 0.0;
  double opening = 0.0;
  double damage = 0.0;
};

// Every root of a 2-DOF problem in the window [u_right/2 - w, u_right/2 + w]^2,
// w = max(u_right, 1e-3 L). Global grid pass, then Lipschitz-certified cell
// subdivision; a cell is dropped only when no root can lie inside it.
std::vector<OracleRoot> grid_oracle(const fem::Problem& problem, const OracleSpec& spec = {},
                                    Exec exec = Exec::Parallel);

struct CalibrationSpec {
  // scanned loads are k * scan_step * L for k = 1..scan_count
  double scan_step = 0.01;
  int scan_count = 300;
  double itp_d_lo = 0.3;
  double itp_d_hi = 0.7;
  double itp_d_target = 0.5;
  double itc_margin = 1.5;
  OracleSpec oracle;
};

struct Calibration {
  fem::CaseId case_id = fem::CaseId::ItP;
  double u_right = 0.0;
  std::vector<OracleRoot> roots;
  double scan_lo = 0.0;
  double scan_hi = 0.0;
};

// Calibrates on the given (2-DOF) mesh. Throws ConfigError when no scanned
// load qualifies.
Calibration calibrate_case(fem::CaseId case_id, const fem::Mesh1D& mesh,
                           const fem::Material& material, const fem::CohesiveLaw& law,
                           const CalibrationSpec& spec = {}, Exec exec = Exec::Parallel);

// One scan serving both cases.
std::map<fem::CaseId, Calibration> calibrate_all(const fem::Mesh1D& mesh,
                                                 const fem::Material& material,
                                                 const fem::CohesiveLaw& law,
                                                 const CalibrationSpec& spec = {},
                                                 Exec exec = Exec::Parallel);

struct SurfaceSpec {
  double u1_lo = 0.0, u1_hi = 1.0;
  double u2_lo = 0.0, u2_hi = 1.0;
  int resolution = 201;

  // [0, 2 u_right] on both axes
  static SurfaceSpec default_for(double u_right, int resolution = 201);
};

struct SurfaceGrid {
  SurfaceSpec spec;
  // values[i * resolution + j] = ||r(u1_i, u2_j)||
  std::vector<double> values;

  double u1(int i) const;
  double u2(int j) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * spec.resolution + j]; }
};

SurfaceGrid sample_surface(const fem::Problem& problem, const SurfaceSpec& spec,
                           Exec exec = Exec::Parallel);

struct GridIndex {
  int i = 0;
  int j = 0;
};
// interior points no higher than any of their eight neighbours
std::vector<GridIndex> local_minima(const SurfaceGrid& grid);
// grid point nearest to u
GridIndex nearest_index(const SurfaceGrid& grid, const Vector& u);

struct CondTracePoint {
  int iteration = 0;
  double kappa_exact = 0.0;
  double kappa_estimate = 0.0;
};

std::vector<CondTracePoint> condition_trace(const fem::Problem& problem, solvers::Method method,
                                            solvers::SolverConfig cfg);

enum class MeshKind { Coarse, Fine };
std::string to_string(MeshKind m);
MeshKind parse_mesh(const std::string& s);

struct BenchSetup {
  fem::Material material;
  fem::CohesiveLaw law;
  double L = 1.0;
  double cz_fraction = 0.5;
  int coarse_elements = 2;
  int fine_elements = 64;
  std::map<fem::CaseId, double> u_right;

  fem::Problem problem(fem::CaseId c, MeshKind m) const;
};

struct BenchMatrix {
  std::vector<solvers::Method> methods;
  std::vector<fem::CaseId> cases;
  std::vector<MeshKind> meshes;
  solvers::SolverConfig base;
  std::map<solvers::Method, solvers::SolverConfig> overrides;

  solvers::SolverConfig config_for(solvers::Method m) const;
  void validate() const;
};

struct BenchCell {
  solvers::Method method;
  fem::CaseId case_id;
  MeshKind mesh;
  double u_right = 0.0;
  solvers::SolveReport report;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  const BenchCell* find(solvers::Method m, fem::CaseId c, MeshKind k) const;
};

// Cells come back in (method, case, mesh) order whatever the execution mode.
BenchReport run_matrix(const BenchMatrix& matrix, const BenchSetup& setup,
                       Exec exec = Exec::Parallel);

}  // namespace czb::bench
