#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "czbench/bench.hpp"

namespace czb::config {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

struct RunConfig {
  int n_elements = 2;
  double L = 1.0;
  double cz_fraction = 0.5;
  fem::Material material;
  fem::CohesiveLaw law;
  std::optional<double> u_right;
  fem::CaseId case_id = fem::CaseId::ItP;

  solvers::SolverConfig solver;
  std::map<solvers::Method, solvers::SolverConfig> overrides;

  std::vector<solvers::Method> bench_methods;
  std::vector<fem::CaseId> bench_cases;
  std::vector<bench::MeshKind> bench_meshes;
  int fine_elements = 64;

  bench::CalibrationSpec calibration;

  int surface_resolution = 201;
  std::optional<std::pair<double, double>> surface_u1;
  std::optional<std::pair<double, double>> surface_u2;

  // solver settings for one method: the base block patched by its override
  solvers::SolverConfig solver_for(solvers::Method m) const;
  fem::Mesh1D mesh(int n_elements) const;
  fem::Problem problem(double u_right) const;
  bench::BenchMatrix matrix() const;
  bench::BenchSetup setup(const std::map<fem::CaseId, double>& u_right) const;
};

// The shipped defaults, identical to configs/default.json.
json default_document();
json read_document(const std::string& path);
// defaults merged with a user document (RFC 7396 merge patch)
json merge_with_defaults(const json& user);
// "key=value"; keys are dotted paths, bare solver keys and "case"/"method" are
// accepted as shorthands. Values parse as JSON when possible, else as strings.
void apply_override(json& doc, const std::string& assignment);
// Rejects unknown keys and invalid values with ConfigError.
RunConfig parse(const json& doc);

json solver_to_json(const solvers::SolverConfig& cfg);

}  // namespace czb::config
