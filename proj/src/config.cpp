#include "czbench/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace czb::config {

namespace {

using solvers::Method;
using solvers::SolverConfig;

json solver_block(const SolverConfig& c) {
  return json{{"method", solvers::to_string(c.method)},
              {"tol", c.tol},
              {"max_iters", c.max_iters},
              {"delta_0", c.delta_0},
              {"delta_max", c.delta_max},
              {"tr_reset_every", c.tr_reset_every},
              {"ls_tau", c.ls_tau},
              {"ls_c1", c.ls_c1},
              {"ls_c2", c.ls_c2},
              {"ls_alpha0", c.ls_alpha0},
              {"ls_max_backtracks", c.ls_max_backtracks},
              {"adam_alpha", c.adam_alpha},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"adagrad_alpha", c.adagrad_alpha},
              {"adagrad_eps", c.adagrad_eps},
              {"lbfgs_memory", c.lbfgs_memory},
              {"stall_window", c.stall_window},
              {"stall_slope_tol", c.stall_slope_tol},
              {"broyden_denom_eps", c.broyden_denom_eps},
              {"broyden_init", solvers::to_string(c.broyden_init)},
              {"picard_omega", c.picard_omega},
              {"gmres_tol", c.gmres_tol}};
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double num(const json& j, const std::string& key) {
  if (!j.is_number()) fail("'" + key + "' must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer() && !(j.is_number() && j.get<double>() == std::floor(j.get<double>())))
    fail("'" + key + "' must be an integer");
  return static_cast<int>(j.get<double>());
}

std::string str(const json& j, const std::string& key) {
  if (!j.is_string()) fail("'" + key + "' must be a string");
  return j.get<std::string>();
}

void check_keys(const json& doc, const json& known, const std::string& where) {
  if (!doc.is_object()) fail("'" + where + "' must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.contains(it.key()))
      fail("unknown configuration key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

SolverConfig patch_solver(SolverConfig c, const json& j, const std::string& where) {
  check_keys(j, solver_block(SolverConfig{}), where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    const std::string path = where + "." + k;
    if (k == "method") c.method = solvers::parse_method(str(v, path));
    else if (k == "tol") c.tol = num(v, path);
    else if (k == "max_iters") c.max_iters = integer(v, path);
    else if (k == "delta_0") c.delta_0 = num(v, path);
    else if (k == "delta_max") c.delta_max = num(v, path);
    else if (k == "tr_reset_every") c.tr_reset_every = integer(v, path);
    else if (k == "ls_tau") c.ls_tau = num(v, path);
    else if (k == "ls_c1") c.ls_c1 = num(v, path);
    else if (k == "ls_c2") c.ls_c2 = num(v, path);
    else if (k == "ls_alpha0") c.ls_alpha0 = num(v, path);
    else if (k == "ls_max_backtracks") c.ls_max_backtracks = integer(v, path);
    else if (k == "adam_alpha") c.adam_alpha = num(v, path);
    else if (k == "adam_beta1") c.adam_beta1 = num(v, path);
    else if (k == "adam_beta2") c.adam_beta2 = num(v, path);
    else if (k == "adam_eps") c.adam_eps = num(v, path);
    else if (k == "adagrad_alpha") c.adagrad_alpha = num(v, path);
    else if (k == "adagrad_eps") c.adagrad_eps = num(v, path);
    else if (k == "lbfgs_memory") c.lbfgs_memory = integer(v, path);
    else if (k == "stall_window") c.stall_window = integer(v, path);
    else if (k == "stall_slope_tol") c.stall_slope_tol = num(v, path);
    else if (k == "broyden_denom_eps") c.broyden_denom_eps = num(v, path);
    else if (k == "broyden_init") c.broyden_init = solvers::parse_broyden_init(str(v, path));
    else if (k == "picard_omega") c.picard_omega = num(v, path);
    else if (k == "gmres_tol") c.gmres_tol = num(v, path);
  }
  return c;
}

std::optional<std::pair<double, double>> range(const json& j, const std::string& key) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) fail("'" + key + "' must be null or [lo, hi]");
  const double lo = num(j[0], key), hi = num(j[1], key);
  if (!(lo < hi)) fail("'" + key + "' requires lo < hi");
  return std::make_pair(lo, hi);
}

}  // namespace

json solver_to_json(const SolverConfig& cfg) { return solver_block(cfg); }

json default_document() {
  SolverConfig base;
  json overrides = json::object();
  {
    json adam;
    adam["adam_alpha"] = 0.1;
    adam["max_iters"] = 5000;
    adam["stall_window"] = 100000;
    overrides["adam"] = adam;
    json adagrad;
    adagrad["adagrad_alpha"] = 1.0;
    adagrad["max_iters"] = 5000;
    adagrad["stall_window"] = 100000;
    overrides["adagrad"] = adagrad;
    json broyden;
    broyden["broyden_init"] = "exact";
    broyden["stall_window"] = 50;
    overrides["broyden"] = broyden;
    overrides["broyden_inv"] = broyden;
  }
  json methods = json::array();
  for (auto m : solvers::all_methods()) methods.push_back(solvers::to_string(m));
  const bench::CalibrationSpec cal;

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["n_elements"] = 2;
  doc["L"] = 1.0;
  doc["E"] = 1.0;
  doc["A"] = 1.0;
  doc["K_p"] = 100.0;
  doc["delta_0"] = 0.01;
  doc["delta_f"] = 0.2;
  doc["cz_fraction"] = 0.5;
  doc["u_right"] = nullptr;
  doc["case_id"] = "ItP";
  doc["solver"] = solver_block(base);
  doc["overrides"] = overrides;
  doc["bench"] = json{{"methods", methods},
                      {"cases", json::array({"ItP", "ItC"})},
                      {"meshes", json::array({"coarse", "fine"})},
                      {"fine_elements", 64}};
  doc["calibration"] = json{{"scan_step", cal.scan_step},
                            {"scan_count", cal.scan_count},
                            {"itp_d_lo", cal.itp_d_lo},
                            {"itp_d_hi", cal.itp_d_hi},
                            {"itp_d_target", cal.itp_d_target},
                            {"itc_margin", cal.itc_margin},
                            {"oracle_resolution", cal.oracle.resolution},
                            {"root_tol", cal.oracle.root_tol}};
  doc["surface"] = json{{"resolution", 201}, {"u1_range", nullptr}, {"u2_range", nullptr}};
  return doc;
}

json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open configuration file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail("configuration file '" + path + "' is not valid JSON: " + e.what());
  }
}

json merge_with_defaults(const json& user) {
  if (!user.is_object()) fail("configuration document must be a JSON object");
  json doc = default_document();
  check_keys(user, doc, "");
  doc.merge_patch(user);
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("override '" + assignment + "' is not key=value");
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }

  if (key == "case") key = "case_id";
  std::vector<std::string> path;
  if (key.find('.') == std::string::npos) {
    const json defaults = default_document();
    if (defaults.contains(key))
      path = {key};
    else if (defaults["solver"].contains(key))
      path = {"solver", key};
    else
      fail("unknown configuration key '" + key + "'");
  } else {
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) path.push_back(part);
  }

  json* node = &doc;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->is_object()) fail("override path '" + key + "' does not name an object");
    node = &(*node)[path[i]];
    if (node->is_null()) *node = json::object();
  }
  (*node)[path.back()] = value;
}

RunConfig parse(const json& doc) {
  const json known = default_document();
  check_keys(doc, known, "");
  json d = known;
  d.merge_patch(doc);
  // overrides are taken verbatim so that a merged-away entry stays removed
  d["overrides"] = doc.contains("overrides") && !doc["overrides"].is_null() ? doc["overrides"]
                                                                            : json::object();

  RunConfig rc;
  if (integer(d["schema_version"], "schema_version") != kSchemaVersion)
    fail("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  rc.n_elements = integer(d["n_elements"], "n_elements");
  rc.L = num(d["L"], "L");
  rc.material.E = num(d["E"], "E");
  rc.material.A = num(d["A"], "A");
  rc.law.K_p = num(d["K_p"], "K_p");
  rc.law.delta_0 = num(d["delta_0"], "delta_0");
  rc.law.delta_f = num(d["delta_f"], "delta_f");
  rc.cz_fraction = num(d["cz_fraction"], "cz_fraction");
  if (!d.value("u_right", json()).is_null()) rc.u_right = num(d["u_right"], "u_right");
  rc.case_id = fem::parse_case(str(d["case_id"], "case_id"));

  fem::validate(rc.material);
  fem::validate(rc.law, rc.material, rc.L);
  if (rc.n_elements < 2) fail("n_elements must be at least 2");

  rc.solver = patch_solver(SolverConfig{}, d["solver"], "solver");
  rc.solver.validate();

  check_keys(d["overrides"], [] {
    json names;
    for (auto m : solvers::all_methods()) names[solvers::to_string(m)] = nullptr;
    return names;
  }(), "overrides");
  for (auto it = d["overrides"].begin(); it != d["overrides"].end(); ++it) {
    if (it.value().is_null()) continue;
    const Method m = solvers::parse_method(it.key());
    SolverConfig c = patch_solver(rc.solver, it.value(), "overrides." + it.key());
    c.method = m;
    c.validate();
    rc.overrides[m] = c;
  }

  const json& b = d["bench"];
  check_keys(b, known["bench"], "bench");
  for (const auto& m : b["methods"]) rc.bench_methods.push_back(solvers::parse_method(str(m, "bench.methods")));
  for (const auto& c : b["cases"]) rc.bench_cases.push_back(fem::parse_case(str(c, "bench.cases")));
  for (const auto& k : b["meshes"]) rc.bench_meshes.push_back(bench::parse_mesh(str(k, "bench.meshes")));
  rc.fine_elements = integer(b["fine_elements"], "bench.fine_elements");
  if (rc.fine_elements < 2) fail("bench.fine_elements must be at least 2");

  const json& c = d["calibration"];
  check_keys(c, known["calibration"], "calibration");
  rc.calibration.scan_step = num(c["scan_step"], "calibration.scan_step");
  rc.calibration.scan_count = integer(c["scan_count"], "calibration.scan_count");
  rc.calibration.itp_d_lo = num(c["itp_d_lo"], "calibration.itp_d_lo");
  rc.calibration.itp_d_hi = num(c["itp_d_hi"], "calibration.itp_d_hi");
  rc.calibration.itp_d_target = num(c["itp_d_target"], "calibration.itp_d_target");
  rc.calibration.itc_margin = num(c["itc_margin"], "calibration.itc_margin");
  rc.calibration.oracle.resolution = integer(c["oracle_resolution"], "calibration.oracle_resolution");
  rc.calibration.oracle.root_tol = num(c["root_tol"], "calibration.root_tol");
  if (!(rc.calibration.scan_step > 0.0) || rc.calibration.scan_count < 1)
    fail("calibration scan needs scan_step > 0 and scan_count >= 1");
  if (!(0.0 <= rc.calibration.itp_d_lo && rc.calibration.itp_d_lo < rc.calibration.itp_d_hi &&
        rc.calibration.itp_d_hi <= 1.0))
    fail("calibration requires 0 <= itp_d_lo < itp_d_hi <= 1");
  if (rc.calibration.oracle.resolution < 2) fail("calibration.oracle_resolution must be >= 2");

  const json& s = d["surface"];
  check_keys(s, known["surface"], "surface");
  rc.surface_resolution = integer(s["resolution"], "surface.resolution");
  if (rc.surface_resolution < 2) fail("surface.resolution must be >= 2");
  rc.surface_u1 = range(s.value("u1_range", json()), "surface.u1_range");
  rc.surface_u2 = range(s.value("u2_range", json()), "surface.u2_range");
  return rc;
}

SolverConfig RunConfig::solver_for(Method m) const {
  auto it = overrides.find(m);
  SolverConfig c = it == overrides.end() ? solver : it->second;
  c.method = m;
  return c;
}

fem::Mesh1D RunConfig::mesh(int n) const { return fem::build_mesh(n, L, cz_fraction); }

fem::Problem RunConfig::problem(double ub) const {
  return fem::make_case(case_id, mesh(n_elements), material, law, ub);
}

bench::BenchMatrix RunConfig::matrix() const {
  bench::BenchMatrix mx;
  mx.methods = bench_methods;
  mx.cases = bench_cases;
  mx.meshes = bench_meshes;
  mx.base = solver;
  for (const auto& [m, c] : overrides)
    if (std::find(bench_methods.begin(), bench_methods.end(), m) != bench_methods.end())
      mx.overrides[m] = c;
  return mx;
}

bench::BenchSetup RunConfig::setup(const std::map<fem::CaseId, double>& ub) const {
  bench::BenchSetup s;
  s.material = material;
  s.law = law;
  s.L = L;
  s.cz_fraction = cz_fraction;
  s.coarse_elements = 2;
  s.fine_elements = fine_elements;
  s.u_right = ub;
  return s;
}

}  // namespace czb::config
