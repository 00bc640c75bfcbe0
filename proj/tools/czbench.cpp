#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "czbench/config.hpp"
#include "czbench/io.hpp"

namespace {

using namespace czb;
namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

config::RunConfig load(const Options& o) {
  config::json doc = o.config_path.empty() ? config::default_document()
                                           : config::merge_with_defaults(config::read_document(o.config_path));
  for (const auto& a : o.overrides) config::apply_override(doc, a);
  return config::parse(doc);
}

void emit(const Options& o, const std::string& content) {
  if (o.out.empty() || o.out == "-")
    std::cout << content;
  else
    io::atomic_write(o.out, content);
}

std::map<fem::CaseId, bench::Calibration> calibrate(const config::RunConfig& rc) {
  return bench::calibrate_all(rc.mesh(2), rc.material, rc.law, rc.calibration);
}

double load_for(const config::RunConfig& rc, fem::CaseId id) {
  if (rc.u_right) return *rc.u_right;
  return bench::calibrate_case(id, rc.mesh(2), rc.material, rc.law, rc.calibration).u_right;
}

int run_calibrate(const Options& o) {
  const auto rc = load(o);
  const config::json doc{{"schema_version", config::kSchemaVersion},
                         {"kind", "calibration"},
                         {"calibration", io::calibration_json(calibrate(rc))}};
  emit(o, doc.dump(2) + "\n");
  return 0;
}

int run_solve(const Options& o) {
  const auto rc = load(o);
  const double ub = load_for(rc, rc.case_id);
  const auto problem = rc.problem(ub);
  const auto rep = solvers::solve(problem, rc.solver_for(rc.solver.method));
  emit(o, io::solve_report_json(rep, rc.case_id, rc.n_elements, ub).dump(2) + "\n");
  return rep.status == solvers::Status::Converged ? 0 : 2;
}

int run_bench(const Options& o) {
  const auto rc = load(o);
  const auto cal = calibrate(rc);
  std::map<fem::CaseId, double> ub;
  for (const auto& [id, c] : cal) ub[id] = c.u_right;
  const auto setup = rc.setup(ub);
  const auto rep = bench::run_matrix(rc.matrix(), setup);
  const fs::path dir = o.out.empty() ? fs::path("results") : fs::path(o.out);
  io::write_bench(dir, rep, setup, cal);
  std::cout << io::bench_table(rep);
  return 0;
}

int run_surface(const Options& o) {
  const auto rc = load(o);
  if (rc.n_elements != 2) throw ConfigError("surface requires n_elements = 2");
  const double ub = load_for(rc, rc.case_id);
  auto spec = bench::SurfaceSpec::default_for(ub, rc.surface_resolution);
  if (rc.surface_u1) std::tie(spec.u1_lo, spec.u1_hi) = *rc.surface_u1;
  if (rc.surface_u2) std::tie(spec.u2_lo, spec.u2_hi) = *rc.surface_u2;
  if (!(spec.u1_hi > spec.u1_lo) || !(spec.u2_hi > spec.u2_lo))
    throw ConfigError("surface window is empty (u_right = 0?); set surface.u1_range and u2_range");
  emit(o, io::surface_csv(bench::sample_surface(rc.problem(ub), spec)));
  return 0;
}

int run_cond_trace(const Options& o) {
  const auto rc = load(o);
  const auto m = rc.solver.method;
  if (m != solvers::Method::Broyden && m != solvers::Method::BroydenInv)
    throw ConfigError("cond-trace requires method broyden or broyden_inv");
  const double ub = load_for(rc, rc.case_id);
  emit(o, io::cond_trace_csv(bench::condition_trace(rc.problem(ub), m, rc.solver_for(m))));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear solver benchmark for a 1D bar with a cohesive zone"};
  app.require_subcommand(1, 1);
  Options opt;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {
      {"calibrate", "find the ItP and ItC end displacements with the grid oracle", run_calibrate},
      {"solve", "run one method on one case", run_solve},
      {"bench", "run the method x case x mesh matrix", run_bench},
      {"surface", "sample ||r|| over (u1, u2) on the coarse mesh", run_surface},
      {"cond-trace", "exact vs estimated Jacobian condition numbers for a Broyden run", run_cond_trace},
  };
  std::map<CLI::App*, const Sub*> handlers;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", opt.config_path, "JSON configuration file");
    sc->add_option("--set", opt.overrides, "override a configuration key (key=value), repeatable")
        ->allow_extra_args(false);
    sc->add_option("--out", opt.out, "output file (directory for bench)");
    handlers[sc] = &s;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    for (const auto& [sc, s] : handlers)
      if (sc->parsed()) return s->run(opt);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
