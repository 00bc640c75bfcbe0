#include "czbench/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

namespace czb::io {

namespace {

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json counters_json(const solvers::Counters& c) {
  return json{{"residual_evals", c.residual_evals},
              {"jacobian_evals", c.jacobian_evals},
              {"linear_solves", c.linear_solves}};
}

// display width in code points, so the infinity sign counts once
std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string pad_left(const std::string& s, std::size_t w) {
  const std::size_t n = width(s);
  return n >= w ? s : std::string(w - n, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  const std::size_t n = width(s);
  return n >= w ? s : s + std::string(w - n, ' ');
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

json solve_report_json(const solvers::SolveReport& rep, fem::CaseId case_id, int n_elements,
                       double u_right) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "solve_report";
  j["method"] = solvers::to_string(rep.method);
  j["case"] = fem::to_string(case_id);
  j["n_elements"] = n_elements;
  j["u_right"] = u_right;
  j["status"] = solvers::to_string(rep.status);
  j["converged_without_precision"] = rep.converged_without_precision();
  j["iterations"] = rep.iterations;
  j["final_residual"] = rep.final_residual();
  j["residual_history"] = rep.residual_history;
  j["counters"] = counters_json(rep.counters);
  j["final_u"] = vec(rep.final_u);
  if (!rep.cond_history.empty()) {
    json c = json::array();
    for (const auto& s : rep.cond_history)
      c.push_back(json{{"kappa_exact", std::isfinite(s.kappa_exact) ? json(s.kappa_exact) : json()},
                       {"kappa_estimate",
                        std::isfinite(s.kappa_estimate) ? json(s.kappa_estimate) : json()}});
    j["cond_history"] = c;
  }
  return j;
}

json calibration_json(const std::map<fem::CaseId, bench::Calibration>& cal) {
  json out = json::object();
  for (const auto& [id, c] : cal) {
    json roots = json::array();
    for (const auto& r : c.roots)
      roots.push_back(json{{"u", vec(r.u)},
                           {"residual_norm", r.residual_norm},
                           {"opening", r.opening},
                           {"damage", r.damage}});
    out[fem::to_string(id)] = json{{"u_right", c.u_right},
                                   {"scan", json::array({c.scan_lo, c.scan_hi})},
                                   {"roots", roots}};
  }
  return out;
}

json bench_report_json(const bench::BenchReport& rep, const bench::BenchSetup& setup,
                       const std::map<fem::CaseId, bench::Calibration>& cal) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "bench_report";
  j["parameters"] = json{{"L", setup.L},
                         {"E", setup.material.E},
                         {"A", setup.material.A},
                         {"K_p", setup.law.K_p},
                         {"delta_0", setup.law.delta_0},
                         {"delta_f", setup.law.delta_f},
                         {"coarse_elements", setup.coarse_elements},
                         {"fine_elements", setup.fine_elements}};
  j["calibration"] = calibration_json(cal);
  json cells = json::array();
  for (const auto& c : rep.cells) {
    cells.push_back(json{{"method", solvers::to_string(c.method)},
                         {"case", fem::to_string(c.case_id)},
                         {"mesh", bench::to_string(c.mesh)},
                         {"u_right", c.u_right},
                         {"status", solvers::to_string(c.report.status)},
                         {"converged_without_precision", c.report.converged_without_precision()},
                         {"iterations", c.report.iterations},
                         {"counters", counters_json(c.report.counters)},
                         {"final_residual", c.report.final_residual()},
                         {"final_u", vec(c.report.final_u)},
                         {"history_csv", "histories/" + history_file_name(c)}});
  }
  j["cells"] = cells;
  return j;
}

std::string cell_text(const solvers::SolveReport& rep) {
  if (rep.status == solvers::Status::Converged) return std::to_string(rep.iterations);
  if (rep.converged_without_precision()) return std::to_string(rep.iterations) + "*";
  return "∞";
}

std::string bench_table(const bench::BenchReport& rep) {
  std::vector<solvers::Method> methods;
  std::vector<fem::CaseId> cases;
  std::vector<bench::MeshKind> meshes;
  auto add = [](auto& v, auto x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  for (const auto& c : rep.cells) {
    add(methods, c.method);
    add(cases, c.case_id);
    add(meshes, c.mesh);
  }
  std::ostringstream os;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    if (k) os << "\n";
    os << "Mesh: " << bench::to_string(meshes[k]) << "\n";
    std::size_t w0 = 6;
    for (auto m : methods) w0 = std::max(w0, solvers::to_string(m).size());
    constexpr std::size_t w = 8;
    os << pad_right("Method", w0);
    for (auto c : cases) os << " " << pad_left(fem::to_string(c), w);
    os << "\n";
    for (auto m : methods) {
      os << pad_right(solvers::to_string(m), w0);
      for (auto c : cases) {
        const auto* cell = rep.find(m, c, meshes[k]);
        os << " " << pad_left(cell ? cell_text(cell->report) : "-", w);
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string history_csv(const solvers::SolveReport& rep) {
  std::string s = "iteration,residual_norm\n";
  for (std::size_t k = 0; k < rep.residual_history.size(); ++k)
    s += fmt::format("{},{}\n", k, format_number(rep.residual_history[k]));
  return s;
}

std::string cond_trace_csv(const std::vector<bench::CondTracePoint>& trace) {
  std::string s = "iteration,kappa_exact,kappa_estimate\n";
  for (const auto& p : trace)
    s += fmt::format("{},{},{}\n", p.iteration, format_number(p.kappa_exact),
                     format_number(p.kappa_estimate));
  return s;
}

std::string surface_csv(const bench::SurfaceGrid& grid) {
  std::string s = "u1,u2,residual_norm\n";
  const int n = grid.spec.resolution;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s += fmt::format("{},{},{}\n", format_number(grid.u1(i)), format_number(grid.u2(j)),
                       format_number(grid.at(i, j)));
  return s;
}

std::string history_file_name(const bench::BenchCell& cell) {
  return fmt::format("{}_{}_{}.csv", solvers::to_string(cell.method), fem::to_string(cell.case_id),
                     bench::to_string(cell.mesh));
}

void write_bench(const std::filesystem::path& dir, const bench::BenchReport& rep,
                 const bench::BenchSetup& setup,
                 const std::map<fem::CaseId, bench::Calibration>& cal) {
  atomic_write(dir / "report.json", bench_report_json(rep, setup, cal).dump(2) + "\n");
  atomic_write(dir / "table.txt", bench_table(rep));
  for (const auto& c : rep.cells)
    atomic_write(dir / "histories" / history_file_name(c), history_csv(c.report));
}

}  // namespace czb::io
