#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "czbench/bench.hpp"

namespace czb::io {

using json = nlohmann::json;

// Writes to a sibling temporary file, then renames over the target.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip decimal, locale independent; "inf", "-inf", "nan".
std::string format_number(double x);

json solve_report_json(const solvers::SolveReport& rep, fem::CaseId case_id, int n_elements,
                       double u_right);
json calibration_json(const std::map<fem::CaseId, bench::Calibration>& cal);
json bench_report_json(const bench::BenchReport& rep, const bench::BenchSetup& setup,
                       const std::map<fem::CaseId, bench::Calibration>& cal);

// Aligned text table per mesh, rows = methods, columns = cases.
// Converged -> iterations, converged without precision -> iterations*, else the infinity sign.
std::string bench_table(const bench::BenchReport& rep);
std::string cell_text(const solvers::SolveReport& rep);

std::string history_csv(const solvers::SolveReport& rep);
std::string cond_trace_csv(const std::vector<bench::CondTracePoint>& trace);
std::string surface_csv(const bench::SurfaceGrid& grid);

std::string history_file_name(const bench::BenchCell& cell);

// report.json, table.txt and histories/<method>_<case>_<mesh>.csv under dir
void write_bench(const std::filesystem::path& dir, const bench::BenchReport& rep,
                 const bench::BenchSetup& setup,
                 const std::map<fem::CaseId, bench::Calibration>& cal);

}  // namespace czb::io
