#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "czbench/bench.hpp"

namespace czb::bench {

namespace {

struct Cell {
  double x = 0.0;
  double y = 0.0;
  double val = 0.0;
};

// r is continuous and affine on each branch of the cohesive law, so its
// Lipschitz constant over a cell is the largest Jacobian norm among the
// branches the cell's opening range touches.
struct LocalLipschitz {
  double delta_0 = 0.0;
  double delta_f = 0.0;
  double norm[3] = {0.0, 0.0, 0.0};
  // opening = a0 * u1 + a1 * u2 + offset
  double a0 = 0.0, a1 = 0.0, offset = 0.0;

  explicit LocalLipschitz(const fem::Problem& p) : delta_0(p.law().delta_0), delta_f(p.law().delta_f) {
    Vector u = Vector::Zero(2);
    offset = p.opening(u);
    u << 1.0, 0.0;
    a0 = p.opening(u) - offset;
    u << 0.0, 1.0;
    a1 = p.opening(u) - offset;
    const double probe[3] = {0.5 * delta_0, 0.5 * (delta_0 + delta_f), 2.0 * delta_f};
    for (int b = 0; b < 3; ++b) {
      // any u with the probe opening
      Vector v = Vector::Zero(2);
      if (a1 != 0.0)
        v(1) = (probe[b] - offset) / a1;
      else
        v(0) = (probe[b] - offset) / a0;
      Eigen::JacobiSVD<Matrix> svd(p.jacobian(v));
      norm[b] = svd.singularValues()(0) * (1.0 + 1e-9);
    }
  }

  double over(double x, double y, double half) const {
    const double c = a0 * x + a1 * y + offset;
    const double spread = (std::abs(a0) + std::abs(a1)) * half;
    const double lo = c - spread, hi = c + spread;
    double lip = 0.0;
    if (lo < delta_0) lip = std::max(lip, norm[0]);
    if (hi >= delta_0 && lo < delta_f) lip = std::max(lip, norm[1]);
    if (hi >= delta_f) lip = std::max(lip, norm[2]);
    return lip;
  }
};

void evaluate(const fem::Problem& p, std::vector<Cell>& cells, Exec exec) {
  const long n = static_cast<long>(cells.size());
  auto body = [&](long k) {
    Vector u(2);
    u << cells[k].x, cells[k].y;
    cells[k].val = p.residual(u).norm();
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) body(k);
  } else {
    for (long k = 0; k < n; ++k) body(k);
  }
}

// keep cells that may contain a root: ||r(center)|| <= lip * half-diagonal
void prune(std::vector<Cell>& cells, const LocalLipschitz& lip, double side) {
  const double half = 0.5 * side;
  const double hd = half * std::sqrt(2.0);
  cells.erase(std::remove_if(cells.begin(), cells.end(),
                             [&](const Cell& c) { return !(c.val <= lip.over(c.x, c.y, half) * hd); }),
              cells.end());
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<OracleRoot> grid_oracle(const fem::Problem& problem, const OracleSpec& spec,
                                    Exec exec) {
  if (problem.n_free() != 2)
    throw std::invalid_argument("grid_oracle: problem must have exactly 2 free DOFs");
  if (spec.resolution < 2) throw std::invalid_argument("grid_oracle: resolution must be >= 2");

  const double ub = problem.case_spec().u_right;
  const double w = std::max(std::abs(ub), 1e-3 * problem.length());
  const double lo = 0.5 * ub - w;
  const LocalLipschitz lip(problem);
  const double lip_max = std::max({lip.norm[0], lip.norm[1], lip.norm[2]});
  double side = 2.0 * w / (spec.resolution - 1);
  // corner of the cell lattice; leaf centers sit at origin + (k + 1/2) * side
  const double origin = lo - 0.5 * side;

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(spec.resolution) * spec.resolution);
  for (int i = 0; i < spec.resolution; ++i)
    for (int j = 0; j < spec.resolution; ++j) cells.push_back({lo + i * side, lo + j * side, 0.0});
  evaluate(problem, cells, exec);

  prune(cells, lip, side);

  while (!cells.empty() && lip_max * side * std::sqrt(0.5) > 0.1 * spec.root_tol &&
         side > 1e-15 * w) {
    const double q = 0.25 * side;
    std::vector<Cell> next;
    next.reserve(cells.size() * 4);
    for (const auto& c : cells) {
      next.push_back({c.x - q, c.y - q, 0.0});
      next.push_back({c.x + q, c.y - q, 0.0});
      next.push_back({c.x - q, c.y + q, 0.0});
      next.push_back({c.x + q, c.y + q, 0.0});
    }
    side *= 0.5;
    evaluate(problem, next, exec);
    prune(next, lip, side);
    if (static_cast<long>(next.size()) > spec.max_cells) {
      std::ostringstream os;
      os << "grid_oracle: " << next.size() << " cells survive at cell size " << side
         << "; the problem is too degenerate for the oracle";
      throw std::runtime_error(os.str());
    }
    cells = std::move(next);
  }

  // cluster surviving leaves by lattice adjacency
  const int n = static_cast<int>(cells.size());
  std::map<std::pair<long long, long long>, int> where;
  auto key = [](long long a, long long b) { return std::make_pair(a, b); };
  std::vector<std::pair<long long, long long>> idx(n);
  for (int k = 0; k < n; ++k) {
    idx[k] = {static_cast<long long>(std::floor((cells[k].x - origin) / side)),
              static_cast<long long>(std::floor((cells[k].y - origin) / side))};
    where[key(idx[k].first, idx[k].second)] = k;
  }
  DisjointSets sets(n);
  for (int k = 0; k < n; ++k)
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        auto it = where.find(key(idx[k].first + di, idx[k].second + dj));
        if (it != where.end()) sets.unite(k, it->second);
      }

  std::map<int, int> best;
  for (int k = 0; k < n; ++k) {
    const int s = sets.find(k);
    auto it = best.find(s);
    if (it == best.end() || cells[k].val < cells[it->second].val) best[s] = k;
  }

  std::vector<OracleRoot> roots;
  for (const auto& [s, k] : best) {
    if (!(cells[k].val < spec.root_tol)) continue;
    OracleRoot r;
    r.u = Vector(2);
    r.u << cells[k].x, cells[k].y;
    r.residual_norm = cells[k].val;
    r.opening = problem.opening(r.u);
    r.damage = fem::damage(r.opening, problem.law());
    roots.push_back(std::move(r));
  }
  std::sort(roots.begin(), roots.end(), [](const OracleRoot& a, const OracleRoot& b) {
    return a.u(0) != b.u(0) ? a.u(0) < b.u(0) : a.u(1) < b.u(1);
  });
  return roots;
}

namespace {

struct ScanEntry {
  double u_right;
  std::vector<OracleRoot> roots;
};

std::vector<ScanEntry> scan(const fem::Mesh1D& mesh, const fem::Material& material,
                            const fem::CohesiveLaw& law, const CalibrationSpec& spec, Exec exec) {
  if (mesh.n_elements != 2)
    throw ConfigError("calibration requires the coarse mesh (2 free DOFs)");
  if (!(spec.scan_step > 0.0) || spec.scan_count < 1) throw ConfigError("invalid calibration scan");
  const double L = mesh.node_x.back() - mesh.node_x.front();
  std::vector<ScanEntry> out;
  out.reserve(spec.scan_count);
  for (int k = 1; k <= spec.scan_count; ++k) {
    const double ub = k * spec.scan_step * L;
    const auto p = fem::make_case(fem::CaseId::ItP, mesh, material, law, ub);
    out.push_back({ub, grid_oracle(p, spec.oracle, exec)});
  }
  return out;
}

bool is_open(const OracleRoot& r) { return r.damage >= 1.0; }

Calibration pick(fem::CaseId id, const std::vector<ScanEntry>& entries,
                 const CalibrationSpec& spec) {
  Calibration cal;
  cal.case_id = id;
  cal.scan_lo = entries.front().u_right;
  cal.scan_hi = entries.back().u_right;
  const ScanEntry* chosen = nullptr;

  if (id == fem::CaseId::ItP) {
    double best = 0.0;
    for (const auto& e : entries)
      for (const auto& r : e.roots) {
        if (r.damage < spec.itp_d_lo || r.damage > spec.itp_d_hi) continue;
        const double dist = std::abs(r.damage - spec.itp_d_target);
        if (!chosen || dist < best) {
          chosen = &e;
          best = dist;
        }
      }
  } else {
    double last_partial = 0.0;
    for (const auto& e : entries)
      for (const auto& r : e.roots)
        if (!is_open(r)) last_partial = std::max(last_partial, e.u_right);
    for (const auto& e : entries) {
      if (e.u_right < spec.itc_margin * last_partial) continue;
      const auto open = std::count_if(e.roots.begin(), e.roots.end(), is_open);
      if (open == 1 && static_cast<std::size_t>(open) == e.roots.size()) {
        chosen = &e;
        break;
      }
    }
  }
  if (!chosen) {
    std::ostringstream os;
    os << "calibration for " << fem::to_string(id) << " found no qualifying load in ["
       << cal.scan_lo << ", " << cal.scan_hi << "]";
    throw ConfigError(os.str());
  }
  cal.u_right = chosen->u_right;
  cal.roots = chosen->roots;
  return cal;
}

}  // namespace

Calibration calibrate_case(fem::CaseId case_id, const fem::Mesh1D& mesh,
                           const fem::Material& material, const fem::CohesiveLaw& law,
                           const CalibrationSpec& spec, Exec exec) {
  return pick(case_id, scan(mesh, material, law, spec, exec), spec);
}

std::map<fem::CaseId, Calibration> calibrate_all(const fem::Mesh1D& mesh,
                                                 const fem::Material& material,
                                                 const fem::CohesiveLaw& law,
                                                 const CalibrationSpec& spec, Exec exec) {
  const auto entries = scan(mesh, material, law, spec, exec);
  return {{fem::CaseId::ItP, pick(fem::CaseId::ItP, entries, spec)},
          {fem::CaseId::ItC, pick(fem::CaseId::ItC, entries, spec)}};
}

}  // namespace czb::bench
