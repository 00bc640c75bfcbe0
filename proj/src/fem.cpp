#include "czbench/fem.hpp"
#include <algorithm>
#include <cctype>

#include <cmath>
#include <sstream>

namespace czb::fem {

std::array<int, 2> Mesh1D::element_nodes(int e) const {
  if (e < cz_interface) return {e, e + 1};
  return {e + 1, e + 2};
}

std::string to_string(CaseId id) { return id == CaseId::ItP ? "ItP" : "ItC"; }

CaseId parse_case(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "itp") return CaseId::ItP;
  if (t == "itc") return CaseId::ItC;
  throw ConfigError("unknown case '" + s + "' (expected ItP or ItC)");
}

Mesh1D build_mesh(int n_elements, double L, double cz_fraction,
                  std::vector<std::string>* warnings) {
  if (n_elements < 2) throw ConfigError("n_elements must be at least 2");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("L must be positive");
  if (!(cz_fraction > 0.0 && cz_fraction < 1.0))
    throw ConfigError("cz_fraction must lie in (0,1): interface would fall at a domain boundary");

  const double h = L / n_elements;
  int iface = static_cast<int>(std::lround(cz_fraction * n_elements));
  if (iface < 1) iface = 1;
  if (iface > n_elements - 1) iface = n_elements - 1;

  const double target = cz_fraction * L;
  const double snapped = iface * h;
  if (warnings && std::abs(snapped - target) > 1e-12 * L) {
    std::ostringstream os;
    os << "cohesive interface requested at x=" << target
       << " is not an element boundary; snapped to x=" << snapped;
    warnings->push_back(os.str());
  }

  Mesh1D m;
  m.n_elements = n_elements;
  m.cz_interface = iface;
  m.cz_pair = {iface, iface + 1};
  m.node_x.resize(n_elements + 2);
  for (int i = 0; i <= iface; ++i) m.node_x[i] = i * h;
  for (int i = iface + 1; i < n_elements + 2; ++i) m.node_x[i] = (i - 1) * h;
  m.node_x.back() = L;
  return m;
}

void validate(const Material& m) {
  if (!(m.E > 0.0) || !std::isfinite(m.E)) throw ConfigError("E must be positive");
  if (!(m.A > 0.0) || !std::isfinite(m.A)) throw ConfigError("A must be positive");
}

void validate(const CohesiveLaw& law, const Material& m, double L,
              std::vector<std::string>* warnings) {
  if (!(law.K_p > 0.0)) throw ConfigError("K_p must be positive");
  if (!(law.delta_0 > 0.0 && law.delta_0 < law.delta_f))
    throw ConfigError("cohesive law requires 0 < delta_0 < delta_f");
  const double k_eq = m.E * m.A / L;
  if (warnings && law.K_p < 100.0 * k_eq * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "K_p=" << law.K_p << " is below 100*E*A/L=" << 100.0 * k_eq;
    warnings->push_back(os.str());
  }
}

double damage(double delta_u, const CohesiveLaw& law) {
  if (delta_u <= law.delta_0) return 0.0;
  if (delta_u >= law.delta_f) return 1.0;
  const double d = law.delta_f * (delta_u - law.delta_0) /
                   (delta_u * (law.delta_f - law.delta_0));
  return std::clamp(d, 0.0, 1.0);
}

double cohesive_traction(double delta_u, const CohesiveLaw& law) {
  if (delta_u < 0.0) return law.K_p * delta_u;
  return (1.0 - damage(delta_u, law)) * law.K_p * delta_u;
}

double cohesive_tangent(double delta_u, const CohesiveLaw& law) {
  if (delta_u < law.delta_0) return law.K_p;
  if (delta_u < law.delta_f) return -law.K_p * law.delta_0 / (law.delta_f - law.delta_0);
  return 0.0;
}

Problem::Problem(Mesh1D mesh, Material material, CohesiveLaw law, CaseSpec cs)
    : mesh_(std::move(mesh)), material_(material), law_(law), case_(cs) {
  validate(material_);
  const int nn = mesh_.node_count();
  if (nn != mesh_.n_elements + 2) throw ConfigError("mesh node count must be n_elements + 2");
  validate(law_, material_, length());

  node_to_free_.assign(nn, -1);
  for (int i = 1; i < nn - 1; ++i) {
    node_to_free_[i] = static_cast<int>(dof_map_.size());
    dof_map_.push_back(i);
  }
  k_el_.resize(mesh_.n_elements);
  for (int e = 0; e < mesh_.n_elements; ++e) {
    auto [a, b] = mesh_.element_nodes(e);
    const double h = mesh_.node_x[b] - mesh_.node_x[a];
    if (!(h > 0.0)) throw ConfigError("element with non-positive length");
    k_el_[e] = material_.E * material_.A / h;
    k_max_ = std::max(k_max_, k_el_[e]);
  }
}

void Problem::check_size(const Vector& u_free) const {
  if (u_free.size() != n_free())
    throw std::invalid_argument("u_free has length " + std::to_string(u_free.size()) +
                                ", expected " + std::to_string(n_free()));
}

Vector Problem::full_displacement(const Vector& u_free) const {
  Vector u(mesh_.node_count());
  u(0) = case_.u_left;
  u(mesh_.node_count() - 1) = case_.u_right;
  for (int j = 0; j < n_free(); ++j) u(dof_map_[j]) = u_free(j);
  return u;
}

double Problem::opening(const Vector& u_free) const {
  check_size(u_free);
  const Vector u = full_displacement(u_free);
  return u(mesh_.cz_pair[1]) - u(mesh_.cz_pair[0]);
}

double Problem::damage_at(const Vector& u_free) const { return damage(opening(u_free), law_); }

Vector Problem::residual(const Vector& u_free) const {
  check_size(u_free);
  const Vector u = full_displacement(u_free);
  Vector r = Vector::Zero(n_free());
  auto add = [&](int node, double v) {
    const int j = node_to_free_[node];
    if (j >= 0) r(j) += v;
  };
  for (int e = 0; e < mesh_.n_elements; ++e) {
    auto [a, b] = mesh_.element_nodes(e);
    const double f = k_el_[e] * (u(b) - u(a));
    add(a, -f);
    add(b, f);
  }
  const auto [m, n] = mesh_.cz_pair;
  const double t = cohesive_traction(u(n) - u(m), law_);
  add(m, -t);
  add(n, t);
  return r;
}

Matrix Problem::jacobian(const Vector& u_free) const {
  check_size(u_free);
  const Vector u = full_displacement(u_free);
  Matrix J = Matrix::Zero(n_free(), n_free());
  auto spring = [&](int a, int b, double k) {
    const int i = node_to_free_[a], j = node_to_free_[b];
    if (i >= 0) J(i, i) += k;
    if (j >= 0) J(j, j) += k;
    if (i >= 0 && j >= 0) {
      J(i, j) -= k;
      J(j, i) -= k;
    }
  };
  for (int e = 0; e < mesh_.n_elements; ++e) {
    auto [a, b] = mesh_.element_nodes(e);
    spring(a, b, k_el_[e]);
  }
  const auto [m, n] = mesh_.cz_pair;
  spring(m, n, cohesive_tangent(u(n) - u(m), law_));
  return J;
}

Problem Problem::with_u_right(double u_right) const {
  CaseSpec cs = case_;
  cs.u_right = u_right;
  return Problem(mesh_, material_, law_, cs);
}

Problem make_case(CaseId case_id, const Mesh1D& mesh, const Material& material,
                  const CohesiveLaw& law, double u_right) {
  return Problem(mesh, material, law, CaseSpec{case_id, 0.0, u_right});
}

}  // namespace czb::fem
