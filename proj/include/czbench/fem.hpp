#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace czb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace czb

namespace czb::fem {

struct Mesh1D {
  int n_elements = 0;
  std::vector<double> node_x;
  // element index to the left of the cohesive interface
  int cz_interface = 0;
  // duplicated nodes at the interface: (left m, right n)
  std::array<int, 2> cz_pair{0, 0};

  int node_count() const { return static_cast<int>(node_x.size()); }
  // end nodes of element e
  std::array<int, 2> element_nodes(int e) const;
};

struct Material {
  double E = 1.0;
  double A = 1.0;
};

struct CohesiveLaw {
  double K_p = 100.0;
  double delta_0 = 0.01;
  double delta_f = 0.2;
};

enum class CaseId { ItP, ItC };

struct CaseSpec {
  CaseId case_id = CaseId::ItP;
  double u_left = 0.0;
  double u_right = 0.0;
};

std::string to_string(CaseId id);
CaseId parse_case(const std::string& s);

// Uniform mesh on [0, L]; the interface snaps to the interior node nearest
// cz_fraction * L. A snap that moves the interface appends to warnings.
Mesh1D build_mesh(int n_elements, double L, double cz_fraction,
                  std::vector<std::string>* warnings = nullptr);

void validate(const Material& m);
// Throws on hard violations; the penalty-stiffness rule only warns.
void validate(const CohesiveLaw& law, const Material& m, double L,
              std::vector<std::string>* warnings = nullptr);

double damage(double delta_u, const CohesiveLaw& law);
double cohesive_traction(double delta_u, const CohesiveLaw& law);
double cohesive_tangent(double delta_u, const CohesiveLaw& law);

class Problem {
 public:
  Problem(Mesh1D mesh, Material material, CohesiveLaw law, CaseSpec cs);

  const Mesh1D& mesh() const { return mesh_; }
  const Material& material() const { return material_; }
  const CohesiveLaw& law() const { return law_; }
  const CaseSpec& case_spec() const { return case_; }
  int n_free() const { return static_cast<int>(dof_map_.size()); }
  // free DOF index -> node index
  const std::vector<int>& dof_map() const { return dof_map_; }
  // largest element stiffness E*A/h
  double element_stiffness() const { return k_max_; }
  double length() const { return mesh_.node_x.back() - mesh_.node_x.front(); }

  // opening u_n - u_m of the cohesive pair
  double opening(const Vector& u_free) const;
  double damage_at(const Vector& u_free) const;

  Vector residual(const Vector& u_free) const;
  Matrix jacobian(const Vector& u_free) const;

  // same problem, different prescribed end displacement
  Problem with_u_right(double u_right) const;

 private:
  Vector full_displacement(const Vector& u_free) const;
  void check_size(const Vector& u_free) const;

  Mesh1D mesh_;
  Material material_;
  CohesiveLaw law_;
  CaseSpec case_;
  std::vector<int> dof_map_;
  std::vector<int> node_to_free_;
  std::vector<double> k_el_;
  double k_max_ = 0.0;
};

Problem make_case(CaseId case_id, const Mesh1D& mesh, const Material& material,
                  const CohesiveLaw& law, double u_right);

}  // namespace czb::fem
