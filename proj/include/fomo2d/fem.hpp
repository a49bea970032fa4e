#pragma once

#include "fomo2d/tensor.hpp"

#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace fomo2d {

// Rectangular grid of equisized Q8 serendipity elements. Nodes live on the
// (2nx+1) x (2ny+1) refined lattice with element-center positions skipped.
struct Mesh {
  int nx = 0, ny = 0;
  double width = 0.0, height = 0.0;
  std::vector<double> node_x, node_y;
  std::vector<std::array<int, 8>> conn;  // corner nodes 0..3 ccw, then midsides
  std::vector<int> lattice_to_node;      // -1 at skipped lattice positions

  int elem_count() const { return nx * ny; }
  int node_count() const { return static_cast<int>(node_x.size()); }
  int dof_count() const { return 2 * node_count(); }
  double elem_width() const { return width / nx; }
  double elem_height() const { return height / ny; }
  // lattice coordinates ix in [0, 2nx], iy in [0, 2ny]; -1 if skipped
  int node_at(int ix, int iy) const;
};

Mesh build_mesh(int nx, int ny, double width, double height);

struct PointLoad {
  int node = 0;
  int dir = 0;  // 0 = x, 1 = y
  double magnitude = 0.0;
};

struct LoadCase {
  std::vector<int> fixed_dofs;
  std::vector<PointLoad> loads;
};

// per-element tensor plus stored stiff-phase volume estimate
struct DesignField {
  std::vector<OrthoTensor> tensors;
  std::vector<double> vplus;
};

struct StateSolution {
  std::vector<Eigen::VectorXd> u;  // full-length displacement per loadcase
  std::vector<double> compliance;

  double total_compliance() const {
    double c = 0.0;
    for (double x : compliance) c += x;
    return c;
  }
};

// Assembly and solves for a fixed mesh/loadcase set. All elements are
// congruent, so the nine 3x16 strain-displacement matrices and the six
// entry-wise element stiffness kernels are precomputed once; the assembled
// matrix is linear in the element Kelvin-Mandel matrices.
class FemProblem {
 public:
  FemProblem(Mesh mesh, std::vector<LoadCase> cases);

  const Mesh& mesh() const { return mesh_; }
  const std::vector<LoadCase>& loadcases() const { return cases_; }
  int loadcase_count() const { return static_cast<int>(cases_.size()); }
  int free_dof_count() const { return static_cast<int>(free_of_full_.size()); }

  // reduced SPD stiffness for elementwise Kelvin-Mandel matrices
  const Eigen::SparseMatrix<double>& assemble(const std::vector<Eigen::Matrix3d>& elem_km);

  // assemble + factorize + solve all loadcases; residual-checked
  StateSolution solve(const std::vector<Eigen::Matrix3d>& elem_km);
  StateSolution solve(const DesignField& design);

  // volume-averaged element strain for one loadcase
  StrainM element_strain(const StateSolution& state, int elem, int loadcase) const;
  StressM element_stress(const StateSolution& state, const Eigen::Matrix3d& elem_km,
                         int elem, int loadcase) const;

  // d c_j / d M_i in the Frobenius pairing: -int_elem eps eps^T dx (3x3, <= 0)
  Eigen::Matrix3d compliance_sensitivity(const StateSolution& state, int elem,
                                         int loadcase) const;

  static std::vector<Eigen::Matrix3d> to_km(const DesignField& design);

 private:
  Mesh mesh_;
  std::vector<LoadCase> cases_;
  std::vector<int> free_of_full_;  // free index -> full dof
  std::vector<int> full_to_free_;  // -1 if fixed

  // quadrature and kinematics shared by all elements
  std::array<Eigen::Matrix<double, 3, 16>, 9> b_mats_;
  std::array<double, 9> wdet_;
  double elem_area_ = 0.0;
  // ke(M) = sum over p<=q of M(p,q) * kernels_[k(p,q)]
  std::array<Eigen::Matrix<double, 16, 16>, 6> kernels_;

  Eigen::SparseMatrix<double> K_;
  std::vector<std::array<int, 16 * 16>> scatter_;  // value offsets, -1 if fixed row/col
  std::vector<Eigen::VectorXd> rhs_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool pattern_ready_ = false;

  void build_kinematics();
  void build_pattern();
  std::array<int, 16> elem_dofs(int elem) const;
};

}  // namespace fomo2d
