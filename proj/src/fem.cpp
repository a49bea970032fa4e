#include "fomo2d/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace fomo2d {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;

// Q8 serendipity shape function derivatives at (xi, eta); corner nodes first
// (ccw from (-1,-1)), then midsides bottom, right, top, left.
void shape_derivatives(double xi, double eta, double dxi[8], double deta[8]) {
  dxi[0] = 0.25 * (1.0 - eta) * (2.0 * xi + eta);
  dxi[1] = 0.25 * (1.0 - eta) * (2.0 * xi - eta);
  dxi[2] = 0.25 * (1.0 + eta) * (2.0 * xi + eta);
  dxi[3] = 0.25 * (1.0 + eta) * (2.0 * xi - eta);
  dxi[4] = -xi * (1.0 - eta);
  dxi[5] = 0.5 * (1.0 - eta * eta);
  dxi[6] = -xi * (1.0 + eta);
  dxi[7] = -0.5 * (1.0 - eta * eta);

  deta[0] = 0.25 * (1.0 - xi) * (xi + 2.0 * eta);
  deta[1] = 0.25 * (1.0 + xi) * (2.0 * eta - xi);
  deta[2] = 0.25 * (1.0 + xi) * (xi + 2.0 * eta);
  deta[3] = 0.25 * (1.0 - xi) * (2.0 * eta - xi);
  deta[4] = -0.5 * (1.0 - xi * xi);
  deta[5] = -eta * (1.0 + xi);
  deta[6] = 0.5 * (1.0 - xi * xi);
  deta[7] = -eta * (1.0 - xi);
}

}  // namespace

int Mesh::node_at(int ix, int iy) const {
  if (ix < 0 || ix > 2 * nx || iy < 0 || iy > 2 * ny) return -1;
  return lattice_to_node[static_cast<size_t>(iy) * (2 * nx + 1) + ix];
}

Mesh build_mesh(int nx, int ny, double width, double height) {
  if (nx < 1 || ny < 1 || width <= 0.0 || height <= 0.0) {
    throw std::invalid_argument("build_mesh: invalid dimensions");
  }
  Mesh m;
  m.nx = nx;
  m.ny = ny;
  m.width = width;
  m.height = height;
  m.lattice_to_node.assign(static_cast<size_t>(2 * nx + 1) * (2 * ny + 1), -1);
  for (int iy = 0; iy <= 2 * ny; ++iy) {
    for (int ix = 0; ix <= 2 * nx; ++ix) {
      if (ix % 2 == 1 && iy % 2 == 1) continue;  // element centers carry no node
      const int id = static_cast<int>(m.node_x.size());
      m.lattice_to_node[static_cast<size_t>(iy) * (2 * nx + 1) + ix] = id;
      m.node_x.push_back(width * ix / (2.0 * nx));
      m.node_y.push_back(height * iy / (2.0 * ny));
    }
  }
  m.conn.reserve(static_cast<size_t>(nx) * ny);
  for (int ey = 0; ey < ny; ++ey) {
    for (int ex = 0; ex < nx; ++ex) {
      const int bx = 2 * ex, by = 2 * ey;
      m.conn.push_back({m.node_at(bx, by), m.node_at(bx + 2, by), m.node_at(bx + 2, by + 2),
                        m.node_at(bx, by + 2), m.node_at(bx + 1, by), m.node_at(bx + 2, by + 1),
                        m.node_at(bx + 1, by + 2), m.node_at(bx, by + 1)});
    }
  }
  return m;
}

FemProblem::FemProblem(Mesh mesh, std::vector<LoadCase> cases)
    : mesh_(std::move(mesh)), cases_(std::move(cases)) {
  if (cases_.empty()) throw std::invalid_argument("FemProblem: need at least one loadcase");
  for (const auto& lc : cases_) {
    if (lc.fixed_dofs.empty()) {
      throw std::invalid_argument("FemProblem: loadcase without Dirichlet dofs");
    }
    if (lc.loads.empty()) throw std::invalid_argument("FemProblem: loadcase without loads");
  }
  // single shared stiffness: all loadcases must pin the same dofs
  std::set<int> fixed(cases_[0].fixed_dofs.begin(), cases_[0].fixed_dofs.end());
  for (const auto& lc : cases_) {
    std::set<int> other(lc.fixed_dofs.begin(), lc.fixed_dofs.end());
    if (other != fixed) {
      throw std::invalid_argument("FemProblem: loadcases must share the Dirichlet set");
    }
  }
  full_to_free_.assign(static_cast<size_t>(mesh_.dof_count()), -1);
  for (int d = 0; d < mesh_.dof_count(); ++d) {
    if (!fixed.count(d)) {
      full_to_free_.at(static_cast<size_t>(d)) = static_cast<int>(free_of_full_.size());
      free_of_full_.push_back(d);
    }
  }
  build_kinematics();
  build_pattern();

  rhs_.clear();
  for (const auto& lc : cases_) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(free_dof_count());
    for (const auto& pl : lc.loads) {
      const int full = 2 * pl.node + pl.dir;
      const int fr = full_to_free_.at(static_cast<size_t>(full));
      if (fr >= 0) f(fr) += pl.magnitude;
    }
    if (f.norm() == 0.0) throw std::invalid_argument("FemProblem: zero load vector");
    rhs_.push_back(std::move(f));
  }
}

void FemProblem::build_kinematics() {
  const double hw = 0.5 * mesh_.elem_width();
  const double hh = 0.5 * mesh_.elem_height();
  const double detj = hw * hh;
  const double gp[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  elem_area_ = 0.0;
  int g = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j, ++g) {
      double dxi[8], deta[8];
      shape_derivatives(gp[i], gp[j], dxi, deta);
      Eigen::Matrix<double, 3, 16> B = Eigen::Matrix<double, 3, 16>::Zero();
      for (int a = 0; a < 8; ++a) {
        const double dx = dxi[a] / hw;  // rectangular elements: diagonal Jacobian
        const double dy = deta[a] / hh;
        B(0, 2 * a) = dx;
        B(1, 2 * a + 1) = dy;
        B(2, 2 * a) = dy / kSqrt2;
        B(2, 2 * a + 1) = dx / kSqrt2;
      }
      b_mats_[static_cast<size_t>(g)] = B;
      wdet_[static_cast<size_t>(g)] = gw[i] * gw[j] * detj;
      elem_area_ += wdet_[static_cast<size_t>(g)];
    }
  }

  static constexpr int kPQ[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (int k = 0; k < 6; ++k) {
    const int p = kPQ[k][0], q = kPQ[k][1];
    Eigen::Matrix<double, 16, 16> ker = Eigen::Matrix<double, 16, 16>::Zero();
    for (int gg = 0; gg < 9; ++gg) {
      const auto& B = b_mats_[static_cast<size_t>(gg)];
      const double w = wdet_[static_cast<size_t>(gg)];
      if (p == q) {
        ker += w * (B.row(p).transpose() * B.row(p));
      } else {
        ker += w * (B.row(p).transpose() * B.row(q) + B.row(q).transpose() * B.row(p));
      }
    }
    kernels_[static_cast<size_t>(k)] = ker;
  }
}

std::array<int, 16> FemProblem::elem_dofs(int elem) const {
  std::array<int, 16> dofs{};
  const auto& c = mesh_.conn[static_cast<size_t>(elem)];
  for (int a = 0; a < 8; ++a) {
    dofs[static_cast<size_t>(2 * a)] = 2 * c[static_cast<size_t>(a)];
    dofs[static_cast<size_t>(2 * a + 1)] = 2 * c[static_cast<size_t>(a)] + 1;
  }
  return dofs;
}

void FemProblem::build_pattern() {
  const int n = free_dof_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh_.elem_count()) * 256);
  for (int e = 0; e < mesh_.elem_count(); ++e) {
    const auto dofs = elem_dofs(e);
    for (int a = 0; a < 16; ++a) {
      const int ra = full_to_free_[static_cast<size_t>(dofs[static_cast<size_t>(a)])];
      if (ra < 0) continue;
      for (int b = 0; b < 16; ++b) {
        const int rb = full_to_free_[static_cast<size_t>(dofs[static_cast<size_t>(b)])];
        if (rb < 0) continue;
        trips.emplace_back(ra, rb, 0.0);
      }
    }
  }
  K_.resize(n, n);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();

  // cache the value-array offset of every (row, col) an element touches
  scatter_.assign(static_cast<size_t>(mesh_.elem_count()), {});
  const int* outer = K_.outerIndexPtr();
  const int* inner = K_.innerIndexPtr();
  for (int e = 0; e < mesh_.elem_count(); ++e) {
    auto& sc = scatter_[static_cast<size_t>(e)];
    const auto dofs = elem_dofs(e);
    for (int a = 0; a < 16; ++a) {
      const int ra = full_to_free_[static_cast<size_t>(dofs[static_cast<size_t>(a)])];
      for (int b = 0; b < 16; ++b) {
        const int rb = full_to_free_[static_cast<size_t>(dofs[static_cast<size_t>(b)])];
        int off = -1;
        if (ra >= 0 && rb >= 0) {
          for (int k = outer[rb]; k < outer[rb + 1]; ++k) {
            if (inner[k] == ra) {
              off = k;
              break;
            }
          }
        }
        sc[static_cast<size_t>(16 * a + b)] = off;
      }
    }
  }
  solver_.analyzePattern(K_);
  pattern_ready_ = true;
}

const Eigen::SparseMatrix<double>& FemProblem::assemble(
    const std::vector<Eigen::Matrix3d>& elem_km) {
  if (static_cast<int>(elem_km.size()) != mesh_.elem_count()) {
    throw std::invalid_argument("assemble: one Kelvin-Mandel matrix per element required");
  }
  double* vals = K_.valuePtr();
  std::fill(vals, vals + K_.nonZeros(), 0.0);
  static constexpr int kPQ[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  Eigen::Matrix<double, 16, 16> ke;
  for (int e = 0; e < mesh_.elem_count(); ++e) {
    const Eigen::Matrix3d& M = elem_km[static_cast<size_t>(e)];
    ke.setZero();
    for (int k = 0; k < 6; ++k) {
      ke += M(kPQ[k][0], kPQ[k][1]) * kernels_[static_cast<size_t>(k)];
    }
    const auto& sc = scatter_[static_cast<size_t>(e)];
    for (int a = 0; a < 16; ++a) {
      for (int b = 0; b < 16; ++b) {
        const int off = sc[static_cast<size_t>(16 * a + b)];
        if (off >= 0) vals[off] += ke(a, b);
      }
    }
  }
  return K_;
}

StateSolution FemProblem::solve(const std::vector<Eigen::Matrix3d>& elem_km) {
  assemble(elem_km);
  solver_.factorize(K_);
  if (solver_.info() != Eigen::Success) {
    throw std::runtime_error("FemProblem: factorization failed (singular stiffness)");
  }
  StateSolution st;
  for (int j = 0; j < loadcase_count(); ++j) {
    const Eigen::VectorXd uf = solver_.solve(rhs_[static_cast<size_t>(j)]);
    const double res = (K_ * uf - rhs_[static_cast<size_t>(j)]).norm() /
                       rhs_[static_cast<size_t>(j)].norm();
    if (!(res < 1e-9)) {
      throw std::runtime_error("FemProblem: equilibrium residual above tolerance");
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh_.dof_count());
    for (int i = 0; i < free_dof_count(); ++i) u(free_of_full_[static_cast<size_t>(i)]) = uf(i);
    st.compliance.push_back(rhs_[static_cast<size_t>(j)].dot(uf));
    st.u.push_back(std::move(u));
  }
  return st;
}

StateSolution FemProblem::solve(const DesignField& design) { return solve(to_km(design)); }

std::vector<Eigen::Matrix3d> FemProblem::to_km(const DesignField& design) {
  std::vector<Eigen::Matrix3d> km;
  km.reserve(design.tensors.size());
  for (const auto& t : design.tensors) km.push_back(rotate(t).m);
  return km;
}

StrainM FemProblem::element_strain(const StateSolution& state, int elem, int loadcase) const {
  Eigen::Matrix<double, 16, 1> ue;
  const auto dofs = elem_dofs(elem);
  const auto& u = state.u[static_cast<size_t>(loadcase)];
  for (int a = 0; a < 16; ++a) ue(a) = u(dofs[static_cast<size_t>(a)]);
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int g = 0; g < 9; ++g) {
    acc += wdet_[static_cast<size_t>(g)] * (b_mats_[static_cast<size_t>(g)] * ue);
  }
  StrainM e;
  e.v = acc / elem_area_;
  return e;
}

StressM FemProblem::element_stress(const StateSolution& state, const Eigen::Matrix3d& elem_km,
                                   int elem, int loadcase) const {
  StressM s;
  s.v = elem_km * element_strain(state, elem, loadcase).v;
  return s;
}

Eigen::Matrix3d FemProblem::compliance_sensitivity(const StateSolution& state, int elem,
                                                   int loadcase) const {
  Eigen::Matrix<double, 16, 1> ue;
  const auto dofs = elem_dofs(elem);
  const auto& u = state.u[static_cast<size_t>(loadcase)];
  for (int a = 0; a < 16; ++a) ue(a) = u(dofs[static_cast<size_t>(a)]);
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  for (int gg = 0; gg < 9; ++gg) {
    const Eigen::Vector3d eps = b_mats_[static_cast<size_t>(gg)] * ue;
    g -= wdet_[static_cast<size_t>(gg)] * (eps * eps.transpose());
  }
  return g;
}

}  // namespace fomo2d
