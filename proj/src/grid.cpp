#include "fomo2d/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fomo2d {

void SgpConfig::validate() const {
  if (angle_samples < 3 || diag_grid < 3 || offdiag_grid < 3) {
    throw std::invalid_argument("SgpConfig: grid counts must be >= 3");
  }
  if (merit_rel_tol <= 0.0 || volume_tol <= 0.0 || stall_iters < 1 || max_iters < 1) {
    throw std::invalid_argument("SgpConfig: tolerances must be positive");
  }
}

OrthoTensor GridTables::tensor_at(int i11, int i22, int i33, int i12, int iangle) const {
  const int pair = pair_index[static_cast<std::size_t>(i11) * n_diag + i22];
  if (pair < 0) throw std::logic_error("GridTables: infeasible pair dereferenced");
  OrthoTensor t;
  t.e1111 = a11[static_cast<std::size_t>(i11)];
  t.e2222 = a22[static_cast<std::size_t>(i22)];
  t.e1122 = e12_value(pair, i12);
  t.e1212 = 0.5 * a33[static_cast<std::size_t>(i33)];
  t.phi = angle[static_cast<std::size_t>(iangle)];
  return t;
}

Eigen::Matrix3d GridTables::base_matrix_at(int i11, int i22, int i33, int i12) const {
  const int pair = pair_index[static_cast<std::size_t>(i11) * n_diag + i22];
  Eigen::Matrix3d m;
  const double e12 = e12_value(pair, i12);
  m << a11[static_cast<std::size_t>(i11)], e12, 0.0,
       e12, a22[static_cast<std::size_t>(i22)], 0.0,
       0.0, 0.0, a33[static_cast<std::size_t>(i33)];
  return m;
}

GridTables build_grid(const PhasePair& p, const SgpConfig& cfg, VolumeEstimatorKind kind) {
  cfg.validate();
  GridTables g;
  g.phases = p;
  g.kind = kind;
  g.n_diag = cfg.diag_grid;
  g.n_offdiag = cfg.offdiag_grid;
  g.n_angle = cfg.angle_samples;

  const double am = p.weak.kappa + p.weak.mu, ap = p.strong.kappa + p.strong.mu;
  const double bm = p.weak.kappa - p.weak.mu, bp = p.strong.kappa - p.strong.mu;
  const auto linspace = [](double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
  };
  g.a11 = linspace(am, ap, g.n_diag);
  g.a22 = linspace(am, ap, g.n_diag);
  g.a33 = linspace(2.0 * p.weak.mu, 2.0 * p.strong.mu, g.n_diag);

  g.angle.resize(static_cast<std::size_t>(g.n_angle));
  g.cos2.resize(g.angle.size());
  g.sin2.resize(g.angle.size());
  g.cos4.resize(g.angle.size());
  g.sin4.resize(g.angle.size());
  for (int k = 0; k < g.n_angle; ++k) {
    const double phi = 0.5 * std::numbers::pi * k / g.n_angle;  // [0, pi/2)
    g.angle[static_cast<std::size_t>(k)] = phi;
    g.cos2[static_cast<std::size_t>(k)] = std::cos(2.0 * phi);
    g.sin2[static_cast<std::size_t>(k)] = std::sin(2.0 * phi);
    g.cos4[static_cast<std::size_t>(k)] = std::cos(4.0 * phi);
    g.sin4[static_cast<std::size_t>(k)] = std::sin(4.0 * phi);
  }

  // feasible M12 interval per (M11, M22): intersection of the two disc
  // conditions from the block Loewner bounds
  g.pair_index.assign(static_cast<std::size_t>(g.n_diag) * g.n_diag, -1);
  for (int i = 0; i < g.n_diag; ++i) {
    for (int j = 0; j < g.n_diag; ++j) {
      const double e11 = g.a11[static_cast<std::size_t>(i)];
      const double e22 = g.a22[static_cast<std::size_t>(j)];
      const double slo = std::sqrt(std::max(0.0, (e11 - am) * (e22 - am)));
      const double shi = std::sqrt(std::max(0.0, (ap - e11) * (ap - e22)));
      const double lo = std::max(bm - slo, bp - shi);
      const double hi = std::min(bm + slo, bp + shi);
      if (hi < lo - 1e-14) continue;
      g.pair_index[static_cast<std::size_t>(i) * g.n_diag + j] = g.n_pairs++;
      g.e12_lo.push_back(lo);
      g.e12_step.push_back(std::max(0.0, hi - lo) / (g.n_offdiag - 1));
    }
  }

  const std::size_t npts =
      static_cast<std::size_t>(g.n_pairs) * g.n_diag * g.n_offdiag;
  g.inv11.resize(npts);
  g.inv22.resize(npts);
  g.inv12.resize(npts);
  g.inv33.resize(npts);
  g.vbar.resize(npts);

  const Tensor4 elo = iso_tensor(p.weak), ehi = iso_tensor(p.strong);
  std::vector<std::pair<int, int>> pair_of(static_cast<std::size_t>(g.n_pairs));
  for (int i = 0; i < g.n_diag; ++i) {
    for (int j = 0; j < g.n_diag; ++j) {
      const int pr = g.pair_index[static_cast<std::size_t>(i) * g.n_diag + j];
      if (pr >= 0) pair_of[static_cast<std::size_t>(pr)] = {i, j};
    }
  }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int pr = 0; pr < g.n_pairs; ++pr) {
    const auto [i11, i22] = pair_of[static_cast<std::size_t>(pr)];
    const double e11 = g.a11[static_cast<std::size_t>(i11)];
    const double e22 = g.a22[static_cast<std::size_t>(i22)];
    for (int i33 = 0; i33 < g.n_diag; ++i33) {
      const double e33 = g.a33[static_cast<std::size_t>(i33)];
      for (int i12 = 0; i12 < g.n_offdiag; ++i12) {
        const double e12 = g.e12_value(pr, i12);
        const std::size_t id = g.point_id(pr, i33, i12);
        const double det2 = e11 * e22 - e12 * e12;
        g.inv11[id] = e22 / det2;
        g.inv22[id] = e11 / det2;
        g.inv12[id] = -e12 / det2;
        g.inv33[id] = 1.0 / e33;
        OrthoTensor base;
        base.e1111 = e11;
        base.e1122 = e12;
        base.e2222 = e22;
        base.e1212 = 0.5 * e33;
        switch (kind) {
          case VolumeEstimatorKind::HashinShtrikman:
            g.vbar[id] = worst_case_volume(base, p, cfg.search);
            break;
          case VolumeEstimatorKind::Voigt: {
            Tensor4 t;
            t.m = g.base_matrix_at(i11, i22, i33, i12);
            g.vbar[id] = voigt_min_volume(t, p);
            break;
          }
          case VolumeEstimatorKind::ZeroOrder:
            g.vbar[id] = (e11 + e22 + e33 - elo.trace()) / (ehi.trace() - elo.trace());
            break;
        }
      }
    }
  }
  if (g.n_pairs == 0) throw std::runtime_error("build_grid: empty grid (degenerate phases)");
  return g;
}

}  // namespace fomo2d
