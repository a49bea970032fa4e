#pragma once

#include "fomo2d/bounds.hpp"

#include <cstdint>
#include <vector>

namespace fomo2d {

enum class VolumeEstimatorKind { ZeroOrder, Voigt, HashinShtrikman };

struct SgpConfig {
  int angle_samples = 721;  // [0, pi/2), exploiting the 90-degree symmetry
  int diag_grid = 41;       // per axis for (M11, M22, M33)
  int offdiag_grid = 41;    // per feasible (M11, M22) pair for M12
  double merit_rel_tol = 1e-7;
  int stall_iters = 5;
  double lambda_lo = 0.0;
  double lambda_hi = -1.0;  // < 0: initialize as 10 Tr(E+)
  double volume_tol = 1e-6;
  int max_iters = 300;
  SearchConfig1D search;

  void validate() const;
};

// Sampled feasible orthotropic base tensors with precomputed inverses and
// volume estimates. Axes hold the Kelvin-Mandel diagonal (M11, M22, M33);
// the M12 axis is an index into a per-(M11, M22) feasible interval, so every
// stored point satisfies the block Loewner bounds by construction.
struct GridTables {
  PhasePair phases{};
  VolumeEstimatorKind kind = VolumeEstimatorKind::HashinShtrikman;
  int n_diag = 0, n_offdiag = 0, n_angle = 0;

  std::vector<double> a11, a22, a33;
  std::vector<double> angle, cos2, sin2, cos4, sin4;

  std::vector<int> pair_index;  // n_diag * n_diag, -1 where the interval is empty
  int n_pairs = 0;
  std::vector<double> e12_lo, e12_step;  // per feasible pair

  // per-point data, laid out ((pair * n_diag + i33) * n_offdiag + i12)
  std::vector<double> inv11, inv22, inv12, inv33, vbar;

  std::size_t point_count() const { return vbar.size(); }
  std::size_t point_id(int pair, int i33, int i12) const {
    return (static_cast<std::size_t>(pair) * n_diag + i33) * n_offdiag + i12;
  }
  double e12_value(int pair, int i12) const {
    return e12_lo[static_cast<std::size_t>(pair)] +
           e12_step[static_cast<std::size_t>(pair)] * i12;
  }
  OrthoTensor tensor_at(int i11, int i22, int i33, int i12, int iangle) const;
  Eigen::Matrix3d base_matrix_at(int i11, int i22, int i33, int i12) const;
};

GridTables build_grid(const PhasePair& p, const SgpConfig& cfg, VolumeEstimatorKind kind);

}  // namespace fomo2d
