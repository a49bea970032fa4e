#pragma once

#include "fomo2d/fem.hpp"
#include "fomo2d/grid.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <utility>
#include <vector>

namespace fomo2d {

struct SgpLogRecord {
  int iteration = 0;
  double compliance = 0.0;
  double lambda = 0.0;
  double volume_residual = 0.0;
  double merit = 0.0;
};

struct SgpIterate {
  DesignField design;
  std::vector<double> compliance;
  double lambda = 0.0;
  double merit = 0.0;
  int iteration = 0;
  double mean_vbar = 0.0;
};

struct LocalSubproblemResult {
  OrthoTensor tensor;
  double vbar = 0.0;
  double model_value = 0.0;  // objective incl. the lambda term
  double model_part = 0.0;   // compliance model alone
  std::array<int, 5> index{};  // (i11, i22, i33, i12, iangle)
};

// Separable first-order model of one element: S = sum_j Ebar (-G_j) Ebar,
// plus its harmonic decomposition over the rotation angle
// R(phi)^T S R(phi) = H0 + H1 cos2phi + H2 sin2phi + H3 cos4phi + H4 sin4phi.
struct ElementModel {
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  std::array<Eigen::Matrix3d, 5> H{};
};

ElementModel make_element_model(const std::vector<Eigen::Matrix3d>& G_list,
                                const Eigen::Matrix3d& ebar_km, const PhasePair& p);

// Near-optimal (model, vbar) candidates kept per vbar bin; cheap to update
// during grid scans and compact enough to merge every bisection round.
struct CloudBins {
  static constexpr int kBins = 64;
  std::array<double, kBins> model{};
  std::array<double, kBins> vbar{};

  CloudBins() { model.fill(std::numeric_limits<double>::infinity()); }
  void offer(double g, double v) {
    const int b = std::clamp(static_cast<int>(v * kBins), 0, kBins - 1);
    if (g < model[static_cast<std::size_t>(b)]) {
      model[static_cast<std::size_t>(b)] = g;
      vbar[static_cast<std::size_t>(b)] = v;
    }
  }
};

// Global minimizer of <S, E^-1> + lambda_w vbar over the sampled feasible
// set, by the 3-level coarse-to-fine scheme (stride 8, then stride 2 within
// +-2 coarse cells keeping the best separated candidates, then full
// resolution within +-2 fine cells of each survivor). Optionally bins the
// evaluated candidates for reuse by the dual bisection.
LocalSubproblemResult local_subproblem(const ElementModel& model, double lambda_w,
                                       const GridTables& tables,
                                       CloudBins* cloud_out = nullptr);

// Convenience overload matching the solver call site: builds the model from
// the loadcase sensitivities and the expansion point, prices volume by
// lambda / nel.
LocalSubproblemResult local_subproblem(const std::vector<Eigen::Matrix3d>& G_list,
                                       const Eigen::Matrix3d& ebar_km, double lambda, int nel,
                                       const GridTables& tables, const SgpConfig& cfg,
                                       const PhasePair& p);

struct DualResult {
  double lambda = 0.0;
  DesignField design;
  double mean_vbar = 0.0;
  std::vector<double> model_part;  // per-element model value at the optimum
};

// Bisection on the volume multiplier. Element subproblems are evaluated
// against cached candidate clouds that are refreshed with full hierarchical
// searches until the full-search volume settles within volume_tol; the
// returned design is always the set of local_subproblem outputs at the
// returned lambda. The bracket auto-expands by x10 up to six times.
// lambda_hint (if it lies inside the bracket) seeds the first round.
DualResult dual_bisection(const std::vector<ElementModel>& models,
                          std::pair<double, double> bracket, double vbar_target,
                          const GridTables& tables, const SgpConfig& cfg,
                          double lambda_hint = -1.0);

struct SgpResult {
  SgpIterate final;
  std::vector<SgpLogRecord> log;
  bool converged = false;
};

SgpResult sgp_solve(FemProblem& fem, const PhasePair& p, double vbar_target,
                    VolumeEstimatorKind kind, const SgpConfig& cfg,
                    const GridTables* prebuilt = nullptr);

// Reduced Voigt model: one scalar per element along the isotropic mixture
// ray, same outer loop and dual bisection, subproblems solved exactly on the
// derivative of the convex 1D model.
SgpResult solve_voigt_reduced(FemProblem& fem, const PhasePair& p, double vbar_target,
                              const SgpConfig& cfg);

}  // namespace fomo2d
