#pragma once

#include "fomo2d/fem.hpp"

#include <vector>

namespace fomo2d {

// Branch of the complementary-energy bound: C1 is attained by a rank-one
// laminate, C2/C3 by rank-two laminates (trace- resp. deviator-dominated).
enum class FcBranch { C1, C2, C3 };

struct FcValue {
  double value = 0.0;
  FcBranch branch = FcBranch::C1;
};

// <E(kappa, mu)^-1 sigma, sigma> = (s1+s2)^2/(4 kappa) + (s1-s2)^2/(4 mu)
double complementary_energy_iso(const StressM& s, const IsoModuli& m);

// Explicit lower Hashin-Shtrikman bound on the complementary energy of
// mixtures at stiff-phase fraction v; v = 0 is handled by the caller through
// the weak-phase complementary energy.
FcValue f_c_hs(const StressM& s, double v, const PhasePair& p);

// branch-wise analytic d/dv of f_c_hs; C^1 across branch seams
double f_c_derivative(const StressM& s, double v, const PhasePair& p);

struct AmConfig {
  double density_change_tol = 1e-5;
  double compliance_rel_tol = 1e-8;
  int max_iters = 50000;
  double volume_bisect_tol = 1e-8;

  void validate() const;
};

// argmin over [0,1] of f_c_hs(s; v) + lambda v (convex, solved on the
// derivative); lambda is the local price per unit volume fraction
double local_volume_update(const StressM& s, double lambda, const PhasePair& p,
                           const AmConfig& cfg = {});

struct LaminateParams {
  int rank = 1;
  Eigen::Vector2d e1 = Eigen::Vector2d::UnitX();
  Eigen::Vector2d e2 = Eigen::Vector2d::UnitY();
  double m1 = 1.0;
  double m2 = 0.0;
  bool degenerate_fallback = false;  // rank-2 branch hit a repeated stress
};

LaminateParams laminate_params(const StressM& s, double v, const PhasePair& p);

// quadratic form F^c_{E+}(e) on strains as a Kelvin-Mandel matrix
Tensor4 fc_tensor(const Eigen::Vector2d& e, const PhasePair& p);

// effective tensor of the bound-attaining laminate:
// E = ((E+)^-1 + (1-v) B^-1)^-1 with B = R + v sum_j m_j F^c(e_j)
Tensor4 laminate_update(const StressM& s, double v, const PhasePair& p);

struct AmLogRecord {
  int iteration = 0;
  double compliance = 0.0;
  double lambda = 0.0;
  double max_density_change = 0.0;
};

struct AmResult {
  DesignField design;
  std::vector<double> compliance;
  double lambda = 0.0;
  std::vector<AmLogRecord> log;
  bool converged = false;
};

// Single-loadcase alternating minimization: state solve, elementwise volume
// update by bisection on the dual multiplier, laminate tensor update.
// Initialized with the strong phase.
AmResult am_solve(FemProblem& fem, const PhasePair& p, double vbar_target,
                  const AmConfig& cfg);

}  // namespace fomo2d
