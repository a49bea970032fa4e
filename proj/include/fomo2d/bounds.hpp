#pragma once

#include "fomo2d/tensor.hpp"

namespace fomo2d {

// Branch of the piecewise correction q(t; v). B2 and B3 can never be active
// at the same time (their joint condition set is empty).
enum class HsBranch { B1, B2, B3 };

struct QValue {
  double value = 0.0;
  HsBranch branch = HsBranch::B1;
};

// Correction subtracted from the Voigt energy in the Hashin-Shtrikman upper
// bound, parametrized by t = |Tr(eps)| for strains with |eps|_F = sqrt(2)/2.
// Nonnegative on [0,1]^2; zero exactly on {v in {0,1}} and on the invariant
// line dkappa t = dmu sqrt(1-t^2).
QValue q_correction(double t, double v, const PhasePair& p);

// Voigt mixture energy (kappa(v) t^2 + mu(v) (1-t^2)) for normalized strains.
double voigt_energy(double t, double v, const PhasePair& p);

// Hashin-Shtrikman envelope value on the t-parametrized normalized sphere.
double hs_envelope_energy(double t, double v, const PhasePair& p);

// f^HS(eps; v) for a strain with |eps|_F = sqrt(2)/2 (within 1e-10, else a
// domain error is thrown).
double f_hs(const StrainM& e, double v, const PhasePair& p);

// Smallest v in [0,1] with <E eps, eps> = f^HS(eps; v), where W = <E eps,eps>
// is evaluated on the normalized strain; scale-invariant in eps. Requires
// E- <= E <= E+ in the Loewner order.
double activating_volume(const StrainM& e, const Tensor4& E, const PhasePair& p);

// Same, from the normalized energy W and trace invariant t directly. This is
// the closed-form branch evaluation with a monotone-bisection fallback at
// numerically fragile seams.
double activating_volume_from_energy(double W, double t, const PhasePair& p);

// max of <E eps, eps> over normalized strains with |Tr(eps)| = t, for an
// orthotropic base (independent of the orientation angle).
double emax_energy(double t, const OrthoTensor& base);

struct SearchConfig1D {
  int coarse_samples = 256;
  double golden_tol = 1e-10;
  int brackets_max = 4;
};

// admissibility of an orthotropic base against the block Loewner bounds
bool ortho_base_admissible(const OrthoTensor& base, const PhasePair& p, double tol = 1e-9);

// sup over t in [0,1] of the activating volume with the energy replaced by
// emax_energy(t; base): the minimal stiff-phase budget making the base
// HS-admissible. Coarse sampling brackets the at-most-two maxima, golden
// section refines them.
double worst_case_volume(const OrthoTensor& base, const PhasePair& p,
                         const SearchConfig1D& cfg = {});

// smallest v with E <= E- + v (E+ - E-): the largest generalized eigenvalue
// of (E - E-) against (E+ - E-).
double voigt_min_volume(const Tensor4& E, const PhasePair& p);

// trace-ratio volume estimator (Tr E - Tr E-) / (Tr E+ - Tr E-)
double zo_volume(const Tensor4& E, const PhasePair& p);

}  // namespace fomo2d
