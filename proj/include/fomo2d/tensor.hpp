#pragma once

#include <Eigen/Dense>

#include <utility>

// Kelvin-Mandel convention used throughout:
//   second-order symmetric tensors a map to R^3 as (a11, a22, sqrt(2) a12);
//   fourth-order elasticity tensors map to symmetric 3x3 matrices with
//     M11 = E1111, M12 = E1122, M13 = sqrt(2) E1112,
//     M22 = E2222, M23 = sqrt(2) E2212, M33 = 2 E1212.
// In this orthonormal basis <E eps, eps> = v^T M v and planar rotations act
// as orthogonal conjugation, so Loewner comparisons and rotations are plain
// 3x3 matrix algebra.

namespace fomo2d {

struct IsoModuli {
  double kappa = 0.0;  // plane-stress bulk modulus
  double mu = 0.0;     // shear modulus

  bool valid() const { return kappa > 0.0 && mu > 0.0; }
};

// Plane-stress (kappa, mu) from engineering constants:
// kappa = E / (2 (1 - nu)), mu = E / (2 (1 + nu)).
IsoModuli plane_stress_moduli(double young, double poisson);

// Well-ordered isotropic pair (kappa- < kappa+, mu- < mu+).
struct PhasePair {
  IsoModuli weak;
  IsoModuli strong;

  double dkappa() const { return strong.kappa - weak.kappa; }
  double dmu() const { return strong.mu - weak.mu; }

  // throws std::invalid_argument if the pair is not well ordered
  static PhasePair make(const IsoModuli& weak, const IsoModuli& strong);
};

// 2D elasticity tensor stored as its Kelvin-Mandel 3x3 matrix.
struct Tensor4 {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();

  double trace() const { return m.trace(); }
};

// Orthotropic base coefficients plus orientation. The base matrix carries no
// shear coupling by construction (entries 13 and 23 are zero).
struct OrthoTensor {
  double e1111 = 0.0;
  double e1122 = 0.0;
  double e2222 = 0.0;
  double e1212 = 0.0;
  double phi = 0.0;  // orientation angle, normalized to [0, pi)

  Eigen::Matrix3d base_matrix() const;
  static OrthoTensor from_base_matrix(const Eigen::Matrix3d& base, double phi);
};

// wraps an angle into [0, pi)
double normalize_angle(double phi);

struct StrainM {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  static StrainM from_components(double e11, double e22, double e12);
  double norm() const { return v.norm(); }  // Frobenius norm of the tensor
};

struct StressM {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  static StressM from_components(double s11, double s22, double s12);

  struct Principal {
    double s1 = 0.0;  // s1 >= s2
    double s2 = 0.0;
    Eigen::Matrix2d basis = Eigen::Matrix2d::Identity();  // columns e1, e2
  };
  // Repeated eigenvalues (|s1-s2| < 1e-12 max(1,|s1|+|s2|)) fall back to the
  // identity basis.
  Principal principal() const;
};

// kappa Tr(eps) I + 2 mu dev(eps) as a Kelvin-Mandel matrix:
// [[k+m, k-m, 0], [k-m, k+m, 0], [0, 0, 2m]]
Tensor4 iso_tensor(const IsoModuli& m);

// Mandel matrix R with R a^M = (Q a Q^T)^M for the planar rotation Q(phi);
// conjugating a Kelvin-Mandel elasticity matrix by R equals the 4-index
// rotation rule with Q(phi).
Eigen::Matrix3d mandel_rotation(double phi);

// Same for an arbitrary orthogonal 2x2 Q (reflections included).
Eigen::Matrix3d mandel_conjugation(const Eigen::Matrix2d& Q);

// base coefficients rotated to the global frame
Tensor4 rotate(const OrthoTensor& t);

// a <= b in the Loewner order up to an absolute eigenvalue tolerance
bool loewner_leq(const Tensor4& a, const Tensor4& b, double tol = 1e-9);

// (t, s) with t = |Tr eps| and s = sqrt((e11-e22)^2 + 4 e12^2);
// t^2 + s^2 = 2 |eps|_F^2.
std::pair<double, double> strain_invariants(const StrainM& e);

double energy(const Tensor4& E, const StrainM& e);

// 0.5 (E + T_Q(E)) with Q = U Diag(1,-1) U^T; kills the shear couplings in
// the frame spanned by the columns of U while preserving the trace.
Tensor4 symmetrize_orthotropic(const Tensor4& E, const Eigen::Matrix2d& principal_basis);

}  // namespace fomo2d
