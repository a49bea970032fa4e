#include "fomo2d/tensor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fomo2d {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
}

IsoModuli plane_stress_moduli(double young, double poisson) {
  if (young <= 0.0 || poisson <= -1.0 || poisson >= 1.0) {
    throw std::invalid_argument("plane_stress_moduli: need E > 0 and nu in (-1, 1)");
  }
  return {young / (2.0 * (1.0 - poisson)), young / (2.0 * (1.0 + poisson))};
}

PhasePair PhasePair::make(const IsoModuli& weak, const IsoModuli& strong) {
  if (!weak.valid() || !strong.valid()) {
    throw std::invalid_argument("PhasePair: moduli must be positive");
  }
  if (!(weak.kappa < strong.kappa && weak.mu < strong.mu)) {
    throw std::invalid_argument("PhasePair: phases must be well ordered");
  }
  return {weak, strong};
}

Eigen::Matrix3d OrthoTensor::base_matrix() const {
  Eigen::Matrix3d b;
  b << e1111, e1122, 0.0,
       e1122, e2222, 0.0,
       0.0, 0.0, 2.0 * e1212;
  return b;
}

OrthoTensor OrthoTensor::from_base_matrix(const Eigen::Matrix3d& base, double phi) {
  OrthoTensor t;
  t.e1111 = base(0, 0);
  t.e1122 = base(0, 1);
  t.e2222 = base(1, 1);
  t.e1212 = 0.5 * base(2, 2);
  t.phi = normalize_angle(phi);
  return t;
}

double normalize_angle(double phi) {
  const double pi = std::numbers::pi;
  double a = std::fmod(phi, pi);
  if (a < 0.0) a += pi;
  if (a >= pi) a -= pi;  // fmod roundoff
  return a;
}

StrainM StrainM::from_components(double e11, double e22, double e12) {
  StrainM e;
  e.v << e11, e22, kSqrt2 * e12;
  return e;
}

StressM StressM::from_components(double s11, double s22, double s12) {
  StressM s;
  s.v << s11, s22, kSqrt2 * s12;
  return s;
}

StressM::Principal StressM::principal() const {
  const double s11 = v(0), s22 = v(1), s12 = v(2) / kSqrt2;
  const double mean = 0.5 * (s11 + s22);
  const double rad = std::hypot(0.5 * (s11 - s22), s12);
  Principal p;
  p.s1 = mean + rad;
  p.s2 = mean - rad;
  const double scale = std::max(1.0, std::abs(p.s1) + std::abs(p.s2));
  if (p.s1 - p.s2 < 1e-12 * scale) {
    return p;  // repeated eigenvalues: identity basis
  }
  // eigenvector for s1 of [[s11, s12], [s12, s22]]
  Eigen::Vector2d e1(s12, p.s1 - s11);
  if (e1.norm() < 1e-300) e1 << 1.0, 0.0;
  e1.normalize();
  p.basis.col(0) = e1;
  p.basis.col(1) = Eigen::Vector2d(-e1(1), e1(0));
  return p;
}

Tensor4 iso_tensor(const IsoModuli& m) {
  if (!m.valid()) throw std::invalid_argument("iso_tensor: moduli must be positive");
  Tensor4 t;
  t.m << m.kappa + m.mu, m.kappa - m.mu, 0.0,
         m.kappa - m.mu, m.kappa + m.mu, 0.0,
         0.0, 0.0, 2.0 * m.mu;
  return t;
}

Eigen::Matrix3d mandel_rotation(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  const double c2 = c * c, s2 = s * s, cs = c * s;
  Eigen::Matrix3d r;
  r << c2, s2, -kSqrt2 * cs,
       s2, c2, kSqrt2 * cs,
       kSqrt2 * cs, -kSqrt2 * cs, c2 - s2;
  return r;
}

Eigen::Matrix3d mandel_conjugation(const Eigen::Matrix2d& Q) {
  if ((Q * Q.transpose() - Eigen::Matrix2d::Identity()).norm() > 1e-9) {
    throw std::invalid_argument("mandel_conjugation: Q must be orthogonal");
  }
  // columns are the Mandel images of Q b_i Q^T for the basis
  // b_1 = diag(1,0), b_2 = diag(0,1), b_3 = offdiag(1/sqrt(2))
  Eigen::Matrix3d r;
  const Eigen::Matrix2d b1 = (Eigen::Matrix2d() << 1, 0, 0, 0).finished();
  const Eigen::Matrix2d b2 = (Eigen::Matrix2d() << 0, 0, 0, 1).finished();
  const Eigen::Matrix2d b3 = (Eigen::Matrix2d() << 0, 1.0 / kSqrt2, 1.0 / kSqrt2, 0).finished();
  int col = 0;
  for (const auto& b : {b1, b2, b3}) {
    const Eigen::Matrix2d im = Q * b * Q.transpose();
    r(0, col) = im(0, 0);
    r(1, col) = im(1, 1);
    r(2, col) = kSqrt2 * im(0, 1);
    ++col;
  }
  return r;
}

Tensor4 rotate(const OrthoTensor& t) {
  const Eigen::Matrix3d r = mandel_rotation(t.phi);
  Tensor4 out;
  out.m = r * t.base_matrix() * r.transpose();
  return out;
}

bool loewner_leq(const Tensor4& a, const Tensor4& b, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(b.m - a.m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

std::pair<double, double> strain_invariants(const StrainM& e) {
  const double t = std::abs(e.v(0) + e.v(1));
  const double s = std::sqrt((e.v(0) - e.v(1)) * (e.v(0) - e.v(1)) + 2.0 * e.v(2) * e.v(2));
  return {t, s};
}

double energy(const Tensor4& E, const StrainM& e) {
  return e.v.dot(E.m * e.v);
}

Tensor4 symmetrize_orthotropic(const Tensor4& E, const Eigen::Matrix2d& principal_basis) {
  const Eigen::Matrix2d Q =
      principal_basis * Eigen::Vector2d(1.0, -1.0).asDiagonal() * principal_basis.transpose();
  const Eigen::Matrix3d r = mandel_conjugation(Q);
  Tensor4 out;
  out.m = 0.5 * (E.m + r * E.m * r.transpose());
  return out;
}

}  // namespace fomo2d
