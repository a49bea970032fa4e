// Test-only oracles, independent of the library's closed-form paths.
#pragma once

#include "fomo2d/bounds.hpp"
#include "fomo2d/tensor.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace oracles {

// deterministic uniform in [0, 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

using Tensor2222 = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

// Kelvin-Mandel 3x3 -> full 4-index array
inline Tensor2222 to_four_index(const Eigen::Matrix3d& m) {
  const double r2 = std::numbers::sqrt2;
  Tensor2222 t{};
  const auto set = [&](int i, int j, int k, int l, double v) {
    t[i][j][k][l] = t[j][i][k][l] = t[i][j][l][k] = t[j][i][l][k] = v;
    t[k][l][i][j] = t[l][k][i][j] = t[k][l][j][i] = t[l][k][j][i] = v;
  };
  set(0, 0, 0, 0, m(0, 0));
  set(0, 0, 1, 1, m(0, 1));
  set(1, 1, 1, 1, m(1, 1));
  set(0, 0, 0, 1, m(0, 2) / r2);
  set(1, 1, 0, 1, m(1, 2) / r2);
  set(0, 1, 0, 1, m(2, 2) / 2.0);
  return t;
}

inline Eigen::Matrix3d to_mandel(const Tensor2222& t) {
  const double r2 = std::numbers::sqrt2;
  Eigen::Matrix3d m;
  m(0, 0) = t[0][0][0][0];
  m(0, 1) = m(1, 0) = t[0][0][1][1];
  m(1, 1) = t[1][1][1][1];
  m(0, 2) = m(2, 0) = r2 * t[0][0][0][1];
  m(1, 2) = m(2, 1) = r2 * t[1][1][0][1];
  m(2, 2) = 2.0 * t[0][1][0][1];
  return m;
}

// brute-force rotation by summation over all indices
inline Eigen::Matrix3d rotate_four_index(const Eigen::Matrix3d& base, double phi) {
  const Tensor2222 tb = to_four_index(base);
  const double c = std::cos(phi), s = std::sin(phi);
  const double Q[2][2] = {{c, -s}, {s, c}};
  Tensor2222 tr{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double acc = 0.0;
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
              for (int r = 0; r < 2; ++r)
                for (int ss = 0; ss < 2; ++ss)
                  acc += Q[i][p] * Q[j][q] * Q[k][r] * Q[l][ss] * tb[p][q][r][ss];
          tr[i][j][k][l] = acc;
        }
  return to_mandel(tr);
}

// random admissible tensor E- + W^(1/2) Z W^(1/2) with Z having eigenvalues
// in [0, 1]
inline fomo2d::Tensor4 random_admissible_tensor(Rng& rng, const fomo2d::PhasePair& p) {
  using namespace fomo2d;
  const Eigen::Matrix3d lo = iso_tensor(p.weak).m;
  const Eigen::Matrix3d w = iso_tensor(p.strong).m - lo;
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  const Eigen::Matrix3d sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym);
  Eigen::Vector3d ev;
  for (int i = 0; i < 3; ++i) {
    ev(i) = rng.uniform(0.0, 1.0);
  }
  const Eigen::Matrix3d z =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ws(w);
  const Eigen::Matrix3d wsqrt = ws.operatorSqrt();
  Tensor4 t;
  t.m = lo + wsqrt * z * wsqrt;
  return t;
}

// random orthotropic base inside the block Loewner bounds; diagonal entries
// are redrawn until the coupling interval is nonempty
inline fomo2d::OrthoTensor random_admissible_base(Rng& rng, const fomo2d::PhasePair& p) {
  using namespace fomo2d;
  const double am = p.weak.kappa + p.weak.mu, ap = p.strong.kappa + p.strong.mu;
  const double bm = p.weak.kappa - p.weak.mu, bp = p.strong.kappa - p.strong.mu;
  OrthoTensor t;
  for (;;) {
    t.e1111 = rng.uniform(am, ap);
    t.e2222 = rng.uniform(am, ap);
    const double slo = std::sqrt((t.e1111 - am) * (t.e2222 - am));
    const double shi = std::sqrt((ap - t.e1111) * (ap - t.e2222));
    const double lo = std::max(bm - slo, bp - shi);
    const double hi = std::min(bm + slo, bp + shi);
    if (hi < lo) continue;
    t.e1122 = rng.uniform(lo, hi);
    break;
  }
  t.e1212 = rng.uniform(p.weak.mu, p.strong.mu);
  t.phi = rng.uniform(0.0, std::numbers::pi);
  return t;
}

// normalized strain with |eps|_F = sqrt(2)/2
inline fomo2d::StrainM random_normalized_strain(Rng& rng) {
  fomo2d::StrainM e;
  do {
    e.v << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
  } while (e.v.norm() < 1e-6);
  e.v *= std::numbers::sqrt2 / 2.0 / e.v.norm();
  return e;
}

// monotone-bisection root of f_hs(t, v) = W
inline double bisect_activating_volume(double W, double t, const fomo2d::PhasePair& p) {
  const auto f = [&](double v) { return fomo2d::hs_envelope_energy(t, v, p) - W; };
  if (f(0.0) >= 0.0) return 0.0;
  if (f(1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// dense sampling of <E eps, eps> over normalized strains at fixed |Tr eps|
inline double emax_by_sampling(double t, const fomo2d::OrthoTensor& base, int n) {
  using namespace fomo2d;
  const Eigen::Matrix3d m = base.base_matrix();
  const double rho = std::sqrt(std::max(0.0, 1.0 - t * t)) / 2.0;
  double best = -1e300;
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n;
    const double zeta = rho * std::cos(theta);
    const double r = rho * std::sin(theta);
    for (double tr : {t, -t}) {
      Eigen::Vector3d eps(0.5 * tr + zeta, 0.5 * tr - zeta, std::numbers::sqrt2 * r);
      best = std::max(best, eps.dot(m * eps));
    }
  }
  return best;
}

}  // namespace oracles
