#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fomo2d/tensor.hpp"
#include "oracles.hpp"

#include <numbers>

using namespace fomo2d;

namespace {
PhasePair paper_phases(double contrast) {
  return PhasePair::make(plane_stress_moduli(contrast, 0.3), plane_stress_moduli(1.0, 0.3));
}
}  // namespace

TEST_CASE("plane-stress moduli from engineering constants") {
  const IsoModuli m = plane_stress_moduli(1.0, 0.3);
  CHECK(m.kappa == doctest::Approx(0.714285714).epsilon(1e-8));
  CHECK(m.mu == doctest::Approx(0.384615385).epsilon(1e-8));
}

TEST_CASE("isotropic tensor in Kelvin-Mandel form") {
  const Tensor4 t = iso_tensor({0.714, 0.385});
  CHECK(t.m(0, 0) == doctest::Approx(1.099));
  CHECK(t.m(0, 1) == doctest::Approx(0.329));
  CHECK(t.m(2, 2) == doctest::Approx(0.770));
  CHECK(t.m(0, 2) == 0.0);

  const Tensor4 unit = iso_tensor({1.0, 1.0});
  CHECK((unit.m - 2.0 * Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("rotation: identity, isotropy, brute-force oracle") {
  oracles::Rng rng(7);
  const PhasePair p = paper_phases(1e-2);

  OrthoTensor base = oracles::random_admissible_base(rng, p);
  base.phi = 0.0;
  CHECK((rotate(base).m - base.base_matrix()).norm() == doctest::Approx(0.0).epsilon(1e-14));

  OrthoTensor iso;
  iso.e1111 = 1.099;
  iso.e1122 = 0.329;
  iso.e2222 = 1.099;
  iso.e1212 = 0.385;
  for (double phi : {0.3, 1.2, 2.9}) {
    iso.phi = phi;
    CHECK((rotate(iso).m - iso.base_matrix()).norm() < 1e-13);
  }

  for (int i = 0; i < 20; ++i) {
    OrthoTensor t = oracles::random_admissible_base(rng, p);
    const Eigen::Matrix3d direct = rotate(t).m;
    const Eigen::Matrix3d brute = oracles::rotate_four_index(t.base_matrix(), t.phi);
    CHECK((direct - brute).norm() < 1e-12);
  }
  OrthoTensor quarter = oracles::random_admissible_base(rng, p);
  quarter.phi = std::numbers::pi / 4.0;
  CHECK((rotate(quarter).m - oracles::rotate_four_index(quarter.base_matrix(), quarter.phi))
            .norm() < 1e-12);
}

TEST_CASE("Loewner comparisons") {
  const PhasePair p = paper_phases(1e-2);
  const Tensor4 lo = iso_tensor(p.weak), hi = iso_tensor(p.strong);
  CHECK(loewner_leq(lo, hi));
  CHECK_FALSE(loewner_leq(hi, lo));
  CHECK(loewner_leq(hi, hi));
}

TEST_CASE("strain invariants") {
  auto [t1, s1] = strain_invariants(StrainM::from_components(0.5, 0.0, 0.0));
  CHECK(t1 == doctest::Approx(0.5));
  CHECK(s1 == doctest::Approx(0.5));
  auto [t2, s2] = strain_invariants(StrainM::from_components(0.0, 0.0, 0.5));
  CHECK(t2 == doctest::Approx(0.0));
  CHECK(s2 == doctest::Approx(1.0));
  auto [t3, s3] = strain_invariants(StrainM::from_components(0.5, 0.5, 0.0));
  CHECK(t3 == doctest::Approx(1.0));
  CHECK(s3 == doctest::Approx(0.0).epsilon(1e-14));

  // t^2 + s^2 = 2 |eps|^2 and rotation invariance
  oracles::Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    StrainM e = oracles::random_normalized_strain(rng);
    auto [t, s] = strain_invariants(e);
    CHECK(t * t + s * s == doctest::Approx(2.0 * e.norm() * e.norm()).epsilon(1e-12));
    const double phi = rng.uniform(0.0, 3.0);
    StrainM er;
    er.v = mandel_rotation(phi) * e.v;
    auto [tr, sr] = strain_invariants(er);
    CHECK(tr == doctest::Approx(t).epsilon(1e-12));
    CHECK(sr == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("energy: invariant form and endpoints") {
  const PhasePair p = paper_phases(1e-2);
  oracles::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const StrainM e = oracles::random_normalized_strain(rng);
    auto [t, s] = strain_invariants(e);
    (void)s;
    const double direct = energy(iso_tensor(p.strong), e);
    const double invariant = p.strong.kappa * t * t + p.strong.mu * (1.0 - t * t);
    CHECK(direct == doctest::Approx(invariant).epsilon(1e-12));
  }
  Tensor4 zero;
  CHECK(energy(zero, StrainM::from_components(1, 2, 3)) == 0.0);

  // hydrostatic normalized strain probes kappa
  const StrainM hydro = StrainM::from_components(0.5, 0.5, 0.0);
  CHECK(energy(iso_tensor({0.714, 0.385}), hydro) == doctest::Approx(0.714));
}

TEST_CASE("frame indifference of the energy") {
  oracles::Rng rng(13);
  const PhasePair p = paper_phases(1e-3);
  for (int i = 0; i < 30; ++i) {
    OrthoTensor t = oracles::random_admissible_base(rng, p);
    const StrainM e = oracles::random_normalized_strain(rng);
    // energy of the rotated tensor equals the base energy of the pulled-back
    // strain
    StrainM eb;
    eb.v = mandel_rotation(t.phi).transpose() * e.v;
    Tensor4 base;
    base.m = t.base_matrix();
    CHECK(energy(rotate(t), e) == doctest::Approx(energy(base, eb)).epsilon(1e-12));
  }
}

TEST_CASE("stress principal decomposition reconstructs and is orthonormal") {
  oracles::Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const StressM s = StressM::from_components(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                               rng.uniform(-2, 2));
    const auto pr = s.principal();
    CHECK(pr.s1 >= pr.s2);
    CHECK((pr.basis * pr.basis.transpose() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    const Eigen::Matrix2d rec = pr.basis *
                                Eigen::Vector2d(pr.s1, pr.s2).asDiagonal() *
                                pr.basis.transpose();
    CHECK(rec(0, 0) == doctest::Approx(s.v(0)).epsilon(1e-10));
    CHECK(rec(1, 1) == doctest::Approx(s.v(1)).epsilon(1e-10));
    CHECK(rec(0, 1) == doctest::Approx(s.v(2) / std::numbers::sqrt2).epsilon(1e-10));
  }
  // repeated eigenvalues fall back to the identity basis
  const auto pr = StressM::from_components(1.0, 1.0, 0.0).principal();
  CHECK((pr.basis - Eigen::Matrix2d::Identity()).norm() == 0.0);
}

TEST_CASE("symmetrize_orthotropic: fixed points, shear-kill, trace") {
  oracles::Rng rng(23);
  const PhasePair p = paper_phases(1e-2);

  // orthotropic input in basis U stays put
  OrthoTensor ortho = oracles::random_admissible_base(rng, p);
  const Tensor4 E = rotate(ortho);
  const double c = std::cos(ortho.phi), s = std::sin(ortho.phi);
  Eigen::Matrix2d U;
  U << c, -s, s, c;
  CHECK((symmetrize_orthotropic(E, U).m - E.m).norm() < 1e-12);

  const Tensor4 iso = iso_tensor(p.strong);
  Eigen::Matrix2d U2;
  const double a = 0.7;
  U2 << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  CHECK((symmetrize_orthotropic(iso, U2).m - iso.m).norm() < 1e-12);

  for (int i = 0; i < 30; ++i) {
    const Tensor4 t = oracles::random_admissible_tensor(rng, p);
    const Tensor4 sym = symmetrize_orthotropic(t, Eigen::Matrix2d::Identity());
    CHECK(std::abs(sym.m(0, 2)) < 1e-12);
    CHECK(std::abs(sym.m(1, 2)) < 1e-12);
    CHECK(sym.trace() == doctest::Approx(t.trace()).epsilon(1e-12));
  }
}

TEST_CASE("symmetrization never increases complementary energy on diagonal stresses") {
  oracles::Rng rng(29);
  const PhasePair p = paper_phases(1e-2);
  for (int i = 0; i < 50; ++i) {
    const Tensor4 t = oracles::random_admissible_tensor(rng, p);
    const Tensor4 sym = symmetrize_orthotropic(t, Eigen::Matrix2d::Identity());
    const Eigen::Vector3d sigma(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
    const double before = sigma.dot(t.m.inverse() * sigma);
    const double after = sigma.dot(sym.m.inverse() * sigma);
    CHECK(after <= before + 1e-10);
  }
}
