#include "fomo2d/laminate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fomo2d {

namespace {

struct FcContext {
  double s_plus = 0.0, s_minus = 0.0;  // |s1+s2|, |s1-s2|
  double s1 = 0.0, s2 = 0.0;
  double comp_weak = 0.0, comp_strong = 0.0;
};

FcContext fc_context(const StressM& s, const PhasePair& p) {
  FcContext c;
  const auto pr = s.principal();
  c.s1 = pr.s1;
  c.s2 = pr.s2;
  c.s_plus = std::abs(pr.s1 + pr.s2);
  c.s_minus = std::abs(pr.s1 - pr.s2);
  c.comp_weak = complementary_energy_iso(s, p.weak);
  c.comp_strong = complementary_energy_iso(s, p.strong);
  return c;
}

FcBranch dispatch_branch(const FcContext& c, double v, const PhasePair& p) {
  const double d2 = p.weak.kappa * (p.strong.kappa + p.strong.mu) +
                    v * p.strong.mu * p.dkappa();
  const double d3 = p.weak.mu * (p.strong.kappa + p.strong.mu) +
                    v * p.strong.kappa * p.dmu();
  const double lhs2 = v * p.strong.mu * p.dkappa() * c.s_plus;
  const double lhs3 = v * p.strong.kappa * p.dmu() * c.s_minus;
  if (lhs2 < d2 * c.s_minus && lhs3 < d3 * c.s_plus) return FcBranch::C1;
  if (lhs2 >= d2 * c.s_minus) return FcBranch::C2;
  return FcBranch::C3;
}

}  // namespace

void AmConfig::validate() const {
  if (density_change_tol <= 0.0 || compliance_rel_tol <= 0.0 || volume_bisect_tol <= 0.0 ||
      max_iters < 1) {
    throw std::invalid_argument("AmConfig: tolerances must be positive");
  }
}

double complementary_energy_iso(const StressM& s, const IsoModuli& m) {
  const double tr = s.v(0) + s.v(1);
  const double dev2 = (s.v(0) - s.v(1)) * (s.v(0) - s.v(1)) + 2.0 * s.v(2) * s.v(2);
  return tr * tr / (4.0 * m.kappa) + dev2 / (4.0 * m.mu);
}

FcValue f_c_hs(const StressM& s, double v, const PhasePair& p) {
  if (!(v > 0.0) || v > 1.0) throw std::domain_error("f_c_hs: v must lie in (0, 1]");
  const FcContext c = fc_context(s, p);
  const double kp = p.strong.kappa, mp = p.strong.mu;
  const double km = p.weak.kappa, mm = p.weak.mu;
  const double dk = p.dkappa(), dm = p.dmu();
  switch (dispatch_branch(c, v, p)) {
    case FcBranch::C1: {
      const double a = km * kp * dm * c.s_minus + mm * mp * dk * c.s_plus;
      const double d1 = (1.0 - v) * km * mm * (kp + mp) + v * kp * mp * (km + mm);
      const double val = (1.0 - v) * c.comp_weak + v * c.comp_strong -
                         v * (1.0 - v) * a * a / (4.0 * km * kp * mm * mp * d1);
      return {val, FcBranch::C1};
    }
    case FcBranch::C2: {
      const double d2 = km * (kp + mp) + v * mp * dk;
      const double val = c.comp_strong +
                         (1.0 - v) * dk * (kp + mp) * c.s_plus * c.s_plus / (4.0 * kp * d2);
      return {val, FcBranch::C2};
    }
    case FcBranch::C3:
    default: {
      const double d3 = mm * (kp + mp) + v * kp * dm;
      const double val = c.comp_strong +
                         (1.0 - v) * dm * (kp + mp) * c.s_minus * c.s_minus / (4.0 * mp * d3);
      return {val, FcBranch::C3};
    }
  }
}

double f_c_derivative(const StressM& s, double v, const PhasePair& p) {
  if (!(v > 0.0) || v > 1.0) throw std::domain_error("f_c_derivative: v must lie in (0, 1]");
  const FcContext c = fc_context(s, p);
  const double kp = p.strong.kappa, mp = p.strong.mu;
  const double km = p.weak.kappa, mm = p.weak.mu;
  const double dk = p.dkappa(), dm = p.dmu();
  switch (dispatch_branch(c, v, p)) {
    case FcBranch::C1: {
      const double a = km * kp * dm * c.s_minus + mm * mp * dk * c.s_plus;
      const double d1_0 = km * mm * (kp + mp);
      const double d1_s = kp * mp * (km + mm) - km * mm * (kp + mp);
      const double d1 = d1_0 + v * d1_s;
      const double phi_prime = ((1.0 - 2.0 * v) * d1 - v * (1.0 - v) * d1_s) / (d1 * d1);
      return c.comp_strong - c.comp_weak -
             a * a / (4.0 * km * kp * mm * mp) * phi_prime;
    }
    case FcBranch::C2: {
      const double d2 = km * (kp + mp) + v * mp * dk;
      const double psi_prime = (-d2 - (1.0 - v) * mp * dk) / (d2 * d2);
      return dk * (kp + mp) * c.s_plus * c.s_plus / (4.0 * kp) * psi_prime;
    }
    case FcBranch::C3:
    default: {
      const double d3 = mm * (kp + mp) + v * kp * dm;
      const double psi_prime = (-d3 - (1.0 - v) * kp * dm) / (d3 * d3);
      return dm * (kp + mp) * c.s_minus * c.s_minus / (4.0 * mp) * psi_prime;
    }
  }
}

double local_volume_update(const StressM& s, double lambda, const PhasePair& p,
                           const AmConfig& cfg) {
  (void)cfg;
  if (lambda < 0.0) throw std::domain_error("local_volume_update: lambda must be >= 0");
  const double mag = s.v.norm();
  if (mag == 0.0) return lambda > 0.0 ? 0.0 : 1.0;
  const double v_eps = 1e-12;
  const auto h_prime = [&](double v) { return f_c_derivative(s, v, p) + lambda; };
  if (h_prime(1.0) <= 0.0) return 1.0;
  if (h_prime(v_eps) >= 0.0) return 0.0;
  double a = v_eps, b = 1.0;
  for (int i = 0; i < 100 && b - a > 1e-14; ++i) {
    const double mid = 0.5 * (a + b);
    (h_prime(mid) <= 0.0 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

Tensor4 fc_tensor(const Eigen::Vector2d& e, const PhasePair& p) {
  if (std::abs(e.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("fc_tensor: direction must be a unit vector");
  }
  const Eigen::Matrix3d ep = iso_tensor(p.strong).m;
  const double mp = p.strong.mu;
  const double corr = 1.0 / mp - 1.0 / (p.strong.kappa + p.strong.mu);
  const double r2 = std::numbers::sqrt2;

  const auto quad = [&](const Eigen::Vector3d& eps_m) {
    const Eigen::Vector3d sm = ep * eps_m;
    Eigen::Matrix2d sig;
    sig << sm(0), sm(2) / r2, sm(2) / r2, sm(1);
    const Eigen::Vector2d se = sig * e;
    return eps_m.dot(sm) - se.squaredNorm() / mp + corr * se.dot(e) * se.dot(e);
  };

  // polarization of the quadratic form on the Mandel basis
  Tensor4 f;
  Eigen::Vector3d basis[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                              Eigen::Vector3d::UnitZ()};
  double diag[3];
  for (int i = 0; i < 3; ++i) {
    diag[i] = quad(basis[i]);
    f.m(i, i) = diag[i];
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double q = quad(basis[i] + basis[j]);
      f.m(i, j) = f.m(j, i) = 0.5 * (q - diag[i] - diag[j]);
    }
  }
  return f;
}

namespace {

Eigen::Matrix3d reactive_term(const PhasePair& p) {
  // R = ((E-)^-1 - (E+)^-1)^-1, isotropic with kappa_R = k- k+ / dk etc.
  const IsoModuli r{p.weak.kappa * p.strong.kappa / p.dkappa(),
                    p.weak.mu * p.strong.mu / p.dmu()};
  return iso_tensor(r).m;
}

// laminate base matrix for axis-aligned directions with weights (w1, w2)
Eigen::Matrix3d laminate_base_matrix(double w1, double w2, double v, const PhasePair& p) {
  Eigen::Matrix3d B = reactive_term(p) + v * w1 * fc_tensor(Eigen::Vector2d::UnitX(), p).m;
  if (w2 != 0.0) B += v * w2 * fc_tensor(Eigen::Vector2d::UnitY(), p).m;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(B);
  if (!lu.isInvertible()) {
    throw std::runtime_error("laminate_update: singular lamination term");
  }
  const Eigen::Matrix3d inv_eff =
      iso_tensor(p.strong).m.inverse() + (1.0 - v) * lu.inverse();
  return inv_eff.inverse();
}

OrthoTensor laminate_base(const StressM& s, double v, const PhasePair& p) {
  const auto pr = s.principal();
  const double phi = std::atan2(pr.basis(1, 0), pr.basis(0, 0));
  const LaminateParams lp = laminate_params(s, v, p);
  Eigen::Matrix3d base;
  if (lp.rank == 1) {
    // the direction slot that attains the bound was already resolved against
    // the principal stress (sigma1, sigma2, 0)
    const Eigen::Vector3d sp(pr.s1, pr.s2, 0.0);
    const Eigen::Matrix3d b1 = laminate_base_matrix(1.0, 0.0, v, p);
    const Eigen::Matrix3d b2 = laminate_base_matrix(0.0, 1.0, v, p);
    const double c1 = sp.dot(b1.inverse() * sp);
    const double c2 = sp.dot(b2.inverse() * sp);
    base = (c1 <= c2) ? b1 : b2;
  } else {
    base = laminate_base_matrix(lp.m1, lp.m2, v, p);
  }
  return OrthoTensor::from_base_matrix(base, phi);
}

}  // namespace

LaminateParams laminate_params(const StressM& s, double v, const PhasePair& p) {
  if (!(v > 0.0) || v > 1.0) throw std::domain_error("laminate_params: v must lie in (0, 1]");
  const auto pr = s.principal();
  const FcContext c = fc_context(s, p);
  const FcBranch branch = dispatch_branch(c, v, p);
  LaminateParams lp;
  lp.e1 = pr.basis.col(0);
  lp.e2 = pr.basis.col(1);

  if (branch == FcBranch::C1) {
    // rank one, laminated orthogonally to the attaining principal direction
    lp.rank = 1;
    lp.m1 = 1.0;
    lp.m2 = 0.0;
    const Eigen::Vector3d sp(pr.s1, pr.s2, 0.0);
    const Eigen::Matrix3d b1 = laminate_base_matrix(1.0, 0.0, v, p);
    const Eigen::Matrix3d b2 = laminate_base_matrix(0.0, 1.0, v, p);
    if (sp.dot(b2.inverse() * sp) < sp.dot(b1.inverse() * sp)) {
      std::swap(lp.e1, lp.e2);
    }
    return lp;
  }

  lp.rank = 2;
  const double scale = std::max(1.0, std::abs(c.s1) + std::abs(c.s2));
  if (branch == FcBranch::C2) {
    const double denom = c.s1 + c.s2;
    if (std::abs(denom) < 1e-14 * scale) {
      lp.rank = 1;
      lp.m1 = 1.0;
      lp.m2 = 0.0;
      lp.degenerate_fallback = true;
      return lp;
    }
    const double d2 = p.weak.kappa * (p.strong.kappa + p.strong.mu) +
                      v * p.strong.mu * p.dkappa();
    lp.m1 = 0.5 + d2 * (c.s2 - c.s1) / (2.0 * v * p.strong.mu * p.dkappa() * denom);
    lp.m2 = 1.0 - lp.m1;
  } else {
    const double denom = c.s1 - c.s2;
    if (std::abs(denom) < 1e-14 * scale) {
      lp.rank = 1;
      lp.m1 = 1.0;
      lp.m2 = 0.0;
      lp.degenerate_fallback = true;
      return lp;
    }
    const double d3 = p.weak.mu * (p.strong.kappa + p.strong.mu) +
                      v * p.strong.kappa * p.dmu();
    lp.m1 = 0.5 + d3 * (c.s1 + c.s2) / (2.0 * v * p.strong.kappa * p.dmu() * (c.s2 - c.s1));
    lp.m2 = 1.0 - lp.m1;
  }
  return lp;
}

Tensor4 laminate_update(const StressM& s, double v, const PhasePair& p) {
  if (v < 0.0 || v > 1.0) throw std::domain_error("laminate_update: v must lie in [0, 1]");
  if (v == 0.0) return iso_tensor(p.weak);
  if (v == 1.0) return iso_tensor(p.strong);
  return rotate(laminate_base(s, v, p));
}

AmResult am_solve(FemProblem& fem, const PhasePair& p, double vbar_target,
                  const AmConfig& cfg) {
  cfg.validate();
  if (fem.loadcase_count() != 1) {
    throw std::invalid_argument("am_solve: single-loadcase scheme");
  }
  const int nel = fem.mesh().elem_count();
  const double domain_area = fem.mesh().width * fem.mesh().height;

  AmResult res;
  OrthoTensor strong_base = OrthoTensor::from_base_matrix(iso_tensor(p.strong).m, 0.0);
  std::vector<Eigen::Matrix3d> km(static_cast<std::size_t>(nel), iso_tensor(p.strong).m);
  std::vector<double> v(static_cast<std::size_t>(nel), 1.0);
  res.design.tensors.assign(static_cast<std::size_t>(nel), strong_base);

  double lambda = 0.0;
  double prev_compliance = std::numeric_limits<double>::infinity();
  double prev_maxchange = std::numeric_limits<double>::infinity();

  double load_sq = 0.0;
  for (const auto& pl : fem.loadcases()[0].loads) load_sq += pl.magnitude * pl.magnitude;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const StateSolution state = fem.solve(km);
    const double c = state.total_compliance();

    const double rel = std::abs(c - prev_compliance) / std::max(1e-300, std::abs(c));
    if (it > 1 && prev_maxchange < cfg.density_change_tol && rel < cfg.compliance_rel_tol) {
      res.converged = true;
      res.compliance = state.compliance;
      break;
    }
    prev_compliance = c;

    std::vector<StressM> sig(static_cast<std::size_t>(nel));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int e = 0; e < nel; ++e) {
      sig[static_cast<std::size_t>(e)] =
          fem.element_stress(state, km[static_cast<std::size_t>(e)], e, 0);
    }

    // price per unit local volume fraction is lambda / |Omega|
    const auto volume_at = [&](double lam) {
      double acc = 0.0;
      for (int e = 0; e < nel; ++e) {
        acc += local_volume_update(sig[static_cast<std::size_t>(e)], lam / domain_area, p, cfg);
      }
      return acc / nel;
    };
    double lo = 0.0;
    double hi = std::max(10.0 * p.strong.kappa * load_sq / std::max(vbar_target, 1e-6),
                         lambda * 4.0);
    int expansions = 0;
    while (volume_at(hi) > vbar_target) {
      hi *= 10.0;
      if (++expansions > 6) throw std::runtime_error("am_solve: lambda bracket failure");
    }
    if (volume_at(lo) > vbar_target) {
      for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(volume_at(mid) - vbar_target) <= cfg.volume_bisect_tol) {
          lo = hi = mid;
          break;
        }
        (volume_at(mid) >= vbar_target ? lo : hi) = mid;
      }
      lambda = 0.5 * (lo + hi);
    } else {
      lambda = 0.0;
    }

    double maxchange = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : maxchange)
#endif
    for (int e = 0; e < nel; ++e) {
      const auto& se = sig[static_cast<std::size_t>(e)];
      const double vn = local_volume_update(se, lambda / domain_area, p, cfg);
      maxchange = std::max(maxchange, std::abs(vn - v[static_cast<std::size_t>(e)]));
      v[static_cast<std::size_t>(e)] = vn;
      OrthoTensor base = strong_base;
      if (vn <= 0.0) {
        base = OrthoTensor::from_base_matrix(iso_tensor(p.weak).m, 0.0);
      } else if (vn < 1.0) {
        base = laminate_base(se, vn, p);
      }
      res.design.tensors[static_cast<std::size_t>(e)] = base;
      km[static_cast<std::size_t>(e)] = rotate(base).m;
    }
    prev_maxchange = maxchange;
    res.log.push_back({it, c, lambda, maxchange});
    res.compliance = state.compliance;
  }

  res.lambda = lambda;
  res.design.vplus = v;
  return res;
}

}  // namespace fomo2d
