#include "fomo2d/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fomo2d {

namespace {

void check_unit_interval(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(name) + " must lie in [0, 1]");
  }
}

// root of the strictly increasing map v -> f_hs(t, v) - W
double bisect_activating(double W, double t, const PhasePair& p) {
  double lo = 0.0, hi = 1.0;
  double flo = hs_envelope_energy(t, lo, p) - W;
  if (flo >= 0.0) return 0.0;
  if (hs_envelope_energy(t, hi, p) - W <= 0.0) return 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (hs_envelope_energy(t, mid, p) - W <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct GoldenMax {
  double arg = 0.0;
  double value = 0.0;
};

template <class F>
GoldenMax golden_maximize(F&& f, double a, double b, double tol) {
  const double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  return {mid, f(mid)};
}

}  // namespace

double voigt_energy(double t, double v, const PhasePair& p) {
  const double kv = p.weak.kappa + v * p.dkappa();
  const double mv = p.weak.mu + v * p.dmu();
  return kv * t * t + mv * (1.0 - t * t);
}

QValue q_correction(double t, double v, const PhasePair& p) {
  check_unit_interval(t, "t");
  check_unit_interval(v, "v");
  const double dk = p.dkappa(), dm = p.dmu();
  const double kp = p.strong.kappa, mp = p.strong.mu;
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double d2 = kp + mp - dk * v;
  const double d3 = kp + mp - dm * v;

  if (v * t * dk <= d2 * s && v * dm * s <= d3 * t) {
    const double d1 = kp + mp - (dk + dm) * v;
    const double num = dk * t - dm * s;
    return {v * (1.0 - v) * num * num / d1, HsBranch::B1};
  }
  if (v * t * dk > d2 * s) {
    return {(1.0 - v) * (v * t * t * dk * dk / d2 - (1.0 - t * t) * dm), HsBranch::B2};
  }
  // Gamma_23 is empty, so the third condition must hold here
  if (!(v * dm * s > d3 * t)) {
    throw std::logic_error("q_correction: branch dispatch failed (Gamma_23 reached)");
  }
  return {(1.0 - v) * (v * dm * dm * (1.0 - t * t) / d3 - t * t * dk), HsBranch::B3};
}

double hs_envelope_energy(double t, double v, const PhasePair& p) {
  return voigt_energy(t, v, p) - q_correction(t, v, p).value;
}

double f_hs(const StrainM& e, double v, const PhasePair& p) {
  check_unit_interval(v, "v");
  const double nrm = e.norm();
  if (std::abs(nrm - std::numbers::sqrt2 / 2.0) > 1e-10) {
    throw std::domain_error("f_hs: strain must have Frobenius norm sqrt(2)/2");
  }
  const auto [t, s] = strain_invariants(e);
  (void)s;
  const Eigen::Matrix3d mix =
      (1.0 - v) * iso_tensor(p.weak).m + v * iso_tensor(p.strong).m;
  return e.v.dot(mix * e.v) - q_correction(std::min(t, 1.0), v, p).value;
}

double activating_volume_from_energy(double W, double t, const PhasePair& p) {
  check_unit_interval(t, "t");
  const double dk = p.dkappa(), dm = p.dmu();
  const double kp = p.strong.kappa, mp = p.strong.mu;
  const double km = p.weak.kappa, mm = p.weak.mu;
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double c = t + s;
  const double c2 = c * c;
  const double sum_p = kp + mp;
  const double v12 = sum_p / dk * s / c;
  const double v13 = sum_p / dm * t / c;
  const double vtol = 1e-9;
  // the root is unique, so a candidate is validated against the envelope
  const double res_tol = 1e-8 * std::max(1.0, std::abs(W));
  const auto validated = [&](double v) {
    const double vc = std::clamp(v, 0.0, 1.0);
    return std::abs(hs_envelope_energy(t, vc, p) - W) <= res_tol;
  };

  // first branch: "negative" root of the quadratic
  const double P = W * (dm + dk) + (1.0 - 2.0 * t * t) * (dm * kp - dk * mp);
  const double D = (P + dm * dk * c2) * (P + dm * dk * c2) -
                   4.0 * dm * dk * sum_p * c2 * (W - (1.0 - t * t) * mm - t * t * km);
  if (D < -1e-9) {
    throw std::domain_error("activating_volume: negative discriminant (inconsistent inputs)");
  }
  const double v1 = 0.5 + (P - std::sqrt(std::max(D, 0.0))) / (2.0 * dm * dk * c2);
  if (v1 <= std::min(v12, v13) + vtol && v1 >= -1e-6 && v1 <= 1.0 + 1e-6 && validated(v1)) {
    return std::clamp(v1, 0.0, 1.0);
  }

  const double scale = std::max(1.0, std::abs(W) + sum_p);
  const double den2 = W - mp * (1.0 - 2.0 * t * t);
  if (std::abs(den2) >= 1e-12 * scale) {
    const double v2 = sum_p / dk * (1.0 - t * t * (km + mp) / den2);
    if (v2 > v12 - vtol && v2 >= -1e-6 && v2 <= 1.0 + 1e-6 && validated(v2)) {
      return std::clamp(v2, 0.0, 1.0);
    }
  }

  const double den3 = W + kp * (1.0 - 2.0 * t * t);
  if (std::abs(den3) >= 1e-12 * scale) {
    const double v3 = sum_p / dm * (1.0 - (1.0 - t * t) * (kp + mm) / den3);
    if (v3 > v13 - vtol && v3 >= -1e-6 && v3 <= 1.0 + 1e-6 && validated(v3)) {
      return std::clamp(v3, 0.0, 1.0);
    }
  }

  // fragile seam (near-singular denominator or roundoff on a branch
  // boundary): the monotone root is still unique
  return bisect_activating(W, t, p);
}

double activating_volume(const StrainM& e, const Tensor4& E, const PhasePair& p) {
  if (!loewner_leq(iso_tensor(p.weak), E) || !loewner_leq(E, iso_tensor(p.strong))) {
    throw std::domain_error("activating_volume: tensor violates E- <= E <= E+");
  }
  const double nrm = e.norm();
  if (!(nrm > 0.0)) throw std::domain_error("activating_volume: zero strain");
  // scale-invariant: evaluate on the normalized strain
  StrainM en;
  en.v = e.v * (std::numbers::sqrt2 / 2.0 / nrm);
  const auto [t, s] = strain_invariants(en);
  (void)s;
  const double W = energy(E, en);
  return activating_volume_from_energy(W, std::min(t, 1.0), p);
}

double emax_energy(double t, const OrthoTensor& base) {
  check_unit_interval(t, "t");
  const double a = base.e1111, b = base.e1122, cc = base.e2222, d = base.e1212;
  const double xi = a - 2.0 * b + cc - 4.0 * d;
  const double diff = a - cc;
  const double t2 = t * t;
  if (xi < 0.0 && t <= std::abs(xi) / std::hypot(xi, diff)) {
    return 0.25 * t2 * (a + 2.0 * b + cc) + d * (1.0 - t2) - t2 * diff * diff / (4.0 * xi);
  }
  return 0.25 * (a - 2.0 * b + cc) + b * t2 +
         0.5 * std::abs(diff) * t * std::sqrt(std::max(0.0, 1.0 - t2));
}

bool ortho_base_admissible(const OrthoTensor& base, const PhasePair& p, double tol) {
  const double am = p.weak.kappa + p.weak.mu, bm = p.weak.kappa - p.weak.mu;
  const double ap = p.strong.kappa + p.strong.mu, bp = p.strong.kappa - p.strong.mu;
  if (base.e1212 < p.weak.mu - tol || base.e1212 > p.strong.mu + tol) return false;
  const auto min_eig2 = [](double a, double q, double b) {
    return 0.5 * (a + b) - std::hypot(0.5 * (a - b), q);
  };
  if (min_eig2(base.e1111 - am, base.e1122 - bm, base.e2222 - am) < -tol) return false;
  if (min_eig2(ap - base.e1111, bp - base.e1122, ap - base.e2222) < -tol) return false;
  return true;
}

double worst_case_volume(const OrthoTensor& base, const PhasePair& p,
                         const SearchConfig1D& cfg) {
  if (cfg.coarse_samples < 3 || cfg.golden_tol <= 0.0) {
    throw std::invalid_argument("worst_case_volume: invalid search config");
  }
  if (!ortho_base_admissible(base, p)) {
    throw std::domain_error("worst_case_volume: base violates the block Loewner bounds");
  }
  const auto vhat = [&](double t) {
    return activating_volume_from_energy(emax_energy(t, base), t, p);
  };

  const int n = cfg.coarse_samples;
  std::vector<double> vals(static_cast<size_t>(n));
  const double step = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = vhat(i * step);

  struct Bracket {
    double lo, hi, peak;
  };
  std::vector<Bracket> brackets;
  for (int i = 0; i < n; ++i) {
    const double left = (i > 0) ? vals[static_cast<size_t>(i - 1)] : -1.0;
    const double right = (i < n - 1) ? vals[static_cast<size_t>(i + 1)] : -1.0;
    if (vals[static_cast<size_t>(i)] >= left && vals[static_cast<size_t>(i)] >= right) {
      brackets.push_back({std::max(0.0, (i - 1) * step), std::min(1.0, (i + 1) * step),
                          vals[static_cast<size_t>(i)]});
    }
  }
  std::sort(brackets.begin(), brackets.end(),
            [](const Bracket& x, const Bracket& y) { return x.peak > y.peak; });
  if (static_cast<int>(brackets.size()) > cfg.brackets_max) {
    brackets.resize(static_cast<size_t>(cfg.brackets_max));
  }

  double best = 0.0;
  for (const auto& br : brackets) {
    best = std::max(best, golden_maximize(vhat, br.lo, br.hi, cfg.golden_tol).value);
  }
  return std::clamp(best, 0.0, 1.0);
}

double voigt_min_volume(const Tensor4& E, const PhasePair& p) {
  const Tensor4 lo = iso_tensor(p.weak), hi = iso_tensor(p.strong);
  if (!loewner_leq(lo, E) || !loewner_leq(E, hi)) {
    throw std::domain_error("voigt_min_volume: tensor violates E- <= E <= E+");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(E.m - lo.m, hi.m - lo.m,
                                                               Eigen::EigenvaluesOnly);
  return std::clamp(es.eigenvalues().maxCoeff(), 0.0, 1.0);
}

double zo_volume(const Tensor4& E, const PhasePair& p) {
  const Tensor4 lo = iso_tensor(p.weak), hi = iso_tensor(p.strong);
  if (!loewner_leq(lo, E) || !loewner_leq(E, hi)) {
    throw std::domain_error("zo_volume: tensor violates E- <= E <= E+");
  }
  return std::clamp((E.trace() - lo.trace()) / (hi.trace() - lo.trace()), 0.0, 1.0);
}

}  // namespace fomo2d
