#include "fomo2d/setgeom.hpp"

#include "fomo2d/laminate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fomo2d {

double NormalSampler::uniform01() {
  // splitmix64 step; avoids distribution objects whose streams differ across
  // standard library implementations
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSampler::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

StrainSample sample_strains(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_strains: n must be >= 1");
  NormalSampler rng(seed);
  StrainSample out;
  out.strains.reserve(static_cast<size_t>(n));
  const double radius = std::numbers::sqrt2 / 2.0;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d g;
    do {
      g << rng.next(), rng.next(), rng.next();
    } while (g.norm() < 1e-12);
    StrainM e;
    e.v = g * (radius / g.norm());
    out.strains.push_back(e);
  }
  return out;
}

EnvelopeSurface envelope(SetLabel label, double v, const StrainSample& strains,
                         const PhasePair& p) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("envelope: v must lie in [0, 1]");
  EnvelopeSurface surf;
  surf.label = label;
  surf.v = v;
  surf.support.reserve(strains.strains.size());
  const Tensor4 ehi = iso_tensor(p.strong);
  for (const auto& e : strains.strains) {
    switch (label) {
      case SetLabel::A0:
        surf.support.push_back(energy(ehi, e));
        break;
      case SetLabel::A1: {
        const auto [t, s] = strain_invariants(e);
        (void)s;
        surf.support.push_back(voigt_energy(std::min(t, 1.0), v, p));
        break;
      }
      case SetLabel::A2:
        surf.support.push_back(f_hs(e, v, p));
        break;
    }
  }
  return surf;
}

ProductSpaceSweep product_space_sweep(const std::vector<double>& v_samples,
                                      const StrainSample& strains, const PhasePair& p) {
  ProductSpaceSweep sweep;
  sweep.v_samples = v_samples;
  for (double v : v_samples) {
    sweep.voigt_layers.push_back(envelope(SetLabel::A1, v, strains, p));
    sweep.hs_layers.push_back(envelope(SetLabel::A2, v, strains, p));
  }
  return sweep;
}

std::vector<Tensor4> laminate_cloud(int n_stresses, double v, const PhasePair& p,
                                    std::uint64_t seed) {
  if (!(v > 0.0 && v < 1.0)) {
    throw std::domain_error("laminate_cloud: v must lie in (0, 1)");
  }
  NormalSampler rng(seed);
  std::vector<Tensor4> cloud;
  cloud.reserve(static_cast<size_t>(n_stresses));
  for (int i = 0; i < n_stresses; ++i) {
    StressM s;
    s.v << rng.next(), rng.next(), rng.next();
    if (s.v.norm() < 1e-12) s.v << 1.0, 0.0, 0.0;
    cloud.push_back(laminate_update(s, v, p));
  }
  return cloud;
}

}  // namespace fomo2d
