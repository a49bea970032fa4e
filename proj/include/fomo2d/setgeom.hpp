#pragma once

#include "fomo2d/bounds.hpp"

#include <cstdint>
#include <vector>

namespace fomo2d {

// strains on the Mandel sphere of radius sqrt(2)/2, reproducible from a seed
struct StrainSample {
  std::vector<StrainM> strains;
};

StrainSample sample_strains(int n, std::uint64_t seed);

enum class SetLabel { A0, A1, A2 };

// per-strain upper support value of one admissible set at volume fraction v
struct EnvelopeSurface {
  SetLabel label = SetLabel::A0;
  double v = 0.0;
  std::vector<double> support;
};

EnvelopeSurface envelope(SetLabel label, double v, const StrainSample& strains,
                         const PhasePair& p);

// layered (v, E) support data plus the convex-hull verification ingredients
struct ProductSpaceSweep {
  std::vector<double> v_samples;
  std::vector<EnvelopeSurface> voigt_layers;
  std::vector<EnvelopeSurface> hs_layers;
};

ProductSpaceSweep product_space_sweep(const std::vector<double>& v_samples,
                                      const StrainSample& strains, const PhasePair& p);

// bound-attaining laminate tensors for random stresses at fixed v
std::vector<Tensor4> laminate_cloud(int n_stresses, double v, const PhasePair& p,
                                    std::uint64_t seed);

// deterministic standard-normal draws (Box-Muller on a seeded mt19937_64,
// stable across platforms)
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : state_(seed) {}
  double next();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
  double uniform01();
};

}  // namespace fomo2d
