#include "fomo2d/sgp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fomo2d {

namespace {

bool trace_enabled() {
  static const bool on = std::getenv("FOMO2D_TRACE") != nullptr;
  return on;
}

// index list {0, stride, 2 stride, ...} U {n-1}
std::vector<int> strided_axis(int n, int stride) {
  std::vector<int> idx;
  for (int i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

// arithmetic progression anchored on the center index
std::vector<int> window_axis(int n, int center, int halfwidth, int stride) {
  std::vector<int> idx;
  const int lo = std::max(0, center - halfwidth);
  const int hi = std::min(n - 1, center + halfwidth);
  const int start = center - ((center - lo) / stride) * stride;
  for (int i = start; i <= hi; i += stride) idx.push_back(i);
  return idx;
}

struct Best {
  double obj = std::numeric_limits<double>::infinity();
  double model = 0.0;
  double vbar = 0.0;
  std::array<int, 5> index{};
};

// the K best candidates from mutually distinct basins: offers landing within
// the level-2 window radius of a kept candidate replace it instead of
// occupying another slot
struct TopK {
  static constexpr int kK = 10;
  static constexpr int kRadius = 2;
  int n_angle = 0;
  std::array<Best, kK> items{};

  bool near(const Best& a, const Best& b) const {
    for (int k = 0; k < 4; ++k) {
      if (std::abs(a.index[static_cast<size_t>(k)] - b.index[static_cast<size_t>(k)]) >
          kRadius) {
        return false;
      }
    }
    const int da = std::abs(a.index[4] - b.index[4]);
    return std::min(da, n_angle - da) <= kRadius;
  }

  void insert_sorted(const Best& b, int pos) {
    while (pos > 0 && items[static_cast<size_t>(pos - 1)].obj > b.obj) {
      items[static_cast<size_t>(pos)] = items[static_cast<size_t>(pos - 1)];
      --pos;
    }
    items[static_cast<size_t>(pos)] = b;
  }

  void offer(const Best& b) {
    for (int k = 0; k < kK; ++k) {
      if (std::isfinite(items[static_cast<size_t>(k)].obj) &&
          near(items[static_cast<size_t>(k)], b)) {
        if (b.obj < items[static_cast<size_t>(k)].obj) {
          // promote within the same basin
          for (int j = k; j + 1 < kK; ++j) {
            items[static_cast<size_t>(j)] = items[static_cast<size_t>(j + 1)];
          }
          items[kK - 1] = Best{};
          insert_sorted(b, kK - 1);
        }
        return;
      }
    }
    if (b.obj < items[kK - 1].obj) insert_sorted(b, kK - 1);
  }
};

// scan the tuple set (i11 x i22 x i33 x i12 x angles), tracking the best and
// optionally the K best / the evaluated (model, vbar) cloud. Each angle-local
// minimum is offered as a candidate: the angle profile is a degree-4
// trigonometric polynomial and can carry two separated minima.
template <bool kTrack>
void scan(const ElementModel& em, double lambda_w, const GridTables& g,
          const std::vector<int>& s11, const std::vector<int>& s22, const std::vector<int>& s33,
          const std::vector<int>& s12, const std::vector<int>& sangle, Best& best, TopK* top,
          CloudBins* cloud) {
  const std::array<Eigen::Matrix3d, 5>& H = em.H;
  const int na = static_cast<int>(sangle.size());
  thread_local std::vector<double> vals, c2w, s2w, c4w, s4w;
  vals.resize(static_cast<std::size_t>(na));
  c2w.resize(static_cast<std::size_t>(na));
  s2w.resize(static_cast<std::size_t>(na));
  c4w.resize(static_cast<std::size_t>(na));
  s4w.resize(static_cast<std::size_t>(na));
  for (int k = 0; k < na; ++k) {
    const std::size_t a = static_cast<std::size_t>(sangle[static_cast<std::size_t>(k)]);
    c2w[static_cast<std::size_t>(k)] = g.cos2[a];
    s2w[static_cast<std::size_t>(k)] = g.sin2[a];
    c4w[static_cast<std::size_t>(k)] = g.cos4[a];
    s4w[static_cast<std::size_t>(k)] = g.sin4[a];
  }
  for (int i11 : s11) {
    for (int i22 : s22) {
      const int pair = g.pair_index[static_cast<std::size_t>(i11) * g.n_diag + i22];
      if (pair < 0) continue;
      for (int i33 : s33) {
        for (int i12 : s12) {
          if (i12 >= g.n_offdiag) continue;
          const std::size_t id = g.point_id(pair, i33, i12);
          const double q11 = g.inv11[id], q22 = g.inv22[id];
          const double q12 = g.inv12[id], q33 = g.inv33[id];
          double d[5];
          for (int h = 0; h < 5; ++h) {
            const Eigen::Matrix3d& A = H[static_cast<std::size_t>(h)];
            d[h] = A(0, 0) * q11 + A(1, 1) * q22 + 2.0 * A(0, 1) * q12 + A(2, 2) * q33;
          }
          const double price = lambda_w * g.vbar[id];
          for (int k = 0; k < na; ++k) {
            vals[static_cast<std::size_t>(k)] =
                d[0] + d[1] * c2w[static_cast<std::size_t>(k)] +
                d[2] * s2w[static_cast<std::size_t>(k)] +
                d[3] * c4w[static_cast<std::size_t>(k)] +
                d[4] * s4w[static_cast<std::size_t>(k)];
          }
          double gbest = std::numeric_limits<double>::infinity();
          int abest = -1;
          for (int k = 0; k < na; ++k) {
            if (vals[static_cast<std::size_t>(k)] < gbest) {
              gbest = vals[static_cast<std::size_t>(k)];
              abest = sangle[static_cast<std::size_t>(k)];
            }
          }
          const double obj = gbest + price;
          if (obj < best.obj) {
            best = {obj, gbest, g.vbar[id], {i11, i22, i33, i12, abest}};
          }
          if constexpr (kTrack) {
            if (top) {
              for (int k = 0; k < na; ++k) {
                const double v = vals[static_cast<std::size_t>(k)];
                const bool left_ok = (k == 0) || vals[static_cast<std::size_t>(k - 1)] >= v;
                const bool right_ok =
                    (k == na - 1) || vals[static_cast<std::size_t>(k + 1)] >= v;
                if (left_ok && right_ok) {
                  top->offer({v + price, v, g.vbar[id],
                              {i11, i22, i33, i12, sangle[static_cast<std::size_t>(k)]}});
                }
              }
            }
            if (cloud) cloud->offer(gbest, g.vbar[id]);
          }
        }
      }
    }
  }
}

// dominated pairs removed: keep the lower-left staircase of (model, vbar)
void pareto_prune(std::vector<std::pair<double, double>>& cloud) {
  if (cloud.empty()) return;
  std::sort(cloud.begin(), cloud.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  });
  std::vector<std::pair<double, double>> kept;
  double gmin = std::numeric_limits<double>::infinity();
  for (const auto& c : cloud) {
    if (c.first < gmin) {
      kept.push_back(c);
      gmin = c.first;
    }
  }
  cloud.swap(kept);
}

std::pair<double, double> cloud_argmin(const std::vector<std::pair<double, double>>& cloud,
                                       double lambda_w) {
  double best = std::numeric_limits<double>::infinity();
  double vb = 0.0, mp = 0.0;
  for (const auto& c : cloud) {
    const double obj = c.first + lambda_w * c.second;
    if (obj < best) {
      best = obj;
      mp = c.first;
      vb = c.second;
    }
  }
  return {mp, vb};
}

}  // namespace

ElementModel make_element_model(const std::vector<Eigen::Matrix3d>& G_list,
                                const Eigen::Matrix3d& ebar_km, const PhasePair& p) {
  ElementModel em;
  Eigen::Matrix3d ebar = ebar_km;
  // expansion-point safeguard against (numerically) singular tensors
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(ebar, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-9 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    ebar = iso_tensor(p.weak).m + 1e-6 * (iso_tensor(p.strong).m - iso_tensor(p.weak).m);
  }
  for (const auto& G : G_list) em.S += ebar * (-G) * ebar;

  // reconstruct the five harmonics from samples at phi = k pi/8, k = 0..4
  std::array<Eigen::Matrix3d, 5> A;
  for (int k = 0; k < 5; ++k) {
    const double phi = k * std::numbers::pi / 8.0;
    const Eigen::Matrix3d r = mandel_rotation(phi);
    A[static_cast<std::size_t>(k)] = r.transpose() * em.S * r;
  }
  const double s = std::numbers::sqrt2;
  const Eigen::Matrix3d H0 =
      (A[1] + A[3] - s * A[2] - 0.5 * s * (A[0] + A[4])) / (2.0 * (1.0 - s));
  em.H[0] = H0;
  em.H[1] = 0.5 * (A[0] - A[4]);
  em.H[3] = 0.5 * (A[0] + A[4]) - H0;
  em.H[2] = A[2] - H0 + em.H[3];
  em.H[4] = 0.5 * (A[1] - A[3] - s * em.H[1]);
  return em;
}

LocalSubproblemResult local_subproblem(const ElementModel& model, double lambda_w,
                                       const GridTables& g, CloudBins* cloud_out) {
  Best best;
  const auto diag0 = strided_axis(g.n_diag, 8);
  const auto off0 = strided_axis(g.n_offdiag, 8);
  const auto ang0 = strided_axis(g.n_angle, 8);
  scan<false>(model, lambda_w, g, diag0, diag0, diag0, off0, ang0, best, nullptr, nullptr);

  TopK top;
  top.n_angle = g.n_angle;
  Best best1 = best;
  {
    const auto w11 = window_axis(g.n_diag, best.index[0], 16, 2);
    const auto w22 = window_axis(g.n_diag, best.index[1], 16, 2);
    const auto w33 = window_axis(g.n_diag, best.index[2], 16, 2);
    const auto w12 = window_axis(g.n_offdiag, best.index[3], 16, 2);
    const auto wan = window_axis(g.n_angle, best.index[4], 16, 2);
    scan<true>(model, lambda_w, g, w11, w22, w33, w12, wan, best1, &top, nullptr);
  }

  Best final = best1;
  for (const auto& survivor : top.items) {
    if (!std::isfinite(survivor.obj)) continue;
    const auto w11 = window_axis(g.n_diag, survivor.index[0], 4, 1);
    const auto w22 = window_axis(g.n_diag, survivor.index[1], 4, 1);
    const auto w33 = window_axis(g.n_diag, survivor.index[2], 4, 1);
    const auto w12 = window_axis(g.n_offdiag, survivor.index[3], 4, 1);
    const auto wan = window_axis(g.n_angle, survivor.index[4], 4, 1);
    scan<true>(model, lambda_w, g, w11, w22, w33, w12, wan, final, nullptr, cloud_out);
  }
  if (!std::isfinite(final.obj)) {
    throw std::runtime_error("local_subproblem: no feasible grid point reached");
  }

  LocalSubproblemResult out;
  out.tensor = g.tensor_at(final.index[0], final.index[1], final.index[2], final.index[3],
                           final.index[4]);
  out.vbar = final.vbar;
  out.model_value = final.obj;
  out.model_part = final.model;
  out.index = final.index;
  if (cloud_out) cloud_out->offer(final.model, final.vbar);
  return out;
}

LocalSubproblemResult local_subproblem(const std::vector<Eigen::Matrix3d>& G_list,
                                       const Eigen::Matrix3d& ebar_km, double lambda, int nel,
                                       const GridTables& tables, const SgpConfig&,
                                       const PhasePair& p) {
  return local_subproblem(make_element_model(G_list, ebar_km, p), lambda / nel, tables);
}

DualResult dual_bisection(const std::vector<ElementModel>& models,
                          std::pair<double, double> bracket, double vbar_target,
                          const GridTables& g, const SgpConfig& cfg, double lambda_hint) {
  const int nel = static_cast<int>(models.size());
  if (nel == 0) throw std::invalid_argument("dual_bisection: no elements");

  // coarse candidate clouds, refreshed with full searches below
  std::vector<std::vector<std::pair<double, double>>> clouds(static_cast<std::size_t>(nel));
  {
    const auto diag0 = strided_axis(g.n_diag, 8);
    const auto off0 = strided_axis(g.n_offdiag, 8);
    const auto ang0 = strided_axis(g.n_angle, 8);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int e = 0; e < nel; ++e) {
      Best dummy;
      CloudBins bins;
      scan<true>(models[static_cast<std::size_t>(e)], 0.0, g, diag0, diag0, diag0, off0, ang0,
                 dummy, nullptr, &bins);
      auto& cl = clouds[static_cast<std::size_t>(e)];
      for (int b = 0; b < CloudBins::kBins; ++b) {
        if (std::isfinite(bins.model[static_cast<std::size_t>(b)])) {
          cl.emplace_back(bins.model[static_cast<std::size_t>(b)],
                          bins.vbar[static_cast<std::size_t>(b)]);
        }
      }
      pareto_prune(cl);
    }
  }

  const auto cloud_volume = [&](double lambda) {
    double acc = 0.0;
    for (int e = 0; e < nel; ++e) {
      acc += cloud_argmin(clouds[static_cast<std::size_t>(e)], lambda / nel).second;
    }
    return acc / nel;
  };

  double lo = bracket.first, hi = bracket.second;
  if (cloud_volume(lo) < vbar_target - cfg.volume_tol) {
    lo = 0.0;  // warm bracket overshot: volume at lambda = 0 is maximal
  }

  DualResult result;
  std::vector<LocalSubproblemResult> full(static_cast<std::size_t>(nel));
  double best_gap = std::numeric_limits<double>::infinity();
  DualResult best_result;

  for (int round = 0; round < 8; ++round) {
    // the refreshed clouds may reveal that the cap is still too small
    int expansions = 0;
    while (cloud_volume(hi) > vbar_target + cfg.volume_tol) {
      hi = (hi > 0.0) ? hi * 10.0 : 1.0;
      if (++expansions > 6) {
        throw std::runtime_error("dual_bisection: bracket expansion failed");
      }
    }

    double lambda;
    if (round == 0 && lambda_hint >= lo && lambda_hint <= hi) {
      lambda = lambda_hint;  // previous iterate's multiplier
    } else if (cloud_volume(lo) <= vbar_target) {
      lambda = lo;  // budget already met at the bracket floor
    } else {
      double a = lo, b = hi;
      for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, b); ++it) {
        const double mid = 0.5 * (a + b);
        (cloud_volume(mid) >= vbar_target ? a : b) = mid;
      }
      lambda = (std::abs(cloud_volume(a) - vbar_target) <=
                std::abs(cloud_volume(b) - vbar_target))
                   ? a
                   : b;
    }

    // full hierarchical searches at the trial multiplier
    std::vector<CloudBins> extra(static_cast<std::size_t>(nel));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int e = 0; e < nel; ++e) {
      full[static_cast<std::size_t>(e)] = local_subproblem(
          models[static_cast<std::size_t>(e)], lambda / nel, g, &extra[static_cast<std::size_t>(e)]);
    }
    double mean_vbar = 0.0;
    for (int e = 0; e < nel; ++e) mean_vbar += full[static_cast<std::size_t>(e)].vbar;
    mean_vbar /= nel;

    result.lambda = lambda;
    result.mean_vbar = mean_vbar;
    result.design.tensors.clear();
    result.design.vplus.clear();
    result.model_part.clear();
    for (int e = 0; e < nel; ++e) {
      result.design.tensors.push_back(full[static_cast<std::size_t>(e)].tensor);
      result.design.vplus.push_back(full[static_cast<std::size_t>(e)].vbar);
      result.model_part.push_back(full[static_cast<std::size_t>(e)].model_part);
    }
    const double gap = std::abs(mean_vbar - vbar_target);
    const bool improved = gap < best_gap * (1.0 - 1e-9);
    if (gap < best_gap) {
      best_gap = gap;
      best_result = result;
    }
    if (trace_enabled()) {
      std::fprintf(stderr, "[dual] round=%d lambda=%.5f gap=%.3e\n", round, lambda,
                   mean_vbar - vbar_target);
    }
    if (gap <= cfg.volume_tol) return result;
    // further rounds cannot help once the full-search volume stops moving
    if (round > 0 && !improved) break;

    // clouds learn the finest-level candidates near the active multiplier
    for (int e = 0; e < nel; ++e) {
      auto& cl = clouds[static_cast<std::size_t>(e)];
      const auto& bins = extra[static_cast<std::size_t>(e)];
      for (int b = 0; b < CloudBins::kBins; ++b) {
        if (std::isfinite(bins.model[static_cast<std::size_t>(b)])) {
          cl.emplace_back(bins.model[static_cast<std::size_t>(b)],
                          bins.vbar[static_cast<std::size_t>(b)]);
        }
      }
      pareto_prune(cl);
    }
  }
  return best_result;
}

namespace {

DesignField initial_design(const GridTables& g, int nel) {
  // strong corner of the grid
  OrthoTensor strong;
  strong.e1111 = g.a11.back();
  strong.e2222 = g.a22.back();
  strong.e1122 = g.phases.strong.kappa - g.phases.strong.mu;
  strong.e1212 = 0.5 * g.a33.back();
  strong.phi = 0.0;
  DesignField d;
  d.tensors.assign(static_cast<std::size_t>(nel), strong);
  d.vplus.assign(static_cast<std::size_t>(nel), 1.0);
  return d;
}

}  // namespace

SgpResult sgp_solve(FemProblem& fem, const PhasePair& p, double vbar_target,
                    VolumeEstimatorKind kind, const SgpConfig& cfg,
                    const GridTables* prebuilt) {
  cfg.validate();
  GridTables local_tables;
  const GridTables* tables = prebuilt;
  if (!tables) {
    local_tables = build_grid(p, cfg, kind);
    tables = &local_tables;
  }
  const int nel = fem.mesh().elem_count();
  const int nlc = fem.loadcase_count();

  SgpResult res;
  DesignField design = initial_design(*tables, nel);
  double lambda = 0.0;
  double prev_merit = std::numeric_limits<double>::infinity();
  double best_merit = std::numeric_limits<double>::infinity();
  SgpIterate best_iterate;
  int stall = 0;

  std::pair<double, double> bracket{cfg.lambda_lo,
                                    cfg.lambda_hi > 0.0
                                        ? cfg.lambda_hi
                                        : 10.0 * iso_tensor(p.strong).trace()};

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto km = FemProblem::to_km(design);
    const StateSolution state = fem.solve(km);
    const double c_total = state.total_compliance();
    double mean_vbar = 0.0;
    for (double v : design.vplus) mean_vbar += v;
    mean_vbar /= nel;
    const double merit = c_total + lambda * (mean_vbar - vbar_target);

    res.log.push_back({it, c_total, lambda, mean_vbar - vbar_target, merit});
    res.final.design = design;
    res.final.compliance = state.compliance;
    res.final.lambda = lambda;
    res.final.merit = merit;
    res.final.iteration = it;
    res.final.mean_vbar = mean_vbar;
    if (it > 1 && merit < best_merit) {
      best_merit = merit;
      best_iterate = res.final;
    }
    if (trace_enabled()) {
      std::fprintf(stderr, "[sgp] it=%d c=%.6f lambda=%.4f vol_resid=%.2e merit=%.6f\n", it,
                   c_total, lambda, mean_vbar - vbar_target, merit);
    }

    if (it > 1) {
      const double rel = std::abs(merit - prev_merit) / std::max(1e-300, std::abs(merit));
      if (rel < cfg.merit_rel_tol) {
        res.converged = true;
        break;
      }
      if (merit > prev_merit - cfg.merit_rel_tol * std::abs(merit)) {
        if (++stall >= cfg.stall_iters) {
          res.converged = true;
          break;
        }
      } else {
        stall = 0;
      }
    }
    prev_merit = merit;
    if (it == cfg.max_iters) break;  // best iterate returned with warning flag

    std::vector<ElementModel> models(static_cast<std::size_t>(nel));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int e = 0; e < nel; ++e) {
      std::vector<Eigen::Matrix3d> G;
      G.reserve(static_cast<std::size_t>(nlc));
      for (int j = 0; j < nlc; ++j) G.push_back(fem.compliance_sensitivity(state, e, j));
      models[static_cast<std::size_t>(e)] =
          make_element_model(G, km[static_cast<std::size_t>(e)], p);
    }

    DualResult dual =
        dual_bisection(models, bracket, vbar_target, *tables, cfg, it > 1 ? lambda : -1.0);
    lambda = dual.lambda;
    design = std::move(dual.design);
    bracket = {lambda / 4.0, std::max(lambda * 4.0, 1e-6)};
  }
  if (!res.converged && best_merit < std::numeric_limits<double>::infinity()) {
    res.final = best_iterate;
  }
  return res;
}

SgpResult solve_voigt_reduced(FemProblem& fem, const PhasePair& p, double vbar_target,
                              const SgpConfig& cfg) {
  cfg.validate();
  const int nel = fem.mesh().elem_count();
  const int nlc = fem.loadcase_count();
  const Eigen::Matrix3d elo = iso_tensor(p.weak).m;
  const Eigen::Matrix3d ehi = iso_tensor(p.strong).m;

  const auto km_of = [&](const std::vector<double>& v) {
    std::vector<Eigen::Matrix3d> km(static_cast<std::size_t>(nel));
    for (int e = 0; e < nel; ++e) {
      km[static_cast<std::size_t>(e)] =
          elo + v[static_cast<std::size_t>(e)] * (ehi - elo);
    }
    return km;
  };

  // <S, E(v)^-1> = sJ / (4 kappa(v)) + sK / (4 mu(v)) for the isotropic ray
  struct Ray {
    double sj = 0.0, sk = 0.0;
  };
  const auto subproblem = [&](const Ray& r, double price) {
    const auto dg = [&](double v) {
      const double kv = p.weak.kappa + v * p.dkappa();
      const double mv = p.weak.mu + v * p.dmu();
      return -r.sj * p.dkappa() / (4.0 * kv * kv) - r.sk * p.dmu() / (4.0 * mv * mv) + price;
    };
    if (dg(0.0) >= 0.0) return 0.0;
    if (dg(1.0) <= 0.0) return 1.0;
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 100 && b - a > 1e-14; ++i) {
      const double mid = 0.5 * (a + b);
      (dg(mid) <= 0.0 ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };

  std::vector<double> v(static_cast<std::size_t>(nel), std::clamp(vbar_target, 1e-6, 1.0));
  SgpResult res;
  double lambda = 0.0;
  double prev_merit = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto km = km_of(v);
    const StateSolution state = fem.solve(km);
    const double c_total = state.total_compliance();
    double mean_v = 0.0;
    for (double x : v) mean_v += x;
    mean_v /= nel;
    const double merit = c_total + lambda * (mean_v - vbar_target);

    res.log.push_back({it, c_total, lambda, mean_v - vbar_target, merit});
    res.final.design.tensors.clear();
    res.final.design.vplus = v;
    for (int e = 0; e < nel; ++e) {
      OrthoTensor t;
      const double kv = p.weak.kappa + v[static_cast<std::size_t>(e)] * p.dkappa();
      const double mv = p.weak.mu + v[static_cast<std::size_t>(e)] * p.dmu();
      t.e1111 = kv + mv;
      t.e1122 = kv - mv;
      t.e2222 = kv + mv;
      t.e1212 = mv;
      t.phi = 0.0;
      res.final.design.tensors.push_back(t);
    }
    res.final.compliance = state.compliance;
    res.final.lambda = lambda;
    res.final.merit = merit;
    res.final.iteration = it;
    res.final.mean_vbar = mean_v;

    if (it > 1) {
      const double rel = std::abs(merit - prev_merit) / std::max(1e-300, std::abs(merit));
      if (rel < cfg.merit_rel_tol) {
        res.converged = true;
        break;
      }
      if (merit > prev_merit - cfg.merit_rel_tol * std::abs(merit)) {
        if (++stall >= cfg.stall_iters) {
          res.converged = true;
          break;
        }
      } else {
        stall = 0;
      }
    }
    prev_merit = merit;
    if (it == cfg.max_iters) break;

    std::vector<Ray> rays(static_cast<std::size_t>(nel));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int e = 0; e < nel; ++e) {
      Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
      for (int j = 0; j < nlc; ++j) {
        const Eigen::Matrix3d G = fem.compliance_sensitivity(state, e, j);
        S += km[static_cast<std::size_t>(e)] * (-G) * km[static_cast<std::size_t>(e)];
      }
      rays[static_cast<std::size_t>(e)].sj = S(0, 0) + S(1, 1) + 2.0 * S(0, 1);
      rays[static_cast<std::size_t>(e)].sk = S(0, 0) + S(1, 1) - 2.0 * S(0, 1) + 2.0 * S(2, 2);
    }

    const auto volume_at = [&](double lam) {
      double acc = 0.0;
      for (int e = 0; e < nel; ++e) acc += subproblem(rays[static_cast<std::size_t>(e)], lam / nel);
      return acc / nel;
    };
    double lo = 0.0, hi = std::max(lambda * 4.0, 10.0 * iso_tensor(p.strong).trace());
    int expansions = 0;
    while (volume_at(hi) > vbar_target + cfg.volume_tol) {
      hi *= 10.0;
      if (++expansions > 6) throw std::runtime_error("solve_voigt_reduced: bracket failure");
    }
    if (volume_at(lo) >= vbar_target) {
      for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (volume_at(mid) >= vbar_target ? lo : hi) = mid;
      }
      lambda = 0.5 * (lo + hi);
    } else {
      lambda = 0.0;  // constraint inactive
    }
    for (int e = 0; e < nel; ++e) {
      v[static_cast<std::size_t>(e)] = subproblem(rays[static_cast<std::size_t>(e)], lambda / nel);
    }
  }
  return res;
}

}  // namespace fomo2d
