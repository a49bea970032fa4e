#include "fomo2d/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fomo2d {

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Zo: return "zo";
    case ModelKind::Voigt: return "voigt";
    case ModelKind::HsFomo: return "hs-fomo";
    case ModelKind::LaminateAm: return "laminate-am";
  }
  return "?";
}

ModelKind model_from_string(const std::string& s) {
  if (s == "zo") return ModelKind::Zo;
  if (s == "voigt") return ModelKind::Voigt;
  if (s == "hs-fomo") return ModelKind::HsFomo;
  if (s == "laminate-am") return ModelKind::LaminateAm;
  throw std::runtime_error("unknown model '" + s + "'");
}

PhasePair RunConfig::phases() const {
  const IsoModuli strong = plane_stress_moduli(young, poisson);
  const IsoModuli weak = plane_stress_moduli(young * contrast, poisson);
  return PhasePair::make(weak, strong);
}

namespace {

template <class T>
void read_if(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_preset(RunConfig& cfg) {
  if (cfg.problem == "cantilever") {
    cfg.nx = 30;
    cfg.ny = 30;
    cfg.width = 1.0;
    cfg.height = 1.0;
  } else if (cfg.problem == "multiload") {
    cfg.nx = 40;
    cfg.ny = 20;
    cfg.width = 2.0;
    cfg.height = 1.0;
  }
}

}  // namespace

RunConfig config_from_json(const ordered_json& j) {
  RunConfig cfg;
  read_if(j, "problem", cfg.problem);
  apply_preset(cfg);
  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    read_if(m, "nx", cfg.nx);
    read_if(m, "ny", cfg.ny);
    read_if(m, "width", cfg.width);
    read_if(m, "height", cfg.height);
  }
  if (j.contains("material")) {
    const auto& m = j.at("material");
    read_if(m, "young", cfg.young);
    read_if(m, "poisson", cfg.poisson);
    read_if(m, "contrast", cfg.contrast);
  }
  read_if(j, "volume_fraction", cfg.volume_fraction);
  if (j.contains("model")) cfg.model = model_from_string(j.at("model").get<std::string>());
  if (j.contains("sgp")) {
    const auto& s = j.at("sgp");
    read_if(s, "angle_samples", cfg.sgp.angle_samples);
    read_if(s, "diag_grid", cfg.sgp.diag_grid);
    read_if(s, "offdiag_grid", cfg.sgp.offdiag_grid);
    read_if(s, "merit_rel_tol", cfg.sgp.merit_rel_tol);
    read_if(s, "stall_iters", cfg.sgp.stall_iters);
    read_if(s, "lambda_lo", cfg.sgp.lambda_lo);
    read_if(s, "lambda_hi", cfg.sgp.lambda_hi);
    read_if(s, "volume_tol", cfg.sgp.volume_tol);
    read_if(s, "max_iters", cfg.sgp.max_iters);
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    read_if(s, "coarse_samples", cfg.sgp.search.coarse_samples);
    read_if(s, "golden_tol", cfg.sgp.search.golden_tol);
    read_if(s, "brackets_max", cfg.sgp.search.brackets_max);
  }
  if (j.contains("am")) {
    const auto& a = j.at("am");
    read_if(a, "density_change_tol", cfg.am.density_change_tol);
    read_if(a, "compliance_rel_tol", cfg.am.compliance_rel_tol);
    read_if(a, "max_iters", cfg.am.max_iters);
    read_if(a, "volume_bisect_tol", cfg.am.volume_bisect_tol);
  }
  if (j.contains("sets")) {
    const auto& s = j.at("sets");
    read_if(s, "strains", cfg.sets.strains);
    read_if(s, "stresses", cfg.sets.stresses);
    read_if(s, "v", cfg.sets.v);
    read_if(s, "v_samples", cfg.sets.v_samples);
  }
  read_if(j, "output_dir", cfg.output_dir);
  read_if(j, "seed", cfg.seed);
  if (j.contains("custom")) {
    const auto& c = j.at("custom");
    read_if(c, "fixed_dofs", cfg.custom_fixed_dofs);
    if (c.contains("loadcases")) {
      for (const auto& lc : c.at("loadcases")) {
        std::vector<PointLoad> loads;
        for (const auto& pl : lc.at("loads")) {
          loads.push_back({pl.at("node").get<int>(), pl.at("dir").get<int>(),
                           pl.at("magnitude").get<double>()});
        }
        cfg.custom_loadcases.push_back(std::move(loads));
      }
    }
  }

  std::vector<std::string> violations;
  if (cfg.problem != "cantilever" && cfg.problem != "multiload" && cfg.problem != "custom") {
    violations.push_back("problem must be cantilever, multiload or custom");
  }
  if (cfg.nx < 1 || cfg.ny < 1) violations.push_back("mesh.nx and mesh.ny must be >= 1");
  if (cfg.width <= 0.0 || cfg.height <= 0.0) {
    violations.push_back("mesh.width and mesh.height must be positive");
  }
  if (!(cfg.contrast > 0.0 && cfg.contrast < 1.0)) {
    violations.push_back("material.contrast must lie in (0, 1)");
  }
  if (!(cfg.volume_fraction >= 0.0 && cfg.volume_fraction <= 1.0)) {
    violations.push_back("volume_fraction must lie in [0, 1]");
  }
  if (cfg.young <= 0.0 || cfg.poisson <= -1.0 || cfg.poisson >= 1.0) {
    violations.push_back("material.young must be > 0 and material.poisson in (-1, 1)");
  }
  const bool multi_case =
      cfg.problem == "multiload" ||
      (cfg.problem == "custom" && cfg.custom_loadcases.size() > 1);
  if (cfg.model == ModelKind::LaminateAm && multi_case) {
    violations.push_back("model laminate-am requires a single loadcase");
  }
  if (cfg.problem == "custom" &&
      (cfg.custom_fixed_dofs.empty() || cfg.custom_loadcases.empty())) {
    violations.push_back("custom problems need custom.fixed_dofs and custom.loadcases");
  }
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::runtime_error(msg);
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  ordered_json j;
  in >> j;
  return config_from_json(j);
}

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["problem"] = cfg.problem;
  j["mesh"] = {{"nx", cfg.nx}, {"ny", cfg.ny}, {"width", cfg.width}, {"height", cfg.height}};
  j["material"] = {{"young", cfg.young}, {"poisson", cfg.poisson}, {"contrast", cfg.contrast}};
  j["volume_fraction"] = cfg.volume_fraction;
  j["model"] = to_string(cfg.model);
  j["sgp"] = {{"angle_samples", cfg.sgp.angle_samples},
              {"diag_grid", cfg.sgp.diag_grid},
              {"offdiag_grid", cfg.sgp.offdiag_grid},
              {"merit_rel_tol", cfg.sgp.merit_rel_tol},
              {"stall_iters", cfg.sgp.stall_iters},
              {"lambda_lo", cfg.sgp.lambda_lo},
              {"lambda_hi", cfg.sgp.lambda_hi},
              {"volume_tol", cfg.sgp.volume_tol},
              {"max_iters", cfg.sgp.max_iters}};
  j["search"] = {{"coarse_samples", cfg.sgp.search.coarse_samples},
                 {"golden_tol", cfg.sgp.search.golden_tol},
                 {"brackets_max", cfg.sgp.search.brackets_max}};
  j["am"] = {{"density_change_tol", cfg.am.density_change_tol},
             {"compliance_rel_tol", cfg.am.compliance_rel_tol},
             {"max_iters", cfg.am.max_iters},
             {"volume_bisect_tol", cfg.am.volume_bisect_tol}};
  j["sets"] = {{"strains", cfg.sets.strains},
               {"stresses", cfg.sets.stresses},
               {"v", cfg.sets.v},
               {"v_samples", cfg.sets.v_samples}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  if (cfg.problem == "custom") {
    ordered_json cases = ordered_json::array();
    for (const auto& lc : cfg.custom_loadcases) {
      ordered_json loads = ordered_json::array();
      for (const auto& pl : lc) {
        loads.push_back({{"node", pl.node}, {"dir", pl.dir}, {"magnitude", pl.magnitude}});
      }
      cases.push_back({{"loads", loads}});
    }
    j["custom"] = {{"fixed_dofs", cfg.custom_fixed_dofs}, {"loadcases", cases}};
  }
  return j;
}

Mesh problem_mesh(const RunConfig& cfg) {
  return build_mesh(cfg.nx, cfg.ny, cfg.width, cfg.height);
}

std::vector<LoadCase> problem_loadcases(const RunConfig& cfg, const Mesh& mesh) {
  std::vector<LoadCase> cases;
  if (cfg.problem == "cantilever") {
    LoadCase lc;
    for (int iy = 0; iy <= 2 * mesh.ny; ++iy) {
      const int n = mesh.node_at(0, iy);
      if (n >= 0) {
        lc.fixed_dofs.push_back(2 * n);
        lc.fixed_dofs.push_back(2 * n + 1);
      }
    }
    const int tip = mesh.node_at(2 * mesh.nx, 0);  // bottom right corner
    lc.loads.push_back({tip, 1, -1.0});
    cases.push_back(std::move(lc));
  } else if (cfg.problem == "multiload") {
    std::vector<int> fixed;
    for (int corner_x : {0, 2 * mesh.nx}) {
      for (int corner_y : {0, 2 * mesh.ny}) {
        const int n = mesh.node_at(corner_x, corner_y);
        fixed.push_back(2 * n);
        fixed.push_back(2 * n + 1);
      }
    }
    LoadCase top;
    top.fixed_dofs = fixed;
    top.loads.push_back({mesh.node_at(mesh.nx, 2 * mesh.ny), 1, -1.0});
    LoadCase bottom;
    bottom.fixed_dofs = fixed;
    bottom.loads.push_back({mesh.node_at(mesh.nx, 0), 1, 1.0});
    cases.push_back(std::move(top));
    cases.push_back(std::move(bottom));
  } else {
    LoadCase base;
    base.fixed_dofs = cfg.custom_fixed_dofs;
    for (const auto& loads : cfg.custom_loadcases) {
      LoadCase lc = base;
      lc.loads = loads;
      cases.push_back(std::move(lc));
    }
  }
  return cases;
}

ordered_json bundle_to_json(const ResultBundle& b) {
  ordered_json j;
  j["config"] = config_to_json(b.config);
  j["compliance"] = b.compliance;
  j["compliance_total"] = b.compliance_total();
  j["lambda"] = b.lambda;
  j["merit"] = b.merit;
  j["mean_vplus"] = b.mean_vplus;
  j["iterations"] = b.iterations;
  j["converged"] = b.converged;
  ordered_json elems = ordered_json::array();
  for (size_t i = 0; i < b.design.tensors.size(); ++i) {
    const auto& t = b.design.tensors[i];
    elems.push_back({{"v", b.design.vplus[i]},
                     {"e1111", t.e1111},
                     {"e1122", t.e1122},
                     {"e2222", t.e2222},
                     {"e1212", t.e1212},
                     {"phi", t.phi}});
  }
  j["elements"] = std::move(elems);
  ordered_json log = ordered_json::array();
  for (const auto& r : b.log) {
    log.push_back({{"iteration", r.iteration},
                   {"compliance", r.compliance},
                   {"lambda", r.lambda},
                   {"volume_residual", r.volume_residual},
                   {"merit", r.merit}});
  }
  j["log"] = std::move(log);
  return j;
}

ResultBundle bundle_from_json(const ordered_json& j) {
  ResultBundle b;
  b.config = config_from_json(j.at("config"));
  b.compliance = j.at("compliance").get<std::vector<double>>();
  b.lambda = j.at("lambda").get<double>();
  b.merit = j.at("merit").get<double>();
  b.mean_vplus = j.at("mean_vplus").get<double>();
  b.iterations = j.at("iterations").get<int>();
  b.converged = j.at("converged").get<bool>();
  for (const auto& e : j.at("elements")) {
    OrthoTensor t;
    t.e1111 = e.at("e1111").get<double>();
    t.e1122 = e.at("e1122").get<double>();
    t.e2222 = e.at("e2222").get<double>();
    t.e1212 = e.at("e1212").get<double>();
    t.phi = e.at("phi").get<double>();
    b.design.tensors.push_back(t);
    b.design.vplus.push_back(e.at("v").get<double>());
  }
  for (const auto& r : j.at("log")) {
    b.log.push_back({r.at("iteration").get<int>(), r.at("compliance").get<double>(),
                     r.at("lambda").get<double>(), r.at("volume_residual").get<double>(),
                     r.at("merit").get<double>()});
  }
  return b;
}

ResultBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bundle " + path.string());
  ordered_json j;
  in >> j;
  return bundle_from_json(j);
}

namespace {

void write_fields_csv(const ResultBundle& b, const Mesh& mesh,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "element,cx,cy,v,e1111,e1122,e2222,e1212,phi\n";
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const int ex = e % mesh.nx, ey = e / mesh.nx;
    const double cx = (ex + 0.5) * mesh.elem_width();
    const double cy = (ey + 0.5) * mesh.elem_height();
    const auto& t = b.design.tensors[static_cast<size_t>(e)];
    out << e << ',' << cx << ',' << cy << ',' << b.design.vplus[static_cast<size_t>(e)]
        << ',' << t.e1111 << ',' << t.e1122 << ',' << t.e2222 << ',' << t.e1212 << ','
        << t.phi << '\n';
  }
}

void write_log_csv(const ResultBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "iteration,compliance,lambda,volume_residual,merit\n";
  for (const auto& r : b.log) {
    out << r.iteration << ',' << r.compliance << ',' << r.lambda << ','
        << r.volume_residual << ',' << r.merit << '\n';
  }
}

}  // namespace

ResultBundle run(const RunConfig& cfg) {
  const Mesh mesh = problem_mesh(cfg);
  FemProblem fem(mesh, problem_loadcases(cfg, mesh));
  const PhasePair phases = cfg.phases();

  ResultBundle b;
  b.config = cfg;
  switch (cfg.model) {
    case ModelKind::Zo:
    case ModelKind::HsFomo: {
      const auto kind = cfg.model == ModelKind::Zo ? VolumeEstimatorKind::ZeroOrder
                                                   : VolumeEstimatorKind::HashinShtrikman;
      const SgpResult r = sgp_solve(fem, phases, cfg.volume_fraction, kind, cfg.sgp);
      b.compliance = r.final.compliance;
      b.lambda = r.final.lambda;
      if (cfg.model == ModelKind::Zo) {
        // report in the units of the trace-budget constraint
        b.lambda /= iso_tensor(phases.strong).trace() - iso_tensor(phases.weak).trace();
      }
      b.merit = r.final.merit;
      b.mean_vplus = r.final.mean_vbar;
      b.iterations = r.final.iteration;
      b.converged = r.converged;
      b.design = r.final.design;
      b.log = r.log;
      break;
    }
    case ModelKind::Voigt: {
      const SgpResult r = solve_voigt_reduced(fem, phases, cfg.volume_fraction, cfg.sgp);
      b.compliance = r.final.compliance;
      b.lambda = r.final.lambda;
      b.merit = r.final.merit;
      b.mean_vplus = r.final.mean_vbar;
      b.iterations = r.final.iteration;
      b.converged = r.converged;
      b.design = r.final.design;
      b.log = r.log;
      break;
    }
    case ModelKind::LaminateAm: {
      const AmResult r = am_solve(fem, phases, cfg.volume_fraction, cfg.am);
      b.compliance = r.compliance;
      b.lambda = r.lambda;
      b.converged = r.converged;
      b.design = r.design;
      double mean = 0.0;
      for (double v : r.design.vplus) mean += v;
      b.mean_vplus = mean / mesh.elem_count();
      b.iterations = static_cast<int>(r.log.size());
      b.merit = b.compliance_total();
      for (const auto& rec : r.log) {
        b.log.push_back({rec.iteration, rec.compliance, rec.lambda, rec.max_density_change,
                         rec.compliance});
      }
      break;
    }
  }

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "bundle.json");
  out << bundle_to_json(b).dump(2) << '\n';
  write_fields_csv(b, mesh, dir / "fields.csv");
  write_log_csv(b, dir / "convergence.csv");
  return b;
}

void export_rosettes(const ResultBundle& bundle, int n_angles,
                     const std::filesystem::path& out_csv) {
  if (n_angles < 1) throw std::invalid_argument("export_rosettes: n_angles must be >= 1");
  std::ofstream out(out_csv);
  out.precision(12);
  out << "element,angle,energy\n";
  for (size_t e = 0; e < bundle.design.tensors.size(); ++e) {
    const Tensor4 E = rotate(bundle.design.tensors[e]);
    for (int k = 0; k < n_angles; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n_angles;
      // uniaxial unit-norm strain rotated by theta
      StrainM eps;
      eps.v = mandel_rotation(theta) * Eigen::Vector3d(1.0, 0.0, 0.0);
      out << e << ',' << theta << ',' << energy(E, eps) << '\n';
    }
  }
}

void export_table(const std::vector<ResultBundle>& bundles,
                  const std::filesystem::path& out_csv) {
  if (bundles.empty()) throw std::invalid_argument("export_table: no bundles");
  std::vector<const ResultBundle*> rows;
  for (const auto& b : bundles) rows.push_back(&b);
  const auto model_order = [](ModelKind m) {
    switch (m) {
      case ModelKind::Zo: return 0;
      case ModelKind::Voigt: return 1;
      case ModelKind::HsFomo: return 2;
      case ModelKind::LaminateAm: return 3;
    }
    return 4;
  };
  std::sort(rows.begin(), rows.end(), [&](const ResultBundle* a, const ResultBundle* c) {
    if (a->config.nx != c->config.nx) return a->config.nx < c->config.nx;
    if (a->config.contrast != c->config.contrast) return a->config.contrast < c->config.contrast;
    return model_order(a->config.model) < model_order(c->config.model);
  });
  std::ofstream out(out_csv);
  out.precision(12);
  out << "discretization,contrast,model,compliance,lambda\n";
  for (const auto* b : rows) {
    out << b->config.nx << 'x' << b->config.ny << ',' << b->config.contrast << ','
        << to_string(b->config.model) << ',' << b->compliance_total() << ',' << b->lambda
        << '\n';
  }
}

void export_set_samples(const RunConfig& cfg) {
  const PhasePair phases = cfg.phases();
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const StrainSample strains = sample_strains(cfg.sets.strains, cfg.seed);
  {
    std::ofstream out(dir / "envelopes.csv");
    out.precision(12);
    out << "v,label,strain,e11,e22,e12m,support\n";
    for (const auto label : {SetLabel::A0, SetLabel::A1, SetLabel::A2}) {
      const EnvelopeSurface surf = envelope(label, cfg.sets.v, strains, phases);
      const char* name = label == SetLabel::A0 ? "A0" : (label == SetLabel::A1 ? "A1" : "A2");
      for (size_t i = 0; i < surf.support.size(); ++i) {
        const auto& e = strains.strains[i].v;
        out << cfg.sets.v << ',' << name << ',' << i << ',' << e(0) << ',' << e(1) << ','
            << e(2) << ',' << surf.support[i] << '\n';
      }
    }
  }
  {
    const ProductSpaceSweep sweep = product_space_sweep(cfg.sets.v_samples, strains, phases);
    std::ofstream out(dir / "product_space.csv");
    out.precision(12);
    out << "v,strain,voigt_support,hs_support\n";
    for (size_t k = 0; k < sweep.v_samples.size(); ++k) {
      for (size_t i = 0; i < strains.strains.size(); ++i) {
        out << sweep.v_samples[k] << ',' << i << ',' << sweep.voigt_layers[k].support[i]
            << ',' << sweep.hs_layers[k].support[i] << '\n';
      }
    }
  }
  {
    const auto cloud = laminate_cloud(cfg.sets.stresses, cfg.sets.v, phases, cfg.seed + 1);
    std::ofstream out(dir / "laminate_cloud.csv");
    out.precision(12);
    out << "index,m11,m12,m13,m22,m23,m33\n";
    for (size_t i = 0; i < cloud.size(); ++i) {
      const auto& m = cloud[i].m;
      out << i << ',' << m(0, 0) << ',' << m(0, 1) << ',' << m(0, 2) << ',' << m(1, 1) << ','
          << m(1, 2) << ',' << m(2, 2) << '\n';
    }

    // non-convexity statistic: how many midpoints of cloud pairs still touch
    // the HS envelope (reported, not asserted)
    int touching = 0;
    const int pairs = static_cast<int>(cloud.size()) / 2;
    int checked = 0;
    for (int i = 0; i + 1 < static_cast<int>(cloud.size()) && checked < std::min(pairs, 200);
         i += 2, ++checked) {
      Tensor4 mid;
      mid.m = 0.5 * (cloud[static_cast<size_t>(i)].m + cloud[static_cast<size_t>(i + 1)].m);
      double worst = -1.0;
      for (const auto& e : strains.strains) {
        const double gap = f_hs(e, cfg.sets.v, phases) - energy(mid, e);
        worst = std::max(worst, -gap);
      }
      if (std::abs(worst) < 1e-6) ++touching;
    }
    ordered_json stats;
    stats["midpoint_pairs_checked"] = checked;
    stats["midpoint_boundary_fraction"] =
        checked > 0 ? static_cast<double>(touching) / checked : 0.0;
    std::ofstream sout(dir / "set_stats.json");
    sout << stats.dump(2) << '\n';
  }
}

}  // namespace fomo2d
