#pragma once

#include "fomo2d/laminate.hpp"
#include "fomo2d/setgeom.hpp"
#include "fomo2d/sgp.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fomo2d {

using ordered_json = nlohmann::ordered_json;

enum class ModelKind { Zo, Voigt, HsFomo, LaminateAm };

std::string to_string(ModelKind m);
ModelKind model_from_string(const std::string& s);

struct SetsConfig {
  int strains = 750;
  int stresses = 5000;
  double v = 0.5;
  std::vector<double> v_samples{0.0, 0.25, 0.5, 0.75, 1.0};
};

struct RunConfig {
  std::string problem = "cantilever";  // cantilever | multiload | custom
  int nx = 30, ny = 30;
  double width = 1.0, height = 1.0;
  double young = 1.0, poisson = 0.3, contrast = 1e-2;
  double volume_fraction = 0.2;
  ModelKind model = ModelKind::HsFomo;
  SgpConfig sgp;
  AmConfig am;
  SetsConfig sets;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  // custom problems only
  std::vector<int> custom_fixed_dofs;
  std::vector<std::vector<PointLoad>> custom_loadcases;

  PhasePair phases() const;
};

// parses and validates; throws std::runtime_error listing every violation
RunConfig parse_config(const std::filesystem::path& path);
RunConfig config_from_json(const ordered_json& j);
ordered_json config_to_json(const RunConfig& cfg);

// preset geometry/loadcases; custom uses the config's own lists
Mesh problem_mesh(const RunConfig& cfg);
std::vector<LoadCase> problem_loadcases(const RunConfig& cfg, const Mesh& mesh);

struct ResultBundle {
  RunConfig config;
  std::vector<double> compliance;
  double lambda = 0.0;       // reported units (trace units for the ZO model)
  double merit = 0.0;
  double mean_vplus = 0.0;
  int iterations = 0;
  bool converged = true;
  DesignField design;
  std::vector<SgpLogRecord> log;

  double compliance_total() const {
    double c = 0.0;
    for (double x : compliance) c += x;
    return c;
  }
};

ordered_json bundle_to_json(const ResultBundle& b);
ResultBundle bundle_from_json(const ordered_json& j);
ResultBundle load_bundle(const std::filesystem::path& path);

// dispatches to the configured solver and persists bundle.json, fields.csv
// and convergence.csv under config.output_dir; returns the bundle
ResultBundle run(const RunConfig& cfg);

// directional strain energy for unit-norm uniaxial strains over [0, 2 pi)
void export_rosettes(const ResultBundle& bundle, int n_angles,
                     const std::filesystem::path& out_csv);

// one row per bundle: discretization, contrast, model, compliance, lambda
void export_table(const std::vector<ResultBundle>& bundles,
                  const std::filesystem::path& out_csv);

// admissible-set geometry exports (figure data) under config.output_dir
void export_set_samples(const RunConfig& cfg);

}  // namespace fomo2d
