// Command-line front end: solve benchmark/custom problems, sample the
// admissible-set geometry, export rosettes and comparison tables.

#include "fomo2d/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"2D free orthotropic material optimization under energy-bound hierarchies"};
  app.require_subcommand(1);

  std::string config_path;
  auto* solve = app.add_subcommand("solve", "run the configured solver");
  solve->add_option("config", config_path, "JSON configuration file")->required();

  std::string sets_config;
  auto* sample = app.add_subcommand("sample-sets", "export admissible-set geometry data");
  sample->add_option("config", sets_config, "JSON configuration file")->required();

  std::string bundle_path, rosette_out = "rosettes.csv";
  int n_angles = 64;
  auto* ros = app.add_subcommand("export-rosettes", "directional energy rosettes per element");
  ros->add_option("bundle", bundle_path, "bundle.json produced by solve")->required();
  ros->add_option("-n,--angles", n_angles, "angle samples over [0, 2 pi)");
  ros->add_option("-o,--output", rosette_out, "output CSV path");

  std::vector<std::string> bundle_paths;
  std::string table_out = "table.csv";
  auto* table = app.add_subcommand("table", "comparison table from solved bundles");
  table->add_option("bundles", bundle_paths, "bundle.json files")->required();
  table->add_option("-o,--output", table_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const fomo2d::RunConfig cfg = fomo2d::parse_config(config_path);
      const fomo2d::ResultBundle bundle = fomo2d::run(cfg);
      std::cout << "model=" << fomo2d::to_string(cfg.model)
                << " compliance=" << bundle.compliance_total()
                << " lambda=" << bundle.lambda << " iterations=" << bundle.iterations
                << (bundle.converged ? "" : " [not converged]") << '\n';
      return bundle.converged ? 0 : 2;
    }
    if (*sample) {
      fomo2d::export_set_samples(fomo2d::parse_config(sets_config));
      return 0;
    }
    if (*ros) {
      fomo2d::export_rosettes(fomo2d::load_bundle(bundle_path), n_angles, rosette_out);
      return 0;
    }
    if (*table) {
      std::vector<fomo2d::ResultBundle> bundles;
      for (const auto& p : bundle_paths) bundles.push_back(fomo2d::load_bundle(p));
      fomo2d::export_table(bundles, table_out);
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
