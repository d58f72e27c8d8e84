// fieldfit command-line tool.
//
// Subcommands:
//   gen-field   synthesize a displacement field (grid + rigid motion + noise)
//   estimate    fit a rigid deflection to a field file
//   identify    assemble a compliance matrix from an experiment manifest
//   study       run a sweep or Monte Carlo study from a JSON config
//   beam-bench  run the cantilever benchmark end to end
//
// Exit codes: 0 success, 2 validation error, 3 numerical/degeneracy error,
// 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fieldfit/fieldfit.hpp"

namespace {

using namespace fieldfit;

Vec3 parse_vec3(const std::string& text, const std::string& what) {
  Vec3 v;
  double x = 0.0, y = 0.0, z = 0.0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &x, &y, &z, &tail) != 3) {
    throw ValidationError(what + " must be three comma-separated numbers, got '" + text + "'");
  }
  v << x, y, z;
  return v;
}

void emit_json(const Json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    detail::write_text_file(out_path, text);
  }
}

struct GenFieldArgs {
  std::string kind = "cubic";
  double extent = 10.0;
  double step = 1.0;
  std::string normal_axis = "x";
  std::string center = "0,0,0";
  std::string translation = "0,0,0";
  std::string rotation_deg = "0,0,0";
  std::string mode = "exact";
  double sigma = 0.0;
  std::string noise_preset;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_gen_field(const GenFieldArgs& args) {
  GridSpec grid;
  if (args.kind == "cubic") grid.kind = GridKind::Cubic;
  else if (args.kind == "planar") grid.kind = GridKind::Planar;
  else throw ValidationError("grid kind must be cubic or planar");
  grid.extent = args.extent;
  grid.step = args.step;
  if (args.normal_axis == "x") grid.normal_axis = Axis3::X;
  else if (args.normal_axis == "y") grid.normal_axis = Axis3::Y;
  else if (args.normal_axis == "z") grid.normal_axis = Axis3::Z;
  else throw ValidationError("normal axis must be x, y, or z");
  grid.center = parse_vec3(args.center, "--center");

  const Vec3 translation = parse_vec3(args.translation, "--t");
  const Vec3 rotation =
      parse_vec3(args.rotation_deg, "--phi-deg").unaryExpr([](double d) { return deg_to_rad(d); });
  const RigidMode mode = parse_rigid_mode(args.mode);
  const double sigma =
      args.noise_preset.empty() ? args.sigma : noise_preset_sigma(args.noise_preset);

  DisplacementField field = apply_rigid(make_grid(grid), translation, rotation, mode);
  field = add_noise(field, NoiseSpec{sigma, args.seed});
  save_field(field, args.out_path);
  std::cout << "wrote " << field.size() << " nodes to " << args.out_path << "\n";
  return 0;
}

struct EstimateArgs {
  std::string field_path;
  std::string estimator = "lin";
  double outlier_percent = 0.0;
  std::string out_path;
};

int run_estimate(const EstimateArgs& args) {
  DisplacementField field = load_field(args.field_path);
  const EstimatorKind kind = parse_estimator(args.estimator);

  EstimatorOutput fit = run_estimator(field, kind);
  std::vector<std::size_t> removed;
  if (args.outlier_percent > 0.0) {
    FilterResult filtered = filter_outliers(field, fit, args.outlier_percent);
    removed = std::move(filtered.removed_indices);
    field = std::move(filtered.field);
    fit = run_estimator(field, kind);
  }
  const double sigma = estimate_sigma({fit.residuals});
  emit_json(estimation_report_json(estimator_name(kind), fit, sigma, field.size(), removed,
                                   deflection_covariance(field, sigma)),
            args.out_path);
  return 0;
}

struct IdentifyArgs {
  std::string manifest_path;
  std::string estimator = "lin";
  double outlier_percent = 0.0;
  double k_multiplier = 3.0;
  std::string out_path;
};

int run_identify(const IdentifyArgs& args) {
  const auto entries = load_manifest(args.manifest_path);
  if (entries.size() < 6) {
    throw ValidationError("manifest lists " + std::to_string(entries.size()) +
                          " experiments; at least 6 are required");
  }
  const EstimatorKind kind = parse_estimator(args.estimator);

  std::vector<Experiment> experiments;
  std::vector<std::vector<Vec3>> residual_sets;
  Json per_experiment = Json::array();
  for (const auto& entry : entries) {
    DisplacementField field = load_field(entry.field_path);
    EstimatorOutput fit = run_estimator(field, kind);
    std::size_t removed = 0;
    if (args.outlier_percent > 0.0) {
      FilterResult filtered = filter_outliers(field, fit, args.outlier_percent);
      removed = filtered.removed_indices.size();
      field = std::move(filtered.field);
      fit = run_estimator(field, kind);
    }
    residual_sets.push_back(fit.residuals);
    per_experiment.push_back(Json{{"label", entry.load.label},
                                  {"field", entry.field_path.string()},
                                  {"nodes_used", field.size()},
                                  {"nodes_removed", removed},
                                  {"translation_mm", to_json(fit.deflection.translation)},
                                  {"rotation_rad", to_json(fit.deflection.rotation)}});
    experiments.push_back(
        Experiment{entry.load, fit.deflection, deflection_covariance(field, 1.0)});
  }

  const double sigma = estimate_sigma(residual_sets);
  ComplianceMatrix matrix = identify(experiments);
  matrix.ci = scale_ci(experiments, sigma);
  const ComplianceMatrix pruned = prune(matrix, SignificanceConfig{args.k_multiplier});
  const ComplianceMatrix symmetrized = symmetrize(pruned);

  Json report;
  report["estimator"] = estimator_name(kind);
  report["sigma_mm"] = sigma;
  report["k_multiplier"] = args.k_multiplier;
  report["experiments"] = std::move(per_experiment);
  report["compliance"] = compliance_json(matrix);
  report["compliance_pruned"] = compliance_json(pruned);
  report["compliance_symmetrized"] = compliance_json(symmetrized);
  try {
    const StiffnessResult stiffness = to_stiffness(symmetrized);
    report["stiffness"] = to_json(stiffness.matrix);
    report["stiffness_min_eigenvalue"] = stiffness.min_eigenvalue;
  } catch (const Error& e) {
    report["stiffness_error"] = e.what();
  }
  emit_json(report, args.out_path);
  return 0;
}

struct StudyArgs {
  std::string config_path;
  std::string study_name;
  std::string out_dir = "study-out";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> estimator;
  std::optional<double> outlier_percent;
  std::optional<double> k_multiplier;
  std::optional<double> sigma;
};

int run_study_command(const StudyArgs& args) {
  StudyConfig config;
  if (!args.config_path.empty()) {
    config = study_config_from_json(detail::parse_json_file(args.config_path));
  }
  if (!args.study_name.empty()) config.study = parse_study(args.study_name);
  if (args.seed) config.seed = *args.seed;
  if (args.trials) config.trials = *args.trials;
  if (args.estimator) config.estimator = parse_estimator(*args.estimator);
  if (args.outlier_percent) config.outlier_percent = *args.outlier_percent;
  if (args.k_multiplier) config.k_multiplier = *args.k_multiplier;
  if (args.sigma) config.sigma = *args.sigma;
  config.validate();

  const Json summary = run_study(config, args.out_dir);
  std::cout << summary.dump(2) << "\n";
  std::cout << "study outputs written to " << args.out_dir << "\n";
  return 0;
}

struct BeamBenchArgs {
  std::string config_path;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<double> outlier_percent;
  std::optional<double> k_multiplier;
  std::optional<std::string> mode;
  std::string out_dir = "beam-bench-out";
};

int run_beam_bench(const BeamBenchArgs& args) {
  StudyConfig config;
  config.sigma = 5.6e-5;
  config.outlier_percent = 0.10;
  config.rotation_mode = RigidMode::Exact;
  if (!args.config_path.empty()) {
    config = study_config_from_json(detail::parse_json_file(args.config_path));
  }
  config.study = StudyKind::BeamBench;
  if (args.sigma) config.sigma = *args.sigma;
  if (args.seed) config.seed = *args.seed;
  if (args.outlier_percent) config.outlier_percent = *args.outlier_percent;
  if (args.k_multiplier) config.k_multiplier = *args.k_multiplier;
  if (args.mode) config.rotation_mode = parse_rigid_mode(*args.mode);

  const Json summary = run_study(config, args.out_dir);
  std::cout << "sigma estimate: " << summary["sigma_estimate_mm"] << " mm\n"
            << "max significant element error: " << summary["max_significant_rel_error"]
            << "\nzero detection: " << summary["zero_detection"].dump() << "\n"
            << "report written to " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigid-deflection identification and compliance assembly toolkit"};
  app.require_subcommand(1);

  GenFieldArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-field", "synthesize a displacement field");
  gen_cmd->add_option("--kind", gen.kind, "grid kind: cubic or planar");
  gen_cmd->add_option("--extent", gen.extent, "grid side length, mm");
  gen_cmd->add_option("--step", gen.step, "mesh step, mm");
  gen_cmd->add_option("--normal-axis", gen.normal_axis, "planar grid normal: x, y, or z");
  gen_cmd->add_option("--center", gen.center, "grid center 'x,y,z' in mm");
  gen_cmd->add_option("--t", gen.translation, "translation 'x,y,z' in mm");
  gen_cmd->add_option("--phi-deg", gen.rotation_deg, "rotation 'x,y,z' in degrees");
  gen_cmd->add_option("--mode", gen.mode, "rotation build: exact, linearized, euler-xyz");
  gen_cmd->add_option("--sigma", gen.sigma, "noise standard deviation, mm");
  gen_cmd->add_option("--noise-preset", gen.noise_preset,
                      "linear-2mm, linear-1mm, parabolic-3mm, or parabolic-2mm");
  gen_cmd->add_option("--seed", gen.seed, "noise seed");
  gen_cmd->add_option("--out", gen.out_path, "output path (.json or .csv)")->required();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "fit a rigid deflection to a field file");
  est_cmd->add_option("--field", est.field_path, "field file (.json or .csv)")->required();
  est_cmd->add_option("--estimator", est.estimator, "lin, svd+, svd-, or svd-avg");
  est_cmd->add_option("--outlier-percent", est.outlier_percent,
                      "fraction of worst-residual nodes to drop before refitting");
  est_cmd->add_option("--out", est.out_path, "report path (stdout when omitted)");

  IdentifyArgs idn;
  auto* idn_cmd = app.add_subcommand("identify", "assemble a compliance matrix");
  idn_cmd->add_option("--manifest", idn.manifest_path, "experiment manifest JSON")->required();
  idn_cmd->add_option("--estimator", idn.estimator, "lin, svd+, svd-, or svd-avg");
  idn_cmd->add_option("--outlier-percent", idn.outlier_percent, "outlier filter fraction");
  idn_cmd->add_option("--k-multiplier", idn.k_multiplier, "significance multiplier");
  idn_cmd->add_option("--out", idn.out_path, "report path (stdout when omitted)");

  StudyArgs study;
  auto* study_cmd = app.add_subcommand("study", "run a study from a JSON config");
  study_cmd->add_option("--config", study.config_path, "StudyConfig JSON file");
  study_cmd->add_option("--study", study.study_name,
                        "table2, table3, noise-study, or beam-bench");
  study_cmd->add_option("--out", study.out_dir, "output directory");
  study_cmd->add_option("--seed", study.seed, "override: base seed");
  study_cmd->add_option("--trials", study.trials, "override: trial count");
  study_cmd->add_option("--estimator", study.estimator, "override: estimator");
  study_cmd->add_option("--outlier-percent", study.outlier_percent, "override: filter fraction");
  study_cmd->add_option("--k-multiplier", study.k_multiplier, "override: significance multiplier");
  study_cmd->add_option("--sigma", study.sigma, "override: noise level, mm");

  BeamBenchArgs bench;
  auto* bench_cmd = app.add_subcommand("beam-bench", "cantilever benchmark pipeline");
  bench_cmd->add_option("--config", bench.config_path, "StudyConfig JSON file");
  bench_cmd->add_option("--sigma", bench.sigma, "noise standard deviation, mm (default 5.6e-5)");
  bench_cmd->add_option("--seed", bench.seed, "noise seed");
  bench_cmd->add_option("--outlier-percent", bench.outlier_percent,
                        "outlier filter fraction (default 0.10)");
  bench_cmd->add_option("--k-multiplier", bench.k_multiplier,
                        "significance multiplier (default 3)");
  bench_cmd->add_option("--mode", bench.mode, "field transform mode: exact or linearized");
  bench_cmd->add_option("--out", bench.out_dir, "output directory");

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return run_gen_field(gen);
    if (est_cmd->parsed()) return run_estimate(est);
    if (idn_cmd->parsed()) return run_identify(idn);
    if (study_cmd->parsed()) return run_study_command(study);
    if (bench_cmd->parsed()) return run_beam_bench(bench);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
