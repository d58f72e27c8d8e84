#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fieldfit/beam.hpp"
#include "fieldfit/core.hpp"
#include "fieldfit/estimators.hpp"
#include "fieldfit/fieldgen.hpp"
#include "fieldfit/io.hpp"
#include "fieldfit/statistics.hpp"

namespace fieldfit {

enum class EstimatorKind { Lin, SvdPlus, SvdMinus, SvdAverage };

inline EstimatorKind parse_estimator(std::string_view name) {
  if (name == "lin") return EstimatorKind::Lin;
  if (name == "svd+" || name == "svd-plus") return EstimatorKind::SvdPlus;
  if (name == "svd-" || name == "svd-minus") return EstimatorKind::SvdMinus;
  if (name == "svd±" || name == "svd-avg") return EstimatorKind::SvdAverage;
  throw ValidationError("unknown estimator: " + std::string(name) +
                        " (expected lin, svd+, svd-, or svd-avg)");
}

inline std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Lin: return "lin";
    case EstimatorKind::SvdPlus: return "svd+";
    case EstimatorKind::SvdMinus: return "svd-";
    case EstimatorKind::SvdAverage: default: return "svd-avg";
  }
}

inline EstimatorOutput run_estimator(const DisplacementField& field, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Lin: return estimate_lin(field);
    case EstimatorKind::SvdPlus: return estimate_svd(field, SvdVariant::Plus);
    case EstimatorKind::SvdMinus: return estimate_svd(field, SvdVariant::Minus);
    case EstimatorKind::SvdAverage: default: return estimate_svd(field, SvdVariant::Average);
  }
}

enum class StudyKind { Table2, Table3, NoiseStudy, BeamBench };

inline StudyKind parse_study(std::string_view name) {
  if (name == "table2") return StudyKind::Table2;
  if (name == "table3") return StudyKind::Table3;
  if (name == "noise-study") return StudyKind::NoiseStudy;
  if (name == "beam-bench") return StudyKind::BeamBench;
  throw ValidationError("unknown study: " + std::string(name) +
                        " (expected table2, table3, noise-study, or beam-bench)");
}

//! One configuration drives all four studies; fields that a study does not
//! use are ignored.
struct StudyConfig {
  StudyKind study = StudyKind::NoiseStudy;
  GridSpec grid;
  std::vector<double> amplitudes;  // mm for table2, deg for table3
  double sigma = 5e-5;             // mm
  int trials = 1000;
  std::uint64_t seed = 1;
  EstimatorKind estimator = EstimatorKind::Lin;
  double outlier_percent = 0.0;
  double k_multiplier = 3.0;
  double translation_amplitude_mm = 1.0;  // noise-study ground truth
  double rotation_amplitude_deg = 0.1;    // noise-study ground truth
  RigidMode rotation_mode = RigidMode::EulerXyz;  // ground-truth rotations
  BeamSpec beam;

  void validate() const {
    if (trials < 1) throw ValidationError("study needs at least one trial");
    if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  }
};

inline RigidMode parse_rigid_mode(std::string_view name) {
  if (name == "exact") return RigidMode::Exact;
  if (name == "linearized") return RigidMode::Linearized;
  if (name == "euler-xyz") return RigidMode::EulerXyz;
  throw ValidationError("unknown transform mode: " + std::string(name));
}

inline StudyConfig study_config_from_json(const Json& doc) {
  StudyConfig cfg;
  if (doc.contains("study")) cfg.study = parse_study(doc["study"].get<std::string>());
  if (doc.contains("grid")) {
    const Json& grid = doc["grid"];
    if (grid.contains("kind")) {
      const std::string kind = grid["kind"].get<std::string>();
      if (kind == "cubic") cfg.grid.kind = GridKind::Cubic;
      else if (kind == "planar") cfg.grid.kind = GridKind::Planar;
      else throw ValidationError("grid kind must be cubic or planar");
    }
    if (grid.contains("extent")) cfg.grid.extent = grid["extent"].get<double>();
    if (grid.contains("step")) cfg.grid.step = grid["step"].get<double>();
    if (grid.contains("normal_axis")) {
      const std::string axis = grid["normal_axis"].get<std::string>();
      if (axis == "x") cfg.grid.normal_axis = Axis3::X;
      else if (axis == "y") cfg.grid.normal_axis = Axis3::Y;
      else if (axis == "z") cfg.grid.normal_axis = Axis3::Z;
      else throw ValidationError("normal_axis must be x, y, or z");
    }
    if (grid.contains("center")) cfg.grid.center = vec3_from_json(grid["center"], "grid center");
  }
  if (doc.contains("amplitudes")) cfg.amplitudes = doc["amplitudes"].get<std::vector<double>>();
  if (doc.contains("sigma")) cfg.sigma = doc["sigma"].get<double>();
  if (doc.contains("trials")) cfg.trials = doc["trials"].get<int>();
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("estimator")) cfg.estimator = parse_estimator(doc["estimator"].get<std::string>());
  if (doc.contains("outlier_percent")) cfg.outlier_percent = doc["outlier_percent"].get<double>();
  else if (cfg.study == StudyKind::BeamBench) cfg.outlier_percent = 0.10;
  if (doc.contains("k_multiplier")) cfg.k_multiplier = doc["k_multiplier"].get<double>();
  if (doc.contains("translation_mm")) cfg.translation_amplitude_mm = doc["translation_mm"].get<double>();
  if (doc.contains("rotation_deg")) cfg.rotation_amplitude_deg = doc["rotation_deg"].get<double>();
  if (doc.contains("rotation_mode")) cfg.rotation_mode = parse_rigid_mode(doc["rotation_mode"].get<std::string>());
  if (doc.contains("beam")) {
    const Json& beam = doc["beam"];
    if (beam.contains("length")) cfg.beam.length = beam["length"].get<double>();
    if (beam.contains("width")) cfg.beam.width = beam["width"].get<double>();
    if (beam.contains("height")) cfg.beam.height = beam["height"].get<double>();
    if (beam.contains("youngs_modulus")) cfg.beam.youngs_modulus = beam["youngs_modulus"].get<double>();
    if (beam.contains("poisson_ratio")) cfg.beam.poisson_ratio = beam["poisson_ratio"].get<double>();
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Sample statistics and histograms
// ---------------------------------------------------------------------------

struct SampleStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& values) {
  SampleStats stats;
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return stats;
  for (double v : values) stats.mean += v;
  stats.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - stats.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  stats.std_dev = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    stats.skewness = m3 / std::pow(m2, 1.5);
    stats.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return stats;
}

struct Histogram {
  std::vector<double> edges;  // bin_count + 1 edges
  std::vector<int> counts;
};

inline Histogram make_histogram(const std::vector<double>& values, int bin_count = 20) {
  if (bin_count < 1) throw ValidationError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bin_count), 0);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = values.empty() ? 0.0 : *lo_it;
  double hi = values.empty() ? 1.0 : *hi_it;
  if (hi <= lo) hi = lo + 1.0;  // degenerate sample, single occupied bin
  for (int i = 0; i <= bin_count; ++i) {
    h.edges.push_back(lo + (hi - lo) * i / bin_count);
  }
  for (double v : values) {
    auto bin = static_cast<long>((v - lo) / (hi - lo) * bin_count);
    bin = std::clamp(bin, 0L, static_cast<long>(bin_count - 1));
    h.counts[static_cast<std::size_t>(bin)]++;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Study drivers
// ---------------------------------------------------------------------------

//! Noiseless translation sweep: for each amplitude the grid is displaced by
//! t = (a, a, a) and each method's worst recovered-component error is
//! recorded in mm.
struct TranslationSweepResult {
  std::vector<double> amplitudes_mm;
  std::vector<EstimatorKind> methods;
  std::vector<std::vector<double>> errors_mm;  // [method][amplitude]
};

inline TranslationSweepResult run_table2_study(const StudyConfig& config) {
  StudyConfig cfg = config;
  if (cfg.amplitudes.empty()) cfg.amplitudes = {0.01, 0.1, 1.0, 10.0};
  TranslationSweepResult result;
  result.amplitudes_mm = cfg.amplitudes;
  result.methods = {EstimatorKind::SvdAverage, EstimatorKind::Lin};
  const DisplacementField grid = make_grid(cfg.grid);
  for (const EstimatorKind method : result.methods) {
    std::vector<double> row;
    for (const double a : cfg.amplitudes) {
      const Vec3 truth(a, a, a);
      const DisplacementField field = apply_rigid(grid, truth, Vec3::Zero(), RigidMode::Exact);
      const EstimatorOutput fit = run_estimator(field, method);
      row.push_back((fit.deflection.translation - truth).cwiseAbs().maxCoeff());
    }
    result.errors_mm.push_back(std::move(row));
  }
  return result;
}

//! Noiseless rotation sweep over all four extraction methods: the grid is
//! rotated by phi = (b, b, b) built per the configured convention and the
//! worst recovered-angle error is recorded in degrees.
struct RotationSweepResult {
  std::vector<double> amplitudes_deg;
  std::vector<EstimatorKind> methods;
  std::vector<std::vector<double>> errors_deg;  // [method][amplitude]
};

inline RotationSweepResult run_table3_study(const StudyConfig& config) {
  StudyConfig cfg = config;
  if (cfg.amplitudes.empty()) cfg.amplitudes = {0.01, 0.1, 1.0, 5.0};
  RotationSweepResult result;
  result.amplitudes_deg = cfg.amplitudes;
  result.methods = {EstimatorKind::SvdPlus, EstimatorKind::SvdMinus,
                    EstimatorKind::SvdAverage, EstimatorKind::Lin};
  const DisplacementField grid = make_grid(cfg.grid);
  for (const EstimatorKind method : result.methods) {
    std::vector<double> row;
    for (const double b_deg : cfg.amplitudes) {
      const double b = deg_to_rad(b_deg);
      const Vec3 truth(b, b, b);
      const DisplacementField field =
          apply_rigid(grid, Vec3::Zero(), truth, cfg.rotation_mode);
      const EstimatorOutput fit = run_estimator(field, method);
      row.push_back(rad_to_deg((fit.deflection.rotation - truth).cwiseAbs().maxCoeff()));
    }
    result.errors_deg.push_back(std::move(row));
  }
  return result;
}

//! Repeated noisy identifications of one fixed deflection. Reports per
//! component error statistics, 20-bin histograms, and the noise-only
//! standard deviations predicted by the covariance formulas.
struct NoiseStudyResult {
  std::vector<std::string> component_names;
  std::vector<SampleStats> stats;      // 6 entries: t (mm), phi (rad)
  std::vector<Histogram> histograms;   // same order
  double predicted_translation_std = 0.0;  // mm
  Vec3 predicted_rotation_std = Vec3::Zero();  // rad
};

inline NoiseStudyResult run_noise_study(const StudyConfig& config) {
  config.validate();
  const DisplacementField grid = make_grid(config.grid);
  const Vec3 truth_t = Vec3::Constant(config.translation_amplitude_mm);
  const Vec3 truth_phi = Vec3::Constant(deg_to_rad(config.rotation_amplitude_deg));
  const DisplacementField displaced =
      apply_rigid(grid, truth_t, truth_phi, config.rotation_mode);

  std::vector<std::vector<double>> errors(6);
  for (auto& channel : errors) channel.reserve(static_cast<std::size_t>(config.trials));

  for (int trial = 0; trial < config.trials; ++trial) {
    const NoiseSpec noise{config.sigma, config.seed + static_cast<std::uint64_t>(trial)};
    DisplacementField field = add_noise(displaced, noise);
    EstimatorOutput fit = run_estimator(field, config.estimator);
    if (config.outlier_percent > 0.0) {
      FilterResult filtered = filter_outliers(field, fit, config.outlier_percent);
      fit = run_estimator(filtered.field, config.estimator);
    }
    const Vec3 dt = fit.deflection.translation - truth_t;
    const Vec3 dphi = fit.deflection.rotation - truth_phi;
    for (int i = 0; i < 3; ++i) {
      errors[static_cast<std::size_t>(i)].push_back(dt(i));
      errors[static_cast<std::size_t>(i + 3)].push_back(dphi(i));
    }
  }

  NoiseStudyResult result;
  result.component_names = {"t_x", "t_y", "t_z", "phi_x", "phi_y", "phi_z"};
  for (const auto& channel : errors) {
    result.stats.push_back(sample_stats(channel));
    result.histograms.push_back(make_histogram(channel));
  }
  const DeflectionCovariance cov = deflection_covariance(grid, config.sigma);
  result.predicted_translation_std = std::sqrt(cov.translation(0, 0));
  result.predicted_rotation_std = cov.rotation.diagonal().cwiseSqrt();
  return result;
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

namespace detail {

inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<double>& amplitudes,
                            const std::vector<EstimatorKind>& methods,
                            const std::vector<std::vector<double>>& errors,
                            const std::string& amplitude_unit) {
  std::ostringstream out;
  out << "method";
  for (double a : amplitudes) out << ",a=" << a << amplitude_unit;
  out << "\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << estimator_name(methods[m]);
    for (double err : errors[m]) out << ',' << format_full(err);
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace detail

//! Runs the configured study and writes its CSV tables plus a JSON summary
//! into out_dir. Returns the summary document.
inline Json run_study(const StudyConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  Json summary;
  summary["seed"] = config.seed;
  switch (config.study) {
    case StudyKind::Table2: {
      const TranslationSweepResult result = run_table2_study(config);
      detail::write_sweep_csv(out_dir / "table2.csv", result.amplitudes_mm, result.methods,
                              result.errors_mm, "mm");
      summary["study"] = "table2";
      summary["amplitudes_mm"] = result.amplitudes_mm;
      for (std::size_t m = 0; m < result.methods.size(); ++m) {
        summary["errors_mm"][estimator_name(result.methods[m])] = result.errors_mm[m];
      }
      break;
    }
    case StudyKind::Table3: {
      const RotationSweepResult result = run_table3_study(config);
      detail::write_sweep_csv(out_dir / "table3.csv", result.amplitudes_deg, result.methods,
                              result.errors_deg, "deg");
      summary["study"] = "table3";
      summary["amplitudes_deg"] = result.amplitudes_deg;
      for (std::size_t m = 0; m < result.methods.size(); ++m) {
        summary["errors_deg"][estimator_name(result.methods[m])] = result.errors_deg[m];
      }
      break;
    }
    case StudyKind::NoiseStudy: {
      const NoiseStudyResult result = run_noise_study(config);
      std::ostringstream stats_csv;
      stats_csv << "component,mean,std,skewness,excess_kurtosis\n";
      std::ostringstream hist_csv;
      hist_csv << "component,bin_lo,bin_hi,count\n";
      for (std::size_t i = 0; i < result.component_names.size(); ++i) {
        const auto& s = result.stats[i];
        stats_csv << result.component_names[i] << ',' << detail::format_full(s.mean) << ','
                  << detail::format_full(s.std_dev) << ',' << detail::format_full(s.skewness)
                  << ',' << detail::format_full(s.excess_kurtosis) << "\n";
        const auto& h = result.histograms[i];
        for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
          hist_csv << result.component_names[i] << ',' << detail::format_full(h.edges[b]) << ','
                   << detail::format_full(h.edges[b + 1]) << ',' << h.counts[b] << "\n";
        }
      }
      detail::write_text_file(out_dir / "noise_study.csv", stats_csv.str());
      detail::write_text_file(out_dir / "histograms.csv", hist_csv.str());
      summary["study"] = "noise-study";
      summary["trials"] = config.trials;
      summary["sigma_mm"] = config.sigma;
      summary["predicted_translation_std_mm"] = result.predicted_translation_std;
      summary["predicted_rotation_std_rad"] = to_json(result.predicted_rotation_std);
      for (std::size_t i = 0; i < result.component_names.size(); ++i) {
        Json entry;
        entry["mean"] = result.stats[i].mean;
        entry["std"] = result.stats[i].std_dev;
        entry["skewness"] = result.stats[i].skewness;
        entry["excess_kurtosis"] = result.stats[i].excess_kurtosis;
        summary["components"][result.component_names[i]] = std::move(entry);
      }
      break;
    }
    case StudyKind::BeamBench: {
      BeamBenchmarkOptions options;
      options.outlier_percent = config.outlier_percent;
      options.significance.multiplier = config.k_multiplier;
      options.transform_mode = config.rotation_mode == RigidMode::Linearized
                                   ? RigidMode::Linearized
                                   : RigidMode::Exact;
      const auto loads = beam_reference_loads();
      const BeamBenchmarkReport report = beam_benchmark(
          config.beam, config.grid, NoiseSpec{config.sigma, config.seed}, loads, options);
      summary = benchmark_report_json(report);
      summary["study"] = "beam-bench";
      summary["seed"] = config.seed;
      write_matrices_csv(out_dir / "beam_bench_matrices.csv",
                         {{"analytic", report.analytic.values},
                          {"identified", report.identified.values},
                          {"pruned", report.pruned.values},
                          {"symmetrized", report.symmetrized.values}});
      break;
    }
  }
  detail::write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace fieldfit
