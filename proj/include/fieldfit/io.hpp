#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldfit/beam.hpp"
#include "fieldfit/compliance.hpp"
#include "fieldfit/core.hpp"
#include "fieldfit/statistics.hpp"

namespace fieldfit {

using Json = nlohmann::json;

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const Mat6& m) {
  Json rows = Json::array();
  for (int i = 0; i < 6; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 6; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const BoolMat6& m) {
  Json rows = Json::array();
  for (int i = 0; i < 6; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 6; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vec3 vec3_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(what + " must be an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

namespace detail {

inline std::string format_full(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("failed reading file: " + path.string());
  return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << text;
  if (!out.good()) throw IoError("failed writing file: " + path.string());
}

inline Json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline constexpr const char* kFieldFormatVersion = "1";
inline constexpr const char* kFieldCsvHeader = "px,py,pz,dpx,dpy,dpz";

//! Writes a field as JSON, or as CSV (header px,py,pz,dpx,dpy,dpz) when the
//! path ends in .csv. CSV carries values with 17 significant digits so the
//! two formats stay value-lossless against each other.
inline void save_field(const DisplacementField& field, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    std::ostringstream out;
    out << kFieldCsvHeader << "\n";
    for (const auto& node : field.nodes()) {
      out << detail::format_full(node.position.x()) << ','
          << detail::format_full(node.position.y()) << ','
          << detail::format_full(node.position.z()) << ','
          << detail::format_full(node.displacement.x()) << ','
          << detail::format_full(node.displacement.y()) << ','
          << detail::format_full(node.displacement.z()) << "\n";
    }
    detail::write_text_file(path, out.str());
    return;
  }
  Json doc;
  doc["format_version"] = kFieldFormatVersion;
  doc["reference_point"] = to_json(field.reference_point());
  Json nodes = Json::array();
  for (const auto& node : field.nodes()) {
    nodes.push_back(Json{{"p", to_json(node.position)}, {"dp", to_json(node.displacement)}});
  }
  doc["nodes"] = std::move(nodes);
  detail::write_text_file(path, doc.dump(2) + "\n");
}

inline DisplacementField load_field(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    const std::string text = detail::read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.find("px") == std::string::npos) {
      throw ValidationError("field CSV must start with header " +
                            std::string(kFieldCsvHeader));
    }
    std::vector<FieldNode> nodes;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      FieldNode node;
      if (!(row >> node.position.x() >> node.position.y() >> node.position.z() >>
            node.displacement.x() >> node.displacement.y() >> node.displacement.z())) {
        throw ValidationError("field CSV: bad row at line " + std::to_string(line_number));
      }
      nodes.push_back(node);
    }
    return DisplacementField(std::move(nodes), Vec3::Zero());
  }

  const Json doc = detail::parse_json_file(path);
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ValidationError("field file missing 'nodes' array: " + path.string());
  }
  const Vec3 reference = doc.contains("reference_point")
                             ? vec3_from_json(doc["reference_point"], "reference_point")
                             : Vec3::Zero();
  std::vector<FieldNode> nodes;
  nodes.reserve(doc["nodes"].size());
  for (const auto& entry : doc["nodes"]) {
    if (!entry.contains("p") || !entry.contains("dp")) {
      throw ValidationError("field node entries need 'p' and 'dp': " + path.string());
    }
    nodes.push_back({vec3_from_json(entry["p"], "node p"),
                     vec3_from_json(entry["dp"], "node dp")});
  }
  return DisplacementField(std::move(nodes), reference);
}

struct ManifestEntry {
  LoadCase load;
  std::filesystem::path field_path;
};

//! Experiment manifest: a JSON list of load cases with their field files.
//! Moments may be given in N*mm ("moment_nmm") or N*m ("moment_nm", scaled
//! by 1000 on the way in). Relative field paths resolve against the
//! manifest's own directory.
inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  const Json doc = detail::parse_json_file(path);
  if (!doc.contains("experiments") || !doc["experiments"].is_array()) {
    throw ValidationError("manifest missing 'experiments' array: " + path.string());
  }
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc["experiments"]) {
    ManifestEntry entry;
    if (item.contains("force_n")) {
      entry.load.force = vec3_from_json(item["force_n"], "force_n");
    }
    if (item.contains("moment_nmm")) {
      entry.load.moment = vec3_from_json(item["moment_nmm"], "moment_nmm");
    } else if (item.contains("moment_nm")) {
      entry.load.moment = 1000.0 * vec3_from_json(item["moment_nm"], "moment_nm");
    }
    entry.load.label = item.value("label", "");
    if (!item.contains("field") || !item["field"].is_string()) {
      throw ValidationError("manifest entries need a 'field' path");
    }
    std::filesystem::path field(item["field"].get<std::string>());
    entry.field_path = field.is_absolute() ? field : base / field;
    entries.push_back(std::move(entry));
  }
  return entries;
}

inline Json estimation_report_json(const std::string& estimator_name,
                                   const EstimatorOutput& fit, double sigma,
                                   std::size_t node_count,
                                   const std::vector<std::size_t>& removed,
                                   const std::optional<DeflectionCovariance>& covariance =
                                       std::nullopt) {
  double max_abs = 0.0;
  for (const Vec3& r : fit.residuals) max_abs = std::max(max_abs, r.cwiseAbs().maxCoeff());
  Json doc;
  doc["estimator"] = estimator_name;
  doc["node_count"] = node_count;
  doc["translation_mm"] = to_json(fit.deflection.translation);
  doc["rotation_rad"] = to_json(fit.deflection.rotation);
  doc["rotation_deg"] = to_json(Vec3(fit.deflection.rotation * (180.0 / std::numbers::pi)));
  doc["residual_sum_sq_mm2"] = fit.residual_sum_sq;
  doc["residual_rms_mm"] =
      std::sqrt(fit.residual_sum_sq / (3.0 * static_cast<double>(fit.residuals.size())));
  doc["max_abs_residual_mm"] = max_abs;
  doc["sigma_mm"] = sigma;
  if (covariance) {
    doc["translation_std_mm"] = to_json(Vec3(covariance->translation.diagonal().cwiseSqrt()));
    doc["rotation_std_rad"] = to_json(Vec3(covariance->rotation.diagonal().cwiseSqrt()));
  }
  doc["removed_node_indices"] = removed;
  doc["linear_range_warning"] = !fit.deflection.within_linear_range();
  return doc;
}

inline Json compliance_json(const ComplianceMatrix& matrix) {
  Json doc;
  doc["values"] = to_json(matrix.values);
  doc["ci"] = to_json(matrix.ci);
  doc["significant"] = to_json(matrix.significant);
  return doc;
}

inline Json benchmark_report_json(const BeamBenchmarkReport& report) {
  Json doc;
  doc["analytic"] = compliance_json(report.analytic);
  doc["identified"] = compliance_json(report.identified);
  doc["pruned"] = compliance_json(report.pruned);
  doc["symmetrized"] = compliance_json(report.symmetrized);
  if (report.stiffness) {
    doc["stiffness"] = to_json(report.stiffness->matrix);
    doc["stiffness_min_eigenvalue"] = report.stiffness->min_eigenvalue;
  } else {
    doc["stiffness_error"] = report.stiffness_error;
  }
  doc["sigma_true_mm"] = report.sigma_true;
  doc["sigma_estimate_mm"] = report.sigma_estimate;
  doc["max_significant_rel_error"] = report.max_significant_rel_error;
  doc["min_significance_margin"] = report.min_significance_margin;
  doc["zero_detection"] = Json{{"true_zeros", report.zeros.true_zeros},
                               {"detected_zeros", report.zeros.detected_zeros},
                               {"missed_zeros", report.zeros.missed_zeros},
                               {"false_zeros", report.zeros.false_zeros}};
  doc["rotation_diag_alt_y"] = report.rotation_diag_alt_y;
  doc["rotation_diag_alt_z"] = report.rotation_diag_alt_z;
  doc["removed_per_experiment"] = report.removed_per_experiment;
  return doc;
}

//! CSV dump of one or more labelled 6x6 matrices, one row per matrix row.
inline void write_matrices_csv(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, Mat6>>& matrices) {
  std::ostringstream out;
  out << "matrix,row,c1,c2,c3,c4,c5,c6\n";
  for (const auto& [name, m] : matrices) {
    for (int i = 0; i < 6; ++i) {
      out << name << ',' << i + 1;
      for (int j = 0; j < 6; ++j) out << ',' << detail::format_full(m(i, j));
      out << "\n";
    }
  }
  detail::write_text_file(path, out.str());
}

}  // namespace fieldfit
