#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fieldfit/compliance.hpp"
#include "fieldfit/core.hpp"
#include "fieldfit/estimators.hpp"
#include "fieldfit/fieldgen.hpp"
#include "fieldfit/statistics.hpp"

namespace fieldfit {

//! Clamped-free rectangular beam along the x axis. Width is the y extent
//! of the cross-section, height the z extent.
struct BeamSpec {
  double length = 1000.0;         // mm
  double width = 10.0;            // mm
  double height = 10.0;           // mm
  double youngs_modulus = 2.0e5;  // N/mm^2
  double poisson_ratio = 0.266;
  std::optional<double> torsion_constant_override;  // mm^4

  void validate() const {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0) ||
        !(youngs_modulus > 0.0)) {
      throw ValidationError("beam dimensions and modulus must be positive");
    }
    if (!(poisson_ratio > 0.0) || !(poisson_ratio < 0.5)) {
      throw ValidationError("Poisson's ratio must lie in (0, 0.5)");
    }
  }

  double area() const { return width * height; }
  double moment_y() const { return height * width * width * width / 12.0; }
  double moment_z() const { return width * height * height * height / 12.0; }
  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  //! Saint-Venant torsion constant. Squares use the classical 0.1406 s^4;
  //! general rectangles fall back to the usual closed-form fit.
  double torsion_constant() const {
    if (torsion_constant_override) return *torsion_constant_override;
    const double a = std::max(width, height);
    const double b = std::min(width, height);
    if (std::abs(a - b) <= 1e-12 * a) {
      return 0.1406 * a * a * a * a;
    }
    const double ratio = b / a;
    return a * b * b * b *
           (1.0 / 3.0 - 0.21 * ratio * (1.0 - std::pow(ratio, 4) / 12.0));
  }
};

//! Closed-form tip compliance of the cantilever. The tip rotation diagonal
//! uses L/EI, which the assembled-element oracle confirms; see
//! tip_rotation_compliance_alt for the one-third variant kept for
//! comparison.
inline ComplianceMatrix beam_compliance_analytic(const BeamSpec& spec) {
  spec.validate();
  const double l = spec.length;
  const double e = spec.youngs_modulus;
  const double ea = e * spec.area();
  const double eiy = e * spec.moment_y();
  const double eiz = e * spec.moment_z();
  const double gj = spec.shear_modulus() * spec.torsion_constant();

  Mat6 k = Mat6::Zero();
  k(0, 0) = l / ea;
  k(1, 1) = l * l * l / (3.0 * eiz);
  k(2, 2) = l * l * l / (3.0 * eiy);
  k(3, 3) = l / gj;
  k(4, 4) = l / eiy;
  k(5, 5) = l / eiz;
  k(2, 4) = k(4, 2) = -l * l / (2.0 * eiy);
  k(1, 5) = k(5, 1) = l * l / (2.0 * eiz);
  return ComplianceMatrix::from_values(k);
}

//! One-third variant of the tip rotation compliances (L/3EI_y, L/3EI_z).
//! Disagrees with the element oracle; exposed only so reports can show the
//! two side by side.
inline std::pair<double, double> tip_rotation_compliance_alt(const BeamSpec& spec) {
  spec.validate();
  const double l = spec.length;
  return {l / (3.0 * spec.youngs_modulus * spec.moment_y()),
          l / (3.0 * spec.youngs_modulus * spec.moment_z())};
}

namespace detail {

//! Standard 12-dof Euler-Bernoulli element stiffness for a beam segment
//! along x. Local dof order per node: (ux, uy, uz, rx, ry, rz).
inline Eigen::Matrix<double, 12, 12> beam_element_stiffness(const BeamSpec& spec,
                                                            double length) {
  const double e = spec.youngs_modulus;
  const double a = spec.area();
  const double iy = spec.moment_y();
  const double iz = spec.moment_z();
  const double gj = spec.shear_modulus() * spec.torsion_constant();
  const double l = length;
  const double l2 = l * l;
  const double l3 = l2 * l;

  Eigen::Matrix<double, 12, 12> k = Eigen::Matrix<double, 12, 12>::Zero();

  const double ax = e * a / l;
  k(0, 0) = ax;
  k(0, 6) = -ax;
  k(6, 6) = ax;

  const double tor = gj / l;
  k(3, 3) = tor;
  k(3, 9) = -tor;
  k(9, 9) = tor;

  // Bending in the x-y plane (dofs uy, rz).
  const double bz1 = 12.0 * e * iz / l3;
  const double bz2 = 6.0 * e * iz / l2;
  const double bz3 = 4.0 * e * iz / l;
  const double bz4 = 2.0 * e * iz / l;
  k(1, 1) = bz1;
  k(1, 5) = bz2;
  k(1, 7) = -bz1;
  k(1, 11) = bz2;
  k(5, 5) = bz3;
  k(5, 7) = -bz2;
  k(5, 11) = bz4;
  k(7, 7) = bz1;
  k(7, 11) = -bz2;
  k(11, 11) = bz3;

  // Bending in the x-z plane (dofs uz, ry); coupling signs flip.
  const double by1 = 12.0 * e * iy / l3;
  const double by2 = 6.0 * e * iy / l2;
  const double by3 = 4.0 * e * iy / l;
  const double by4 = 2.0 * e * iy / l;
  k(2, 2) = by1;
  k(2, 4) = -by2;
  k(2, 8) = -by1;
  k(2, 10) = -by2;
  k(4, 4) = by3;
  k(4, 8) = by2;
  k(4, 10) = by4;
  k(8, 8) = by1;
  k(8, 10) = by2;
  k(10, 10) = by3;

  return k.selfadjointView<Eigen::Upper>();
}

}  // namespace detail

//! Independent oracle: chains 12-dof Euler-Bernoulli elements, clamps the
//! root node, applies the six canonical unit wrenches at the tip and reads
//! off the tip deflections. Exact for nodal tip loads, so the result does
//! not depend on the element count.
inline ComplianceMatrix beam_compliance_discretized(const BeamSpec& spec, int element_count) {
  spec.validate();
  if (element_count < 1) {
    throw ValidationError("discretized beam needs at least one element");
  }
  const int free_dofs = 6 * element_count;  // root node clamped
  Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(free_dofs, free_dofs);
  const auto element = detail::beam_element_stiffness(
      spec, spec.length / static_cast<double>(element_count));

  for (int e = 0; e < element_count; ++e) {
    // Global dof index for (node, local dof); the clamped root maps to -1.
    auto global = [&](int node, int dof) { return 6 * (node - 1) + dof; };
    for (int r = 0; r < 12; ++r) {
      const int gr = global(e + r / 6, r % 6);
      if (gr < 0) continue;
      for (int c = 0; c < 12; ++c) {
        const int gc = global(e + c / 6, c % 6);
        if (gc < 0) continue;
        stiffness(gr, gc) += element(r, c);
      }
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> solver(stiffness);
  if (solver.info() != Eigen::Success) {
    throw DegeneracyError("beam assembly produced a singular stiffness matrix");
  }

  Mat6 compliance = Mat6::Zero();
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_dofs);
    rhs(free_dofs - 6 + j) = 1.0;
    const Eigen::VectorXd solution = solver.solve(rhs);
    compliance.col(j) = solution.tail<6>();
  }
  return ComplianceMatrix::from_values(compliance);
}

//! Canonical load set used for the cantilever case study: 1000 N along the
//! axis, 1 N across it, 1000 N*mm about each axis.
inline std::vector<LoadCase> beam_reference_loads() {
  return {
      LoadCase{Vec3(1000.0, 0.0, 0.0), Vec3::Zero(), "F_x"},
      LoadCase{Vec3(0.0, 1.0, 0.0), Vec3::Zero(), "F_y"},
      LoadCase{Vec3(0.0, 0.0, 1.0), Vec3::Zero(), "F_z"},
      LoadCase{Vec3::Zero(), Vec3(1000.0, 0.0, 0.0), "M_x"},
      LoadCase{Vec3::Zero(), Vec3(0.0, 1000.0, 0.0), "M_y"},
      LoadCase{Vec3::Zero(), Vec3(0.0, 0.0, 1000.0), "M_z"},
  };
}

struct BeamBenchmarkOptions {
  double outlier_percent = 0.10;
  SignificanceConfig significance{3.0};
  RigidMode transform_mode = RigidMode::Exact;
};

struct ZeroDetection {
  int true_zeros = 0;
  int detected_zeros = 0;   // true zeros pruned to zero
  int missed_zeros = 0;     // true zeros kept as significant
  int false_zeros = 0;      // true non-zeros pruned to zero
};

struct BeamBenchmarkReport {
  ComplianceMatrix analytic;
  ComplianceMatrix identified;    // raw least-squares result with half-widths
  ComplianceMatrix pruned;
  ComplianceMatrix symmetrized;
  std::optional<StiffnessResult> stiffness;
  std::string stiffness_error;
  double sigma_true = 0.0;
  double sigma_estimate = 0.0;
  double max_significant_rel_error = 0.0;  // symmetrized vs analytic, non-zero elements
  double min_significance_margin = 0.0;    // |k| / (multiplier * ci) over non-zero elements
  ZeroDetection zeros;
  double rotation_diag_alt_y = 0.0;  // L/3EI variants, for side-by-side comparison
  double rotation_diag_alt_z = 0.0;
  std::vector<std::size_t> removed_per_experiment;
};

//! Full identification pipeline against the analytic cantilever: simulate
//! each load on the grid, fit, filter the worst residuals, refit, pool the
//! noise estimate, assemble the compliance with confidence half-widths,
//! prune and symmetrize, and score the result against the closed form.
inline BeamBenchmarkReport beam_benchmark(const BeamSpec& spec, const GridSpec& grid,
                                          const NoiseSpec& noise,
                                          std::span<const LoadCase> loads,
                                          const BeamBenchmarkOptions& options = {}) {
  BeamBenchmarkReport report;
  report.analytic = beam_compliance_analytic(spec);
  report.sigma_true = noise.sigma;
  std::tie(report.rotation_diag_alt_y, report.rotation_diag_alt_z) =
      tip_rotation_compliance_alt(spec);

  std::vector<Experiment> experiments;
  std::vector<std::vector<Vec3>> residual_sets;
  experiments.reserve(loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) {
    NoiseSpec experiment_noise = noise;
    experiment_noise.seed = noise.seed + i;
    DisplacementField field = simulate_experiment(report.analytic, loads[i], grid,
                                                  experiment_noise, options.transform_mode);
    EstimatorOutput fit = estimate_lin(field);
    std::size_t removed = 0;
    if (options.outlier_percent > 0.0) {
      FilterResult filtered = filter_outliers(field, fit, options.outlier_percent);
      removed = filtered.removed_indices.size();
      field = std::move(filtered.field);
      fit = estimate_lin(field);
    }
    report.removed_per_experiment.push_back(removed);
    residual_sets.push_back(fit.residuals);
    experiments.push_back(Experiment{loads[i], fit.deflection,
                                     deflection_covariance(field, 1.0)});
  }

  report.sigma_estimate = estimate_sigma(residual_sets);
  report.identified = identify(experiments);
  report.identified.ci = scale_ci(experiments, report.sigma_estimate);
  report.pruned = prune(report.identified, options.significance);
  report.symmetrized = symmetrize(report.pruned);
  try {
    report.stiffness = to_stiffness(report.symmetrized);
  } catch (const Error& e) {
    report.stiffness_error = e.what();
  }

  double min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double truth = report.analytic.values(i, j);
      const bool kept = report.pruned.significant(i, j);
      if (truth == 0.0) {
        ++report.zeros.true_zeros;
        kept ? ++report.zeros.missed_zeros : ++report.zeros.detected_zeros;
        continue;
      }
      if (!kept) ++report.zeros.false_zeros;
      const double rel_error =
          std::abs(report.symmetrized.values(i, j) - truth) / std::abs(truth);
      report.max_significant_rel_error =
          std::max(report.max_significant_rel_error, rel_error);
      const double threshold =
          options.significance.multiplier * report.identified.ci(i, j);
      min_margin = std::min(min_margin, threshold > 0.0
                                            ? std::abs(report.identified.values(i, j)) / threshold
                                            : std::numeric_limits<double>::infinity());
    }
  }
  report.min_significance_margin = min_margin;
  return report;
}

}  // namespace fieldfit
