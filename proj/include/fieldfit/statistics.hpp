#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fieldfit/core.hpp"
#include "fieldfit/estimators.hpp"

namespace fieldfit {

//! Pooled residual-based noise estimate. Each experiment contributes n
//! three-component residuals fitted by a 6-parameter model, so the pooled
//! sum of squares divides by (3n - 6) * m.
inline double estimate_sigma(const std::vector<std::vector<Vec3>>& residual_sets) {
  if (residual_sets.empty()) {
    throw ValidationError("sigma estimation needs at least one experiment");
  }
  const std::size_t n = residual_sets.front().size();
  if (n <= 2) {
    throw DegeneracyError("sigma undefined for n <= 2 nodes");
  }
  double sum_sq = 0.0;
  for (const auto& residuals : residual_sets) {
    if (residuals.size() != n) {
      throw ValidationError("sigma estimation needs equal node counts across experiments");
    }
    for (const Vec3& r : residuals) sum_sq += r.squaredNorm();
  }
  const double dof = (3.0 * static_cast<double>(n) - 6.0) *
                     static_cast<double>(residual_sets.size());
  return std::sqrt(sum_sq / dof);
}

//! Covariances of the fitted deflection for i.i.d. per-component noise of
//! standard deviation sigma: sigma^2/n * I for the translation and
//! sigma^2 * G^-1 for the rotation, G the rotation Gram matrix.
struct DeflectionCovariance {
  Mat3 translation = Mat3::Zero();  // mm^2
  Mat3 rotation = Mat3::Zero();     // rad^2
};

inline DeflectionCovariance deflection_covariance(const DisplacementField& field,
                                                  double sigma) {
  if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  const Mat3 gram = rotation_gram_matrix(field);
  detail::require_rotation_identifiable(gram);
  DeflectionCovariance cov;
  const double var = sigma * sigma;
  cov.translation = var / static_cast<double>(field.size()) * Mat3::Identity();
  cov.rotation = var * gram.inverse();
  return cov;
}

struct FilterResult {
  DisplacementField field;
  std::vector<std::size_t> removed_indices;  // into the input field, ascending
};

//! Residual filtering: nodes are ranked by the largest absolute residual
//! component and the top ceil(percent * n) are dropped. A node is punished
//! for any one bad component, which matches ranking by the per-node max.
//! Re-estimation on the reduced field is the caller's job.
inline FilterResult filter_outliers(const DisplacementField& field,
                                    const EstimatorOutput& fit,
                                    double percent = 0.10) {
  if (percent < 0.0 || percent >= 0.5) {
    throw ValidationError("outlier percentage must be in [0, 0.5)");
  }
  if (fit.residuals.size() != field.size()) {
    throw ValidationError("fit residual count does not match the field");
  }
  const std::size_t n = field.size();
  const auto remove_count = static_cast<std::size_t>(
      std::ceil(percent * static_cast<double>(n)));
  if (n - remove_count < 6) {
    throw ValidationError("outlier removal would leave fewer than 6 nodes");
  }
  if (remove_count == 0) {
    return FilterResult{field, {}};
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fit.residuals[a].cwiseAbs().maxCoeff() >
           fit.residuals[b].cwiseAbs().maxCoeff();
  });
  std::vector<std::size_t> removed(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(remove_count));
  std::sort(removed.begin(), removed.end());

  std::vector<FieldNode> kept;
  kept.reserve(n - remove_count);
  std::size_t next_removed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next_removed < removed.size() && removed[next_removed] == i) {
      ++next_removed;
      continue;
    }
    kept.push_back(field.nodes()[i]);
  }
  return FilterResult{DisplacementField(std::move(kept), Vec3::Zero()),
                      std::move(removed)};
}

//! Interval rule for zero detection: a value whose k-sigma interval
//! contains zero is treated as zero. k between 3 and 5 is customary.
struct SignificanceConfig {
  double multiplier = 3.0;
};

//! True when the value is significant (its k-sigma interval excludes zero).
inline bool significance_test(double value, double std_dev,
                              const SignificanceConfig& config = {}) {
  if (std_dev < 0.0) throw ValidationError("standard deviation must be non-negative");
  if (config.multiplier <= 0.0) throw ValidationError("significance multiplier must be positive");
  return std::abs(value) > config.multiplier * std_dev;
}

}  // namespace fieldfit
