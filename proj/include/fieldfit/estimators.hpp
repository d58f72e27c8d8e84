#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fieldfit/core.hpp"

namespace fieldfit {

//! Rule used to read the small rotation angles out of an orthogonal matrix.
//! Plus takes the lower off-diagonal entries, Minus the negated upper ones,
//! Average the antisymmetric mean of both.
enum class SvdVariant { Plus, Minus, Average };

struct EstimatorOutput {
  RigidDeflection deflection;
  std::optional<Mat3> rotation;  // set by the SVD path only
  double residual_sum_sq = 0.0;  // mm^2
  std::vector<Vec3> residuals;   // per node, mm
};

inline Vec3 extract_rotation_angles(const Mat3& r, SvdVariant variant) {
  const Vec3 lower(r(2, 1), r(0, 2), r(1, 0));
  const Vec3 upper(-r(1, 2), -r(2, 0), -r(0, 1));
  switch (variant) {
    case SvdVariant::Plus:
      return lower;
    case SvdVariant::Minus:
      return upper;
    case SvdVariant::Average:
    default:
      return 0.5 * (lower + upper);
  }
}

//! Gram matrix of the rotation regressors, sum of |p|^2*I - p*p^T over
//! already-centered positions. Diagonal for centroid-symmetric fields.
inline Mat3 rotation_gram_matrix_centered(std::span<const Vec3> centered) {
  Mat3 gram = Mat3::Zero();
  for (const Vec3& p : centered) {
    gram += p.squaredNorm() * Mat3::Identity() - p * p.transpose();
  }
  return gram;
}

//! Same Gram matrix with centering applied internally.
inline Mat3 rotation_gram_matrix(const DisplacementField& field) {
  const Vec3 centroid = field.position_centroid();
  Mat3 gram = Mat3::Zero();
  for (const auto& node : field.nodes()) {
    const Vec3 p = node.position - centroid;
    gram += p.squaredNorm() * Mat3::Identity() - p * p.transpose();
  }
  return gram;
}

namespace detail {

constexpr double kDegenerateCondition = 1e12;

//! Rejects node geometries that cannot identify a rotation (collinear or
//! coincident points give a singular rotation Gram matrix).
inline void require_rotation_identifiable(const Mat3& gram) {
  Eigen::SelfAdjointEigenSolver<Mat3> eigen(gram);
  const double max_ev = eigen.eigenvalues().maxCoeff();
  const double min_ev = eigen.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || min_ev <= max_ev / kDegenerateCondition) {
    throw DegeneracyError(
        "rotation unidentifiable: node set is collinear or degenerate");
  }
}

}  // namespace detail

//! Rigid-deflection estimate via the orthogonal Procrustes solution.
//! Both point sets are centered, the rotation comes from the SVD of their
//! cross matrix (with a proper-rotation correction so det(R) = +1 even for
//! reflective noise configurations), the translation from the residual of
//! the means, and the angles from the requested extraction rule.
inline EstimatorOutput estimate_svd(const DisplacementField& field,
                                    SvdVariant variant) {
  const auto& nodes = field.nodes();
  const double n = static_cast<double>(nodes.size());

  Vec3 sum_p = Vec3::Zero();
  Vec3 sum_dp = Vec3::Zero();
  for (const auto& node : nodes) {
    sum_p += node.position;
    sum_dp += node.displacement;
  }
  const Vec3 mean_p = sum_p / n;
  const Vec3 mean_g = mean_p + sum_dp / n;

  Mat3 cross = Mat3::Zero();
  Mat3 gram = Mat3::Zero();
  for (const auto& node : nodes) {
    const Vec3 p_hat = node.position - mean_p;
    const Vec3 g_hat = node.position + node.displacement - mean_g;
    cross += p_hat * g_hat.transpose();
    gram += p_hat.squaredNorm() * Mat3::Identity() - p_hat * p_hat.transpose();
  }
  detail::require_rotation_identifiable(gram);

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const double det_vu = (v * u.transpose()).determinant();
  const Mat3 rotation =
      v * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, det_vu < 0.0 ? -1.0 : 1.0) *
      u.transpose();

  const Vec3 t = (sum_dp - (rotation - Mat3::Identity()) * sum_p) / n;

  EstimatorOutput out;
  out.deflection.translation = t;
  out.deflection.rotation = extract_rotation_angles(rotation, variant);
  out.rotation = rotation;
  out.residuals.reserve(nodes.size());
  for (const auto& node : nodes) {
    const Vec3 r =
        node.position + node.displacement - rotation * node.position - t;
    out.residuals.push_back(r);
    out.residual_sum_sq += r.squaredNorm();
  }
  return out;
}

//! Rigid-deflection estimate from the linearized model dp = t + phi x p.
//! Shifting the origin to the position centroid decouples the normal
//! equations: the translation is the mean displacement and the rotation
//! needs one 3x3 solve. The translation is mapped back to the field's
//! reference origin so both linear paths report the same quantities.
inline EstimatorOutput estimate_lin(const DisplacementField& field) {
  const auto& nodes = field.nodes();
  const double n = static_cast<double>(nodes.size());
  const Vec3 centroid = field.position_centroid();

  Vec3 mean_dp = Vec3::Zero();
  for (const auto& node : nodes) mean_dp += node.displacement;
  mean_dp /= n;

  Mat3 gram = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& node : nodes) {
    const Vec3 p_hat = node.position - centroid;
    gram += p_hat.squaredNorm() * Mat3::Identity() - p_hat * p_hat.transpose();
    rhs += p_hat.cross(node.displacement);
  }
  detail::require_rotation_identifiable(gram);

  const Vec3 phi = gram.ldlt().solve(rhs);
  const Vec3 t = mean_dp - phi.cross(centroid);

  EstimatorOutput out;
  out.deflection.translation = t;
  out.deflection.rotation = phi;
  out.residuals.reserve(nodes.size());
  for (const auto& node : nodes) {
    const Vec3 r = node.displacement - t - phi.cross(node.position);
    out.residuals.push_back(r);
    out.residual_sum_sq += r.squaredNorm();
  }
  return out;
}

//! Undecoupled 6x6 normal-equation solve at the field's own origin.
//! Kept as a cross-check for estimate_lin; both must agree on any valid
//! field.
inline EstimatorOutput estimate_lin_full(const DisplacementField& field) {
  const auto& nodes = field.nodes();
  const double n = static_cast<double>(nodes.size());

  Vec3 sum_p = Vec3::Zero();
  Vec3 sum_dp = Vec3::Zero();
  Mat3 gram = Mat3::Zero();
  Vec3 cross_rhs = Vec3::Zero();
  for (const auto& node : nodes) {
    sum_p += node.position;
    sum_dp += node.displacement;
    gram += node.position.squaredNorm() * Mat3::Identity() -
            node.position * node.position.transpose();
    cross_rhs += node.position.cross(node.displacement);
  }

  Mat3 centered_gram = Mat3::Zero();
  const Vec3 centroid = sum_p / n;
  for (const auto& node : nodes) {
    const Vec3 p_hat = node.position - centroid;
    centered_gram +=
        p_hat.squaredNorm() * Mat3::Identity() - p_hat * p_hat.transpose();
  }
  detail::require_rotation_identifiable(centered_gram);

  Mat6 normal = Mat6::Zero();
  normal.topLeftCorner<3, 3>() = n * Mat3::Identity();
  normal.topRightCorner<3, 3>() = skew_neg(sum_p);
  normal.bottomLeftCorner<3, 3>() = skew_neg(sum_p).transpose();
  normal.bottomRightCorner<3, 3>() = gram;

  Vec6 rhs;
  rhs << sum_dp, cross_rhs;

  const Vec6 solution = normal.ldlt().solve(rhs);

  EstimatorOutput out;
  out.deflection.translation = solution.head<3>();
  out.deflection.rotation = solution.tail<3>();
  for (const auto& node : nodes) {
    const Vec3 r = node.displacement - out.deflection.translation -
                   out.deflection.rotation.cross(node.position);
    out.residuals.push_back(r);
    out.residual_sum_sq += r.squaredNorm();
  }
  return out;
}

namespace detail {

inline int exact_cube_root(int n) {
  const int root = static_cast<int>(std::llround(std::cbrt(static_cast<double>(n))));
  for (int candidate = root - 1; candidate <= root + 1; ++candidate) {
    if (candidate > 0 && candidate * candidate * candidate == n) return candidate;
  }
  return 0;
}

}  // namespace detail

//! Closed-form diagonal of the rotation Gram matrix for a uniform cubic
//! grid of side `extent_mm` with `node_count` nodes. Agrees with direct
//! summation; see the _alt variant for the inverted-ratio form.
inline double cubic_grid_gram_diagonal(double extent_mm, int node_count) {
  const int root = detail::exact_cube_root(node_count);
  if (root < 2) {
    throw ValidationError("cubic grid closed form needs a perfect cube >= 8, got " +
                          std::to_string(node_count));
  }
  const double m = static_cast<double>(root);
  return extent_mm * extent_mm * static_cast<double>(node_count) * (m + 1.0) /
         (6.0 * (m - 1.0));
}

//! Alternate closed form with the (m-1)/(m+1) ratio inverted. It disagrees
//! with direct summation and is kept only for side-by-side comparison.
inline double cubic_grid_gram_diagonal_alt(double extent_mm, int node_count) {
  const int root = detail::exact_cube_root(node_count);
  if (root < 2) {
    throw ValidationError("cubic grid closed form needs a perfect cube >= 8, got " +
                          std::to_string(node_count));
  }
  const double m = static_cast<double>(root);
  return extent_mm * extent_mm * static_cast<double>(node_count) * (m - 1.0) /
         (6.0 * (m + 1.0));
}

}  // namespace fieldfit
