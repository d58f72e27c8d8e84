#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fieldfit/core.hpp"
#include "fieldfit/statistics.hpp"

namespace fieldfit {

//! Applied wrench for one experiment: force in N, moment in N*mm.
struct LoadCase {
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
  std::string label;

  Vec6 wrench() const {
    Vec6 w;
    w << force, moment;
    return w;
  }

  void validate() const {
    if (!force.allFinite() || !moment.allFinite()) {
      throw ValidationError("load case contains non-finite values");
    }
    if (force.isZero(0.0) && moment.isZero(0.0)) {
      throw ValidationError("load case must apply a non-zero wrench");
    }
  }
};

using BoolMat6 = Eigen::Matrix<bool, 6, 6>;

//! 6x6 compliance matrix mapping a wrench to a rigid deflection, with
//! one-sigma half-widths and a significance mask per element. Units are
//! blockwise mm/N, mm/(N*mm), rad/N, rad/(N*mm).
struct ComplianceMatrix {
  Mat6 values = Mat6::Zero();
  Mat6 ci = Mat6::Zero();  // one-sigma half-widths, scaled by the
                           // significance multiplier when testing
  BoolMat6 significant = BoolMat6::Constant(true);

  static ComplianceMatrix from_values(const Mat6& k) {
    ComplianceMatrix out;
    out.values = k;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) out.significant(i, j) = k(i, j) != 0.0;
    return out;
  }

  RigidDeflection deflect(const LoadCase& load) const {
    const Vec6 d = values * load.wrench();
    return RigidDeflection{d.head<3>(), d.tail<3>()};
  }
};

//! One identified experiment. The covariance shape is stored per unit
//! noise variance (sigma = 1); scale_ci applies the pooled sigma.
struct Experiment {
  LoadCase load;
  RigidDeflection deflection;
  DeflectionCovariance unit_covariance;
};

namespace detail {

inline Eigen::Matrix<double, 6, Eigen::Dynamic> wrench_matrix(
    std::span<const Experiment> experiments) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> w(6, experiments.size());
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    experiments[j].load.validate();
    w.col(static_cast<Eigen::Index>(j)) = experiments[j].load.wrench();
  }
  return w;
}

inline void require_rank_six(const Eigen::Matrix<double, 6, Eigen::Dynamic>& w) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(sv.size() - 1) <= sv(0) * 1e-12) {
    throw DegeneracyError("load set does not span all six wrench directions");
  }
}

//! Right pseudoinverse W^T (W W^T)^-1 of a full-row-rank 6 x m matrix.
inline Eigen::MatrixXd right_pseudoinverse(
    const Eigen::Matrix<double, 6, Eigen::Dynamic>& w) {
  const Mat6 normal = w * w.transpose();
  return normal.ldlt().solve(w).transpose();
}

}  // namespace detail

//! Least-squares compliance from m >= 6 experiments: each experiment
//! contributes one deflection column, and the wrench matrix is inverted
//! through its pseudoinverse. With the six canonical one-component loads
//! this reduces to dividing each deflection column by its load magnitude.
inline ComplianceMatrix identify(std::span<const Experiment> experiments) {
  if (experiments.size() < 6) {
    throw ValidationError("compliance identification needs at least 6 experiments, got " +
                          std::to_string(experiments.size()));
  }
  const auto w = detail::wrench_matrix(experiments);
  detail::require_rank_six(w);

  Eigen::Matrix<double, 6, Eigen::Dynamic> deflections(6, experiments.size());
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    deflections.col(static_cast<Eigen::Index>(j)) = experiments[j].deflection.stacked();
  }
  ComplianceMatrix out;
  out.values = deflections * detail::right_pseudoinverse(w);
  return out;
}

//! One-sigma half-widths of the identified elements for noise level sigma.
//! Per-experiment deflection variances are taken from the stored unit
//! covariances and propagated through the rows of the pseudoinverse; for
//! canonical loads this is the deflection standard deviation divided by
//! the load magnitude.
inline Mat6 scale_ci(std::span<const Experiment> experiments, double sigma) {
  if (experiments.size() < 6) {
    throw ValidationError("confidence scaling needs at least 6 experiments");
  }
  if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  const auto w = detail::wrench_matrix(experiments);
  detail::require_rank_six(w);
  const Eigen::MatrixXd pinv = detail::right_pseudoinverse(w);  // m x 6

  Mat6 half_widths = Mat6::Zero();
  for (int i = 0; i < 6; ++i) {
    for (int s = 0; s < 6; ++s) {
      double var = 0.0;
      for (std::size_t j = 0; j < experiments.size(); ++j) {
        const auto& cov = experiments[j].unit_covariance;
        const double unit_var = i < 3 ? cov.translation(i, i) : cov.rotation(i - 3, i - 3);
        const double weight = pinv(static_cast<Eigen::Index>(j), s);
        var += unit_var * weight * weight;
      }
      half_widths(i, s) = sigma * std::sqrt(var);
    }
  }
  return half_widths;
}

//! Zeroes every element whose k-sigma interval includes zero and updates
//! the significance mask accordingly.
inline ComplianceMatrix prune(const ComplianceMatrix& matrix,
                              const SignificanceConfig& config = {}) {
  ComplianceMatrix out = matrix;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (significance_test(matrix.values(i, j), matrix.ci(i, j), config)) {
        out.significant(i, j) = true;
      } else {
        out.values(i, j) = 0.0;
        out.significant(i, j) = false;
      }
    }
  }
  return out;
}

//! Averages the matrix with its transpose. Half-widths are averaged the
//! same way (keeping the operation idempotent) and an element stays
//! significant if either of the mirrored pair was.
inline ComplianceMatrix symmetrize(const ComplianceMatrix& matrix) {
  ComplianceMatrix out = matrix;
  out.values = 0.5 * (matrix.values + matrix.values.transpose());
  out.ci = 0.5 * (matrix.ci + matrix.ci.transpose());
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      out.significant(i, j) = matrix.significant(i, j) || matrix.significant(j, i);
  return out;
}

struct StiffnessResult {
  Mat6 matrix = Mat6::Zero();
  double min_eigenvalue = 0.0;
};

//! Inverts a symmetric positive-definite compliance matrix. Asymmetric
//! input is rejected (symmetrize first); indefinite input is rejected as
//! non-physical.
inline StiffnessResult to_stiffness(const ComplianceMatrix& matrix) {
  const Mat6& k = matrix.values;
  if (!k.allFinite()) throw ValidationError("compliance matrix has non-finite entries");
  const double scale = k.cwiseAbs().maxCoeff();
  const double asymmetry = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (scale <= 0.0 || asymmetry > 1e-9 * scale) {
    throw ValidationError("compliance matrix must be symmetric; run symmetrize first");
  }

  Eigen::SelfAdjointEigenSolver<Mat6> eigen(0.5 * (k + k.transpose()));
  const auto& ev = eigen.eigenvalues();
  if (ev.minCoeff() <= 0.0) {
    throw DegeneracyError("compliance matrix is not positive definite");
  }
  StiffnessResult out;
  out.matrix = eigen.eigenvectors() * ev.cwiseInverse().asDiagonal() *
               eigen.eigenvectors().transpose();
  out.min_eigenvalue = 1.0 / ev.maxCoeff();
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

inline double round_to_one_digit(double x) {
  const double decade = std::pow(10.0, std::floor(std::log10(x)));
  return std::round(x / decade) * decade;
}

}  // namespace detail

//! Picks one canonical load per wrench direction so that every coupled
//! deflection of an approximately known compliance lands inside the target
//! ranges. The amplitude is the geometric midpoint of the feasible
//! interval, rounded to one significant figure.
inline std::vector<LoadCase> recommend_loads(const ComplianceMatrix& approx,
                                             const Range& translation_mm,
                                             const Range& rotation_deg) {
  if (!(translation_mm.lo > 0.0 && translation_mm.hi >= translation_mm.lo) ||
      !(rotation_deg.lo > 0.0 && rotation_deg.hi >= rotation_deg.lo)) {
    throw ValidationError("deflection target ranges must be positive and ordered");
  }
  const Range rotation_rad{deg_to_rad(rotation_deg.lo), deg_to_rad(rotation_deg.hi)};

  static const char* kLabels[6] = {"F_x", "F_y", "F_z", "M_x", "M_y", "M_z"};
  std::vector<LoadCase> loads;
  loads.reserve(6);
  for (int j = 0; j < 6; ++j) {
    const double diag = approx.values(j, j);
    if (!std::isfinite(diag) || diag <= 0.0) {
      throw ValidationError(std::string("cannot recommend a load for ") + kLabels[j] +
                            ": diagonal compliance must be finite and positive");
    }
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 6; ++i) {
      const double gain = std::abs(approx.values(i, j));
      if (!std::isfinite(gain)) {
        throw ValidationError(std::string("cannot recommend a load for ") + kLabels[j] +
                              ": non-finite compliance entry");
      }
      if (gain == 0.0) continue;
      const Range& target = i < 3 ? translation_mm : rotation_rad;
      lo = std::max(lo, target.lo / gain);
      hi = std::min(hi, target.hi / gain);
    }
    if (!(lo > 0.0) || lo > hi) {
      std::ostringstream msg;
      msg << "no " << kLabels[j] << " amplitude places all coupled deflections "
          << "inside the target ranges (feasible interval [" << lo << ", " << hi << "])";
      throw ValidationError(msg.str());
    }
    const double amplitude = detail::round_to_one_digit(std::sqrt(lo * hi));
    LoadCase load;
    load.label = kLabels[j];
    if (j < 3) {
      load.force = amplitude * Vec3::Unit(j);
    } else {
      load.moment = amplitude * Vec3::Unit(j - 3);
    }
    loads.push_back(std::move(load));
  }
  return loads;
}

}  // namespace fieldfit
