#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fieldfit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Units are fixed across the library: mm for lengths/translations, rad for
// angles, N for forces, N*mm for moments. Degrees appear only at I/O
// boundaries.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Rejected input: bad shapes, counts, ranges, malformed files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

//! Numerically unidentifiable problem: rank deficiency, singular or
//! indefinite matrices, collinear node sets.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

//! Filesystem failures (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

//! Cross-product matrix [p]x with skew(p) * v = p x v.
inline Mat3 skew(const Vec3& p) {
  Mat3 m;
  m << 0.0, -p.z(), p.y(),
       p.z(), 0.0, -p.x(),
      -p.y(), p.x(), 0.0;
  return m;
}

//! Transposed cross-product matrix: skew_neg(p) * v = v x p.
//! This is the per-node regressor of the linearized rigid model.
inline Mat3 skew_neg(const Vec3& p) {
  Mat3 m;
  m << 0.0, p.z(), -p.y(),
      -p.z(), 0.0, p.x(),
       p.y(), -p.x(), 0.0;
  return m;
}

//! First-order rotation matrix I + [phi]x, valid for small angles.
inline Mat3 small_rotation(const Vec3& phi) {
  return Mat3::Identity() + skew(phi);
}

//! Exact rotation by |phi| radians about the axis phi/|phi|
//! (rotation-vector convention). Series fallback keeps the result proper
//! orthogonal down to zero angle.
inline Mat3 exact_rotation(const Vec3& phi) {
  const double theta_sq = phi.squaredNorm();
  double a, b;  // R = I + a*[phi]x + b*[phi]x^2
  if (theta_sq < 1e-12) {
    a = 1.0 - theta_sq / 6.0;
    b = 0.5 - theta_sq / 24.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta_sq;
  }
  const Mat3 px = skew(phi);
  return Mat3::Identity() + a * px + b * px * px;
}

//! Product of elementary rotations Rx(phi_x) * Ry(phi_y) * Rz(phi_z).
//! For single-axis inputs this coincides with exact_rotation.
inline Mat3 euler_xyz_rotation(const Vec3& phi) {
  const double cx = std::cos(phi.x()), sx = std::sin(phi.x());
  const double cy = std::cos(phi.y()), sy = std::sin(phi.y());
  const double cz = std::cos(phi.z()), sz = std::sin(phi.z());
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rx * ry * rz;
}

//! 6-dof rigid deflection of the reference frame: translation (mm) and
//! rotation vector (rad).
struct RigidDeflection {
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << translation, rotation;
    return v;
  }

  //! The linearized field model degrades above roughly 0.02 rad; callers
  //! surface this as a warning, never as an error.
  bool within_linear_range() const { return rotation.norm() < 0.02; }
};

struct FieldNode {
  Vec3 position = Vec3::Zero();      // mm, relative to the reference point
  Vec3 displacement = Vec3::Zero();  // mm
};

//! Node displacement field around a reference point. Construction shifts
//! all positions so the reference point becomes the origin; the stored
//! reference point is therefore always (0,0,0).
class DisplacementField {
 public:
  DisplacementField(std::vector<FieldNode> nodes, const Vec3& reference_point)
      : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) {
      throw ValidationError("displacement field needs at least 3 nodes, got " +
                            std::to_string(nodes_.size()));
    }
    for (auto& node : nodes_) {
      node.position -= reference_point;
      if (!node.position.allFinite() || !node.displacement.allFinite()) {
        throw ValidationError("displacement field contains non-finite values");
      }
    }
  }

  const std::vector<FieldNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  //! Always zero; kept so file round-trips stay explicit about the frame.
  const Vec3& reference_point() const { return reference_point_; }

  Vec3 position_centroid() const {
    Vec3 sum = Vec3::Zero();
    for (const auto& node : nodes_) sum += node.position;
    return sum / static_cast<double>(nodes_.size());
  }

 private:
  std::vector<FieldNode> nodes_;
  Vec3 reference_point_ = Vec3::Zero();
};

}  // namespace fieldfit
