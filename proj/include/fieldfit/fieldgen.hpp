#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldfit/compliance.hpp"
#include "fieldfit/core.hpp"

namespace fieldfit {

enum class GridKind { Cubic, Planar };
enum class Axis3 { X, Y, Z };

//! Uniform synthetic node grid: a cube or a square of side `extent` with
//! mesh step `step`, centered on the reference point. extent/step must be
//! a whole number of cells.
struct GridSpec {
  GridKind kind = GridKind::Cubic;
  double extent = 10.0;        // mm
  double step = 1.0;           // mm
  Axis3 normal_axis = Axis3::X;  // planar grids only
  Vec3 center = Vec3::Zero();  // mm

  int cells_per_axis() const {
    if (!(extent > 0.0) || !(step > 0.0)) {
      throw ValidationError("grid extent and step must be positive");
    }
    const double ratio = extent / step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
      throw ValidationError("grid extent must be a whole multiple of the mesh step");
    }
    return static_cast<int>(rounded);
  }

  std::size_t node_count() const {
    const std::size_t per_axis = static_cast<std::size_t>(cells_per_axis()) + 1;
    return kind == GridKind::Cubic ? per_axis * per_axis * per_axis
                                   : per_axis * per_axis;
  }
};

//! Per-component Gaussian noise level and the seed that makes it
//! reproducible.
struct NoiseSpec {
  double sigma = 0.0;  // mm
  std::uint64_t seed = 0;
};

//! Noise levels observed for typical FEA mesh settings, by preset name.
inline double noise_preset_sigma(std::string_view name) {
  if (name == "linear-2mm") return 4.59e-5;
  if (name == "linear-1mm") return 3.87e-5;
  if (name == "parabolic-3mm") return 5.26e-5;
  if (name == "parabolic-2mm") return 5.60e-5;
  throw ValidationError("unknown noise preset: " + std::string(name));
}

//! Standard-normal sampler on top of a 64-bit Mersenne Twister. Box-Muller
//! with an explicit bit-to-double mapping so identical seeds give identical
//! streams on every platform.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = unit_open_closed();
    const double u2 = unit_open_closed();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  double unit_open_closed() {
    // 53 random bits mapped to (0, 1]; never zero, so log() stays finite.
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//! Builds the grid with zero displacements. Node positions are expressed
//! relative to the grid center, which becomes the field's reference point.
inline DisplacementField make_grid(const GridSpec& spec) {
  const int cells = spec.cells_per_axis();
  const int per_axis = cells + 1;
  const double half = 0.5 * spec.extent;

  std::vector<FieldNode> nodes;
  nodes.reserve(spec.node_count());
  auto coordinate = [&](int index) { return -half + spec.step * index; };

  if (spec.kind == GridKind::Cubic) {
    for (int ix = 0; ix < per_axis; ++ix)
      for (int iy = 0; iy < per_axis; ++iy)
        for (int iz = 0; iz < per_axis; ++iz)
          nodes.push_back({spec.center + Vec3(coordinate(ix), coordinate(iy), coordinate(iz)),
                           Vec3::Zero()});
  } else {
    for (int ia = 0; ia < per_axis; ++ia) {
      for (int ib = 0; ib < per_axis; ++ib) {
        Vec3 p = Vec3::Zero();
        switch (spec.normal_axis) {
          case Axis3::X:
            p = Vec3(0.0, coordinate(ia), coordinate(ib));
            break;
          case Axis3::Y:
            p = Vec3(coordinate(ia), 0.0, coordinate(ib));
            break;
          case Axis3::Z:
            p = Vec3(coordinate(ia), coordinate(ib), 0.0);
            break;
        }
        nodes.push_back({spec.center + p, Vec3::Zero()});
      }
    }
  }
  return DisplacementField(std::move(nodes), spec.center);
}

//! How the ground-truth rotation matrix is built when displacing a field.
enum class RigidMode {
  Exact,       // rotation-vector (axis-angle) rotation
  Linearized,  // first-order I + [phi]x
  EulerXyz,    // product Rx * Ry * Rz of elementary rotations
};

//! Displaces every node by the rigid motion p -> R p + t; positions are
//! left untouched, only displacements change.
inline DisplacementField apply_rigid(const DisplacementField& field, const Vec3& t,
                                     const Mat3& rotation) {
  std::vector<FieldNode> nodes = field.nodes();
  for (auto& node : nodes) {
    node.displacement = rotation * node.position + t - node.position;
  }
  return DisplacementField(std::move(nodes), Vec3::Zero());
}

inline DisplacementField apply_rigid(const DisplacementField& field, const Vec3& t,
                                     const Vec3& phi, RigidMode mode = RigidMode::Exact) {
  Mat3 rotation;
  switch (mode) {
    case RigidMode::Linearized:
      rotation = small_rotation(phi);
      break;
    case RigidMode::EulerXyz:
      rotation = euler_xyz_rotation(phi);
      break;
    case RigidMode::Exact:
    default:
      rotation = exact_rotation(phi);
      break;
  }
  return apply_rigid(field, t, rotation);
}

//! Adds i.i.d. zero-mean Gaussian noise to every displacement component.
inline DisplacementField add_noise(const DisplacementField& field, const NoiseSpec& noise) {
  if (noise.sigma < 0.0) throw ValidationError("noise sigma must be non-negative");
  if (noise.sigma == 0.0) return field;
  GaussianSampler sampler(noise.seed);
  std::vector<FieldNode> nodes = field.nodes();
  for (auto& node : nodes) {
    node.displacement += noise.sigma * Vec3(sampler(), sampler(), sampler());
  }
  return DisplacementField(std::move(nodes), Vec3::Zero());
}

struct OutlierInjection {
  DisplacementField field;
  std::vector<std::size_t> indices;  // perturbed nodes, ascending
};

//! Perturbs one displacement component of floor(fraction * n) randomly
//! chosen nodes by +/- magnitude * sigma. Used to exercise the residual
//! filter against known contamination.
inline OutlierInjection inject_outliers(const DisplacementField& field, double fraction,
                                        double magnitude, double sigma,
                                        std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 0.5) {
    throw ValidationError("outlier fraction must be in [0, 0.5)");
  }
  const auto count = static_cast<std::size_t>(fraction * static_cast<double>(field.size()));
  if (count == 0) return OutlierInjection{field, {}};

  std::mt19937_64 engine(seed);
  std::vector<std::size_t> all(field.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Fisher-Yates prefix: the first `count` entries are the chosen nodes.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(engine() % (all.size() - i));
    std::swap(all[i], all[j]);
  }
  std::vector<std::size_t> chosen(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());

  std::vector<FieldNode> nodes = field.nodes();
  for (const std::size_t index : chosen) {
    const auto component = static_cast<Eigen::Index>(engine() % 3);
    const double sign = (engine() & 1u) ? 1.0 : -1.0;
    nodes[index].displacement(component) += sign * magnitude * sigma;
  }
  return OutlierInjection{DisplacementField(std::move(nodes), Vec3::Zero()),
                          std::move(chosen)};
}

//! End-to-end stand-in for one FEA run: the true compliance turns the load
//! into a rigid deflection, the grid is displaced accordingly, and noise is
//! added on top.
inline DisplacementField simulate_experiment(const ComplianceMatrix& true_compliance,
                                             const LoadCase& load, const GridSpec& grid,
                                             const NoiseSpec& noise,
                                             RigidMode mode = RigidMode::Exact) {
  if (!true_compliance.values.allFinite()) {
    throw ValidationError("true compliance matrix has non-finite entries");
  }
  const RigidDeflection deflection = true_compliance.deflect(load);
  return add_noise(apply_rigid(make_grid(grid), deflection.translation,
                               deflection.rotation, mode),
                   noise);
}

}  // namespace fieldfit
