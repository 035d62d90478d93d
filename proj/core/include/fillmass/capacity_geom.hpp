// SPDX-License-Identifier: Apache-2.0
//
// Container capacity from two calibrated silhouettes: mask centroids are
// triangulated into a 3D centroid, a stack of horizontal rings around a
// vertical axis through it is shrunk until every ring projects inside both
// masks, and the surviving rings give C = r_mean^2 * h * pi.
#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fillmass/media_io.hpp"

namespace fillmass::geom {

struct Centroid2D {
  double u = 0;
  double v = 0;
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  ///< unit length
};

struct FitConfig {
  double r_max = 0.15;         ///< m, initial ring radius
  double half_height = 0.15;   ///< m, rings span centroid_z +- half_height
  double ring_spacing = 0.005; ///< m
  double shrink_step = 0.002;  ///< m, radius decrement per iteration
  double r_min = 0.005;        ///< m, rings that would go below this are empty
  int n_angles = 72;           ///< samples per ring

  void validate() const;
  int ring_count() const;
};

/// Vertical (+z) axis through axis_point; ring j sits at ring_z[j].
struct CylinderModel {
  Eigen::Vector3d axis_point = Eigen::Vector3d::Zero();
  std::vector<double> ring_z;
  std::vector<double> ring_r;  ///< 0 marks an empty ring
  double ring_spacing = 0;

  std::size_t nonzero_rings() const;
  bool empty() const { return nonzero_rings() == 0; }
};

struct CylinderDimensions {
  double r_bar = 0;        ///< m
  double height = 0;       ///< m
  double capacity_ml = 0;
};

struct CapacityEstimate {
  double capacity_ml = 0;
  bool used_prior = false;
  double r_bar = 0;
  double height = 0;
  int frames_used = 0;
};

/// Mean foreground pixel centre (column + 0.5, row + 0.5); nullopt when empty.
std::optional<Centroid2D> mask_centroid(const io::MaskImage& mask);

/// World-frame ray through a pixel: origin = -R^T t, direction = R^T normalize(K^-1 [u v 1]).
Ray backproject_ray(const io::CameraCalibration& calib, const Centroid2D& pixel);

/// Projects a world point to pixel coordinates; nullopt when it is not in front
/// of the camera (camera-frame z <= 0).
std::optional<Centroid2D> project(const io::CameraCalibration& calib, const Eigen::Vector3d& X);

/// Minimum angle between rays accepted by triangulate_midpoint.
inline constexpr double kMinTriangulationAngleDeg = 0.5;

/// Midpoint of the common perpendicular. Throws DegenerateGeometryError on
/// rays closer than 0.5 degrees to parallel.
Eigen::Vector3d triangulate_midpoint(const Ray& a, const Ray& b);

struct RingTrace {
  std::vector<double> tried;  ///< radii in the order tested
  double accepted = 0;        ///< 0 when no radius was accepted
};

/// Fits a vertical cylinder model around `centroid`. `trace`, when given,
/// receives the radius sequence examined for each ring.
CylinderModel fit_cylinder(const std::array<const io::MaskImage*, 2>& masks,
                           const std::array<const io::CameraCalibration*, 2>& calibs,
                           const Eigen::Vector3d& centroid, const FitConfig& cfg = {},
                           std::vector<RingTrace>* trace = nullptr);

/// Mean non-zero radius, non-zero ring count times spacing, and the cylinder
/// volume in millilitres. nullopt for a model without rings.
std::optional<CylinderDimensions> capacity_from_cylinder(const CylinderModel& model);

struct FrameSelection {
  int first = 0;
  int second = 0;
};

/// The first frame and the 20th from the end (clamped at 0).
FrameSelection select_frames(int num_frames);

/// Centroid, triangulation, fit and volume for one frame; nullopt on any
/// detection failure.
std::optional<CylinderDimensions> estimate_frame(
    const std::array<const io::MaskImage*, 2>& masks,
    const std::array<const io::CameraCalibration*, 2>& calibs, const FitConfig& cfg = {});

struct FramePair {
  io::MaskImage camera1;
  io::MaskImage camera2;
};

/// Averages the frames that produced a detection; falls back to `prior_ml`
/// only when none did. Throws DomainError when prior_ml <= 0.
CapacityEstimate estimate_capacity_sequence(const std::vector<FramePair>& frames,
                                            const std::array<io::CameraCalibration, 2>& calibs,
                                            double prior_ml, const FitConfig& cfg = {});

}  // namespace fillmass::geom
