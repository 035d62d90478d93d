// SPDX-License-Identifier: Apache-2.0
#include "fillmass/capacity_geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "fillmass/errors.hpp"

namespace fillmass::geom {

void FitConfig::validate() const {
  if (!(r_max > 0 && half_height > 0 && ring_spacing > 0 && shrink_step > 0 && r_min > 0) ||
      n_angles < 1) {
    throw DomainError("fit configuration values must be positive");
  }
  if (!(r_min < r_max)) throw DomainError("r_min must be below r_max");
}

int FitConfig::ring_count() const {
  return static_cast<int>(std::lround(2.0 * half_height / ring_spacing)) + 1;
}

std::size_t CylinderModel::nonzero_rings() const {
  return static_cast<std::size_t>(
      std::count_if(ring_r.begin(), ring_r.end(), [](double r) { return r > 0; }));
}

std::optional<Centroid2D> mask_centroid(const io::MaskImage& mask) {
  double su = 0, sv = 0;
  std::size_t n = 0;
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      if (mask.at(col, row)) {
        su += col + 0.5;
        sv += row + 0.5;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return Centroid2D{su / static_cast<double>(n), sv / static_cast<double>(n)};
}

Ray backproject_ray(const io::CameraCalibration& calib, const Centroid2D& pixel) {
  const Eigen::Vector3d cam((pixel.u - calib.cx) / calib.fx, (pixel.v - calib.cy) / calib.fy, 1.0);
  return {calib.center(), calib.R.transpose() * cam.normalized()};
}

std::optional<Centroid2D> project(const io::CameraCalibration& calib, const Eigen::Vector3d& X) {
  const Eigen::Vector3d p = calib.R * X + calib.t;
  if (!(p.z() > 0)) return std::nullopt;
  return Centroid2D{calib.fx * p.x() / p.z() + calib.cx, calib.fy * p.y() / p.z() + calib.cy};
}

Eigen::Vector3d triangulate_midpoint(const Ray& a, const Ray& b) {
  const Eigen::Vector3d d1 = a.direction.normalized();
  const Eigen::Vector3d d2 = b.direction.normalized();
  const double cos_angle = d1.dot(d2);
  const double min_angle = kMinTriangulationAngleDeg * std::numbers::pi / 180.0;
  if (std::abs(cos_angle) > std::cos(min_angle)) {
    throw DegenerateGeometryError("rays are too close to parallel for triangulation");
  }
  const Eigen::Vector3d w = a.origin - b.origin;
  const double d = d1.dot(w);
  const double e = d2.dot(w);
  const double denom = 1.0 - cos_angle * cos_angle;
  const double s = (cos_angle * e - d) / denom;
  const double t = (e - cos_angle * d) / denom;
  return 0.5 * ((a.origin + s * d1) + (b.origin + t * d2));
}

namespace {

bool ring_inside(const std::array<const io::MaskImage*, 2>& masks,
                 const std::array<const io::CameraCalibration*, 2>& calibs,
                 const Eigen::Vector3d& center, double radius, int n_angles) {
  for (int k = 0; k < n_angles; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n_angles;
    const Eigen::Vector3d p(center.x() + radius * std::cos(theta),
                            center.y() + radius * std::sin(theta), center.z());
    for (int c = 0; c < 2; ++c) {
      const auto px = project(*calibs[c], p);
      if (!px || !masks[c]->contains_foreground(px->u, px->v)) return false;
    }
  }
  return true;
}

}  // namespace

CylinderModel fit_cylinder(const std::array<const io::MaskImage*, 2>& masks,
                           const std::array<const io::CameraCalibration*, 2>& calibs,
                           const Eigen::Vector3d& centroid, const FitConfig& cfg,
                           std::vector<RingTrace>* trace) {
  cfg.validate();
  if (masks[0]->empty() || masks[1]->empty()) {
    throw DomainError("fit_cylinder requires non-empty masks in both views");
  }
  const int rings = cfg.ring_count();
  const int mid = (rings - 1) / 2;
  CylinderModel model;
  model.axis_point = centroid;
  model.ring_spacing = cfg.ring_spacing;
  model.ring_z.resize(rings);
  model.ring_r.assign(rings, 0.0);
  if (trace) trace->assign(rings, {});

  for (int j = 0; j < rings; ++j) {
    const double z = centroid.z() + (j - mid) * cfg.ring_spacing;
    model.ring_z[j] = z;
    const Eigen::Vector3d center(centroid.x(), centroid.y(), z);
    // Radii come from the step index so the sequence carries no drift.
    for (int k = 0;; ++k) {
      const double r = cfg.r_max - k * cfg.shrink_step;
      if (r < cfg.r_min) break;
      if (trace) (*trace)[j].tried.push_back(r);
      if (ring_inside(masks, calibs, center, r, cfg.n_angles)) {
        model.ring_r[j] = r;
        if (trace) (*trace)[j].accepted = r;
        break;
      }
    }
  }

  // Keep the contiguous run of non-empty rings through the centroid ring.
  if (model.ring_r[mid] <= 0) {
    std::fill(model.ring_r.begin(), model.ring_r.end(), 0.0);
    return model;
  }
  int lo = mid, hi = mid;
  while (lo > 0 && model.ring_r[lo - 1] > 0) --lo;
  while (hi + 1 < rings && model.ring_r[hi + 1] > 0) ++hi;
  for (int j = 0; j < rings; ++j) {
    if (j < lo || j > hi) model.ring_r[j] = 0.0;
  }
  return model;
}

std::optional<CylinderDimensions> capacity_from_cylinder(const CylinderModel& model) {
  double sum = 0;
  std::size_t count = 0;
  for (double r : model.ring_r) {
    if (r > 0) {
      sum += r;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  CylinderDimensions d;
  d.r_bar = sum / static_cast<double>(count);
  d.height = static_cast<double>(count) * model.ring_spacing;
  d.capacity_ml = d.r_bar * d.r_bar * d.height * std::numbers::pi * 1e6;
  return d;
}

FrameSelection select_frames(int num_frames) {
  if (num_frames < 1) throw DomainError("need at least one frame");
  return {0, std::max(0, num_frames - 20)};
}

std::optional<CylinderDimensions> estimate_frame(
    const std::array<const io::MaskImage*, 2>& masks,
    const std::array<const io::CameraCalibration*, 2>& calibs, const FitConfig& cfg) {
  const auto c1 = mask_centroid(*masks[0]);
  const auto c2 = mask_centroid(*masks[1]);
  if (!c1 || !c2) return std::nullopt;
  Eigen::Vector3d X;
  try {
    X = triangulate_midpoint(backproject_ray(*calibs[0], *c1), backproject_ray(*calibs[1], *c2));
  } catch (const DegenerateGeometryError&) {
    return std::nullopt;
  }
  return capacity_from_cylinder(fit_cylinder(masks, calibs, X, cfg));
}

CapacityEstimate estimate_capacity_sequence(const std::vector<FramePair>& frames,
                                            const std::array<io::CameraCalibration, 2>& calibs,
                                            double prior_ml, const FitConfig& cfg) {
  if (!(prior_ml > 0)) throw DomainError("capacity prior must be positive");
  CapacityEstimate est;
  double cap = 0, r = 0, h = 0;
  for (const auto& f : frames) {
    const auto d = estimate_frame({&f.camera1, &f.camera2}, {&calibs[0], &calibs[1]}, cfg);
    if (!d) continue;
    cap += d->capacity_ml;
    r += d->r_bar;
    h += d->height;
    ++est.frames_used;
  }
  if (est.frames_used == 0) {
    est.capacity_ml = prior_ml;
    est.used_prior = true;
    return est;
  }
  est.capacity_ml = cap / est.frames_used;
  est.r_bar = r / est.frames_used;
  est.height = h / est.frames_used;
  return est;
}

}  // namespace fillmass::geom
