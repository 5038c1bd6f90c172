// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "core/annotation.hpp"
#include "model/pyramid.hpp"

namespace tadiff {

struct AssignmentConfig {
  /// Per-level regression range [lo, hi) in frames on max(d_s, d_e). Empty
  /// means the default: [0, 4) at level 1, then [2 s, 4 s) for stride s, with
  /// the last level open-ended.
  std::vector<std::pair<double, double>> ranges;
  /// Center-sampling radius in stride units.
  double center_radius = 1.5;

  static std::vector<std::pair<double, double>> default_ranges(std::span<const LevelGeometry> geometry);
  std::vector<std::pair<double, double>> resolved_ranges(std::span<const LevelGeometry> geometry) const;
  /// Throws ConfigError unless the ranges tile [0, inf) without gaps.
  void validate(std::size_t levels) const;
};

inline constexpr double kOpenRange = std::numeric_limits<double>::infinity();

struct LevelTargets {
  std::vector<double> labels;  // N, 0 or 1
  std::vector<double> offsets; // N x 2, stride units, zero at negatives
};

struct Targets {
  std::vector<LevelTargets> levels;
  std::size_t num_positive = 0;
};

/// Anchor-free assignment: location t at level l sits at frame t * stride
/// and is positive for a segment when strictly inside it, within the
/// center-sampling radius of its center, and max(d_s, d_e) falls in the
/// level's range. A segment left without any positive gets the location
/// nearest its center at the level whose range holds half its length.
/// Throws DataError for an invalid annotation.
Targets assign_targets(const ForgeryAnnotation& ann, double fps, std::span<const LevelGeometry> geometry,
                       const AssignmentConfig& cfg);

} // namespace tadiff
