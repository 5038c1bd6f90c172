// SPDX-License-Identifier: Apache-2.0
#include "train/targets.hpp"

#include <algorithm>
#include <cmath>

namespace tadiff {

std::vector<std::pair<double, double>> AssignmentConfig::default_ranges(std::span<const LevelGeometry> geometry) {
  std::vector<std::pair<double, double>> r;
  for (std::size_t l = 0; l < geometry.size(); ++l) {
    const double s = static_cast<double>(geometry[l].stride);
    const double lo = l == 0 ? 0.0 : r.back().second;
    const double hi = l + 1 == geometry.size() ? kOpenRange : 4.0 * s;
    r.emplace_back(lo, hi);
  }
  return r;
}

std::vector<std::pair<double, double>> AssignmentConfig::resolved_ranges(std::span<const LevelGeometry> geometry) const {
  if (ranges.empty()) return default_ranges(geometry);
  if (ranges.size() != geometry.size()) {
    throw ConfigError("assignment: " + std::to_string(ranges.size()) + " ranges for " +
                      std::to_string(geometry.size()) + " levels");
  }
  return ranges;
}

void AssignmentConfig::validate(std::size_t levels) const {
  if (!(center_radius > 0)) throw ConfigError("assignment: center_radius must be positive");
  if (ranges.empty()) return;
  if (ranges.size() != levels) throw ConfigError("assignment: need one range per level");
  if (ranges.front().first != 0.0) throw ConfigError("assignment: first range must start at 0");
  for (std::size_t l = 0; l < ranges.size(); ++l) {
    if (!(ranges[l].first < ranges[l].second)) throw ConfigError("assignment: empty range at level " + std::to_string(l + 1));
    if (l > 0 && ranges[l].first != ranges[l - 1].second) {
      throw ConfigError("assignment: gap or overlap between levels " + std::to_string(l) + " and " + std::to_string(l + 1));
    }
  }
  if (!std::isinf(ranges.back().second)) throw ConfigError("assignment: last range must be open-ended");
}

Targets assign_targets(const ForgeryAnnotation& ann, double fps, std::span<const LevelGeometry> geometry,
                       const AssignmentConfig& cfg) {
  ann.validate();
  if (!(fps > 0)) throw DataError("assignment: fps must be positive");
  const auto ranges = cfg.resolved_ranges(geometry);

  Targets out;
  out.levels.resize(geometry.size());
  for (std::size_t l = 0; l < geometry.size(); ++l) {
    out.levels[l].labels.assign(geometry[l].length, 0.0);
    out.levels[l].offsets.assign(geometry[l].length * 2, 0.0);
  }
  const auto mark = [&](std::size_t l, std::size_t t, double s, double e) {
    auto& lt = out.levels[l];
    const double stride = static_cast<double>(geometry[l].stride);
    const double p = static_cast<double>(t) * stride;
    if (lt.labels[t] == 0.0) ++out.num_positive;
    lt.labels[t] = 1.0;
    lt.offsets[2 * t] = (p - s) / stride;
    lt.offsets[2 * t + 1] = (e - p) / stride;
  };

  for (const auto& seg : ann.segments) {
    const double s = seg.interval.start_sec * fps;
    const double e = seg.interval.end_sec * fps;
    const double c = 0.5 * (s + e);
    bool assigned = false;
    for (std::size_t l = 0; l < geometry.size(); ++l) {
      const double stride = static_cast<double>(geometry[l].stride);
      const double radius = cfg.center_radius * stride;
      const auto t_lo = static_cast<std::size_t>(std::max(0.0, std::ceil((c - radius) / stride)));
      for (std::size_t t = t_lo; t < geometry[l].length; ++t) {
        const double p = static_cast<double>(t) * stride;
        if (p > c + radius) break;
        if (!(p > s && p < e)) continue;
        const double reach = std::max(p - s, e - p);
        if (reach >= ranges[l].first && reach < ranges[l].second) {
          mark(l, t, s, e);
          assigned = true;
        }
      }
    }
    if (assigned) continue;
    // Fallback: nearest-to-center interior location at the level whose range
    // holds the half length, else the closest finer level that has one.
    const double half = 0.5 * (e - s);
    std::size_t home = 0;
    for (std::size_t l = 0; l < geometry.size(); ++l) {
      if (half >= ranges[l].first && half < ranges[l].second) home = l;
    }
    for (std::size_t l = home + 1; l-- > 0;) {
      const double stride = static_cast<double>(geometry[l].stride);
      const auto t = static_cast<std::size_t>(std::llround(c / stride));
      if (t >= geometry[l].length) continue;
      const double p = static_cast<double>(t) * stride;
      if (p > s && p < e) {
        mark(l, t, s, e);
        break;
      }
    }
  }
  return out;
}

} // namespace tadiff
