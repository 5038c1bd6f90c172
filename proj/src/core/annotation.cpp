// SPDX-License-Identifier: Apache-2.0
#include "core/annotation.hpp"

#include <algorithm>

namespace tadiff {

void ForgeryAnnotation::validate() const {
  // Boundaries are produced from frame indices divided by fps; allow a few ulps.
  const double slack = 1e-9 * std::max(1.0, duration_sec);
  std::vector<TemporalInterval> sorted;
  for (const auto& seg : segments) {
    const auto& iv = seg.interval;
    if (!iv.valid() || iv.end_sec > duration_sec + slack) {
      throw DataError("video " + video_id + ": segment [" + std::to_string(iv.start_sec) + ", " +
                      std::to_string(iv.end_sec) + "] outside [0, " + std::to_string(duration_sec) + "]");
    }
    sorted.push_back(iv);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start_sec < b.start_sec; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start_sec < sorted[i - 1].end_sec) {
      throw DataError("video " + video_id + ": overlapping segments at " + std::to_string(sorted[i].start_sec) + "s");
    }
  }
}

} // namespace tadiff
