// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "core/error.hpp"

namespace tadiff {

struct TemporalInterval {
  double start_sec = 0.0;
  double end_sec = 0.0;

  double length() const { return end_sec - start_sec; }
  bool valid() const { return start_sec >= 0.0 && start_sec < end_sec; }
};

enum class Domain { A, B, OpenWorld };

inline std::string_view domain_name(Domain d) {
  switch (d) {
    case Domain::A: return "A";
    case Domain::B: return "B";
    case Domain::OpenWorld: return "open-world";
  }
  return "?";
}

inline Domain parse_domain(std::string_view s) {
  if (s == "A") return Domain::A;
  if (s == "B") return Domain::B;
  if (s == "open-world") return Domain::OpenWorld;
  throw DataError("unknown domain tag '" + std::string(s) + "' (expected A, B or open-world)");
}

struct ForgerySegment {
  TemporalInterval interval;
  std::string method;
  Domain domain = Domain::A;
};

/// Ground-truth manipulated segments of one video.
struct ForgeryAnnotation {
  std::string video_id;
  double duration_sec = 0.0;
  std::vector<ForgerySegment> segments;

  /// Throws DataError unless every segment lies in [0, duration] and
  /// segments are pairwise disjoint.
  void validate() const;
};

} // namespace tadiff
