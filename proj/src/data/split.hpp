// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "data/manifest.hpp"

namespace tadiff {

enum class Protocol { Intra, CrossAB, CrossBA, OpenWorld };

std::string_view protocol_name(Protocol p);
/// Accepts intra, cross-AB, cross-BA, open-world. Throws ConfigError.
Protocol parse_protocol(std::string_view s);

/// Domain of a fake video's segments; nullopt for real videos.
std::optional<Domain> video_domain(const VideoRecord& v);

struct Split {
  Manifest train;
  Manifest test;
};

/// intra: per-method stratified split of the A/B pool (train_fraction to
/// train); cross-AB / cross-BA: train on one domain, test on the other;
/// open-world: train on A and B, test on open-world videos. Real videos
/// are split by train_fraction in every protocol except open-world, where
/// they train. Throws DataError when the manifest lacks a required tag.
Split split_dataset(const Manifest& m, Protocol protocol, std::uint64_t seed, double train_fraction = 0.75);

} // namespace tadiff
