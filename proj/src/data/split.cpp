// SPDX-License-Identifier: Apache-2.0
#include "data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "core/rng.hpp"

namespace tadiff {

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Intra: return "intra";
    case Protocol::CrossAB: return "cross-AB";
    case Protocol::CrossBA: return "cross-BA";
    case Protocol::OpenWorld: return "open-world";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "intra") return Protocol::Intra;
  if (s == "cross-AB") return Protocol::CrossAB;
  if (s == "cross-BA") return Protocol::CrossBA;
  if (s == "open-world") return Protocol::OpenWorld;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected intra, cross-AB, cross-BA or open-world)");
}

std::optional<Domain> video_domain(const VideoRecord& v) {
  if (!v.fake || v.segments.empty()) return std::nullopt;
  return v.segments.front().domain;
}

namespace {

void shuffle(std::vector<const VideoRecord*>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(v[i - 1], v[j]);
  }
}

void sort_by_id(Manifest& m) {
  std::sort(m.videos.begin(), m.videos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

} // namespace

Split split_dataset(const Manifest& m, Protocol protocol, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("split: train_fraction must be in (0,1)");
  Split out;
  out.train.base_dir = m.base_dir;
  out.test.base_dir = m.base_dir;

  std::size_t count_a = 0, count_b = 0, count_ow = 0;
  for (const auto& v : m.videos) {
    const auto d = video_domain(v);
    if (!d) continue;
    if (*d == Domain::A) ++count_a;
    if (*d == Domain::B) ++count_b;
    if (*d == Domain::OpenWorld) ++count_ow;
  }
  const auto need = [&](bool ok, const char* what) {
    if (!ok) {
      throw DataError("split: protocol " + std::string(protocol_name(protocol)) + " needs " + what +
                      " videos, manifest has none");
    }
  };

  // Stratify by method (or "real") so every group appears on both sides.
  Rng rng(derive_seed(seed, "split", std::string(protocol_name(protocol))));
  std::map<std::string, std::vector<const VideoRecord*>> groups;
  const auto stratified = [&](auto&& include) {
    groups.clear();
    for (const auto& v : m.videos) {
      if (include(v)) groups[v.fake ? v.segments.front().method : std::string("real")].push_back(&v);
    }
    for (auto& [name, vids] : groups) {
      shuffle(vids, rng);
      const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(vids.size())));
      for (std::size_t i = 0; i < vids.size(); ++i) (i < n_train ? out.train : out.test).videos.push_back(*vids[i]);
    }
  };

  switch (protocol) {
    case Protocol::Intra:
      need(count_a + count_b > 0, "A or B");
      stratified([](const VideoRecord& v) {
        const auto d = video_domain(v);
        return !d || *d != Domain::OpenWorld;
      });
      break;
    case Protocol::CrossAB:
    case Protocol::CrossBA: {
      need(count_a > 0, "A");
      need(count_b > 0, "B");
      const Domain src = protocol == Protocol::CrossAB ? Domain::A : Domain::B;
      const Domain dst = protocol == Protocol::CrossAB ? Domain::B : Domain::A;
      stratified([](const VideoRecord& v) { return !v.fake; });
      for (const auto& v : m.videos) {
        const auto d = video_domain(v);
        if (d == src) out.train.videos.push_back(v);
        if (d == dst) out.test.videos.push_back(v);
      }
      break;
    }
    case Protocol::OpenWorld:
      need(count_ow > 0, "open-world");
      need(count_a + count_b > 0, "A or B");
      for (const auto& v : m.videos) {
        const auto d = video_domain(v);
        (d == Domain::OpenWorld ? out.test : out.train).videos.push_back(v);
      }
      break;
  }
  sort_by_id(out.train);
  sort_by_id(out.test);
  return out;
}

} // namespace tadiff
