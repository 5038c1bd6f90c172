// SPDX-License-Identifier: Apache-2.0
#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "core/rng.hpp"

namespace tadiff {

std::vector<MechanismSignature> default_mechanisms() {
  return {
      {"a_text2video", Domain::A, 3.6, 1.8, 2, 7.5},
      {"a_interp", Domain::A, 3.0, 2.4, 3, 6.0},
      {"b_pose", Domain::B, 3.3, 1.5, 4, 7.5},
      {"b_edit", Domain::B, 3.0, 2.1, 2, 9.0},
      {"ow_commercial", Domain::OpenWorld, 2.7, 1.8, 3, 7.5},
  };
}

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synthetic: " + msg); };
  if (t_min < 8 || t_min > t_max) fail("need 8 <= t_min <= t_max");
  if (input_dim == 0) fail("input_dim must be positive");
  if (!(fps > 0)) fail("fps must be positive");
  if (max_segments < 1 || max_segments > 2) fail("max_segments must be 1 or 2");
  if (!(two_segment_prob >= 0 && two_segment_prob <= 1)) fail("two_segment_prob must be in [0,1]");
  if (!(ratio_alpha > 0 && ratio_beta > 0)) fail("ratio_alpha and ratio_beta must be positive");
  if (!(max_ratio > 0 && max_ratio <= 1)) fail("max_ratio must be in (0,1]");
  if (min_segment_frames < 2 || min_segment_frames > t_min) fail("min_segment_frames must be in [2, t_min]");
  if (walk_smooth == 0) fail("walk_smooth must be >= 1");
  if (!(walk_decay >= 0 && walk_decay <= 1)) fail("walk_decay must be in [0,1]");
  if (content_scale < 0 || semantic_change < 0 || observation_noise < 0) fail("scales must be non-negative");
  if (!(real_fraction >= 0 && real_fraction < 1)) fail("real_fraction must be in [0,1)");
  if (!(shared_fraction >= 0 && shared_fraction < 1)) fail("shared_fraction must be in [0,1)");
  if (direction_jitter < 0) fail("direction_jitter must be non-negative");
  std::set<std::string> names;
  bool has_ab = false, has_ow = false;
  for (const auto& m : mechanisms) {
    if (m.name.empty()) fail("mechanism without a name");
    if (!names.insert(m.name).second) fail("duplicate mechanism " + m.name);
    if (m.shift < 0 || m.noise_amp < 0 || m.jump < 0) fail("mechanism " + m.name + " has a negative magnitude");
    if (m.noise_period < 2) fail("mechanism " + m.name + " needs noise_period >= 2");
    (m.domain == Domain::OpenWorld ? has_ow : has_ab) = true;
  }
  if (num_videos > 0 && !has_ab) fail("no A/B mechanisms configured");
  if (num_open_world_videos > 0 && !has_ow) fail("no open-world mechanism configured");
}

namespace {

std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
}

void jitter(std::vector<double>& v, double amount, Rng& rng) {
  if (amount <= 0) return;
  const auto r = unit_vector(rng, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += amount * r[i];
  normalize(v);
}

struct Span {
  std::size_t begin, end; // frames, end exclusive
};

std::size_t sample_length(const SyntheticConfig& cfg, Rng& rng, std::size_t frames) {
  double r = rng.beta(cfg.ratio_alpha, cfg.ratio_beta);
  for (int i = 0; i < 64 && r > cfg.max_ratio; ++i) r = rng.beta(cfg.ratio_alpha, cfg.ratio_beta);
  r = std::min(r, cfg.max_ratio);
  const auto len = static_cast<std::size_t>(std::llround(r * static_cast<double>(frames)));
  return std::clamp(len, cfg.min_segment_frames, frames);
}

std::vector<Span> place_segments(const SyntheticConfig& cfg, Rng& rng, std::size_t frames, std::size_t count,
                                 std::size_t index) {
  constexpr int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Span> spans;
    bool ok = true;
    for (std::size_t k = 0; k < count && ok; ++k) {
      const std::size_t len = sample_length(cfg, rng, frames);
      if (len > frames) {
        ok = false;
        break;
      }
      const auto begin = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(frames - len)));
      const Span s{begin, begin + len};
      for (const auto& o : spans) {
        if (s.begin < o.end + cfg.min_gap_frames && o.begin < s.end + cfg.min_gap_frames) ok = false;
      }
      spans.push_back(s);
    }
    if (ok) {
      std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
      return spans;
    }
  }
  throw DataError("synthetic: could not place " + std::to_string(count) + " non-overlapping segments in video index " +
                  std::to_string(index) + " after " + std::to_string(kMaxAttempts) + " attempts");
}

} // namespace

MechanismDirections mechanism_directions(const MechanismSignature& m, std::size_t dim, std::uint64_t seed,
                                         double shared_fraction) {
  Rng own(derive_seed(seed, "mechanism", m.name));
  Rng common(derive_seed(seed, "common"));
  const double a = std::sqrt(shared_fraction), b = std::sqrt(1.0 - shared_fraction);
  const auto mix = [&] {
    const auto c = unit_vector(common, dim);
    auto v = unit_vector(own, dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = a * c[i] + b * v[i];
    normalize(v);
    return v;
  };
  MechanismDirections d;
  d.shift = mix();
  d.noise = mix();
  d.jump = mix();
  return d;
}

GeneratedVideo generate_video(const SyntheticConfig& cfg, std::size_t index) {
  std::vector<const MechanismSignature*> ab, ow;
  for (const auto& m : cfg.mechanisms) (m.domain == Domain::OpenWorld ? ow : ab).push_back(&m);

  Rng rng(derive_seed(cfg.seed, "video", index));
  const bool open_world = index >= cfg.num_videos;
  const MechanismSignature* mech =
      open_world ? ow.at((index - cfg.num_videos) % ow.size()) : ab.at(index % ab.size());
  const bool fake = open_world || !(cfg.real_fraction > 0 && rng.uniform() < cfg.real_fraction);

  const auto frames = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.t_min), static_cast<std::int64_t>(cfg.t_max)));
  const std::size_t dim = cfg.input_dim;

  // Authentic stream.
  std::vector<double> x(frames * dim, 0.0);
  {
    const std::size_t w = cfg.walk_smooth;
    std::vector<double> inc((frames + w) * dim);
    for (auto& v : inc) v = rng.normal();
    std::vector<double> state(dim, 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t c = 0; c < dim; ++c) {
        double u = 0.0;
        for (std::size_t j = 0; j < w; ++j) u += inc[(t + j) * dim + c];
        state[c] = cfg.walk_decay * state[c] + u / static_cast<double>(w);
        x[t * dim + c] = state[c];
      }
    }
    double sq = 0.0;
    for (double v : x) sq += v * v;
    const double sd = std::sqrt(sq / static_cast<double>(x.size()));
    if (sd > 0)
      for (auto& v : x) v /= sd;
    std::vector<double> content(dim);
    for (auto& v : content) v = cfg.content_scale * rng.normal();
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t c = 0; c < dim; ++c) x[t * dim + c] += content[c] + cfg.observation_noise * rng.normal();
  }

  char id[32];
  std::snprintf(id, sizeof id, "vid_%05zu", index);
  GeneratedVideo out;
  auto& rec = out.record;
  rec.id = id;
  rec.fps = cfg.fps;
  rec.duration_sec = static_cast<double>(frames) / cfg.fps;
  rec.feature_file = std::string("features/") + id + ".afft";
  rec.fake = fake;

  if (fake) {
    const std::size_t count = (cfg.max_segments >= 2 && rng.uniform() < cfg.two_segment_prob) ? 2 : 1;
    const auto spans = place_segments(cfg, rng, frames, count, index);
    auto dirs = mechanism_directions(*mech, dim, cfg.seed, cfg.shared_fraction);
    jitter(dirs.shift, cfg.direction_jitter, rng);
    jitter(dirs.noise, cfg.direction_jitter, rng);
    jitter(dirs.jump, cfg.direction_jitter, rng);
    for (const auto& s : spans) {
      std::vector<double> change(dim);
      for (auto& v : change) v = cfg.semantic_change * rng.normal();
      // Whole-frame phase keeps the full amplitude for short periods.
      const auto phase = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(mech->noise_period) - 1));
      for (std::size_t t = s.begin; t < s.end; ++t) {
        const double wave = mech->noise_amp * std::cos(2.0 * std::numbers::pi * static_cast<double>(t - s.begin + phase) /
                                                       static_cast<double>(mech->noise_period));
        const double spike = (t == s.begin || t + 1 == s.end) ? mech->jump : 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          x[t * dim + c] += mech->shift * dirs.shift[c] + wave * dirs.noise[c] + spike * dirs.jump[c] + change[c];
        }
      }
      ForgerySegment seg;
      seg.interval = {static_cast<double>(s.begin) / cfg.fps, static_cast<double>(s.end) / cfg.fps};
      seg.method = mech->name;
      seg.domain = mech->domain;
      rec.segments.push_back(std::move(seg));
    }
  }

  out.features.frames = static_cast<std::uint32_t>(frames);
  out.features.channels = static_cast<std::uint32_t>(dim);
  out.features.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.features.values[i] = static_cast<float>(x[i]);
  return out;
}

Manifest generate_dataset(const SyntheticConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir / "features");
  Manifest m;
  m.base_dir = out_dir;
  const std::size_t total = cfg.num_videos + cfg.num_open_world_videos;
  for (std::size_t i = 0; i < total; ++i) {
    auto v = generate_video(cfg, i);
    write_features(out_dir / v.record.feature_file, v.features);
    m.videos.push_back(std::move(v.record));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

DatasetSummary summarize(const Manifest& m) {
  DatasetSummary s;
  s.videos = m.videos.size();
  for (const auto& v : m.videos) {
    if (!v.fake) {
      ++s.real_videos;
      continue;
    }
    for (const auto& seg : v.segments) ++s.segments_per_method[seg.method];
    ++s.videos_per_domain[std::string(domain_name(v.segments.front().domain))];
  }
  return s;
}

} // namespace tadiff
