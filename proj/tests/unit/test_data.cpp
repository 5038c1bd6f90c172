// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "data/features.hpp"
#include "data/manifest.hpp"
#include "data/split.hpp"
#include "data/synthetic.hpp"
#include "eval/metrics.hpp"
#include "support/fixtures.hpp"

using namespace tadiff;
using namespace tadiff::testing;

namespace {

const std::filesystem::path kData = TADIFF_TEST_DATA_DIR;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

SyntheticConfig small_synthetic(std::uint64_t seed = 0) {
  SyntheticConfig c;
  c.num_videos = 40;
  c.num_open_world_videos = 10;
  c.t_min = 64;
  c.t_max = 128;
  c.input_dim = 8;
  c.seed = seed;
  return c;
}

/// Frame-level inside/outside membership of a generated video.
std::vector<bool> forged_frames(const GeneratedVideo& v) {
  std::vector<bool> in(v.features.frames, false);
  for (const auto& s : v.record.segments) {
    const auto b = static_cast<std::size_t>(std::llround(s.interval.start_sec * v.record.fps));
    const auto e = static_cast<std::size_t>(std::llround(s.interval.end_sec * v.record.fps));
    for (std::size_t t = b; t < e; ++t) in[t] = true;
  }
  return in;
}

} // namespace

TEST_SUITE("synthetic_forensics_data") {

TEST_CASE("golden feature file parses to known values") {
  const auto m = load_features(kData / "golden_2x2.afft");
  CHECK(m.frames == 2);
  CHECK(m.channels == 2);
  CHECK(m.values == std::vector<float>{1.0f, -2.5f, 0.5f, 3.25f});
  CHECK(encode_features(m) == bytes_of(read_file(kData / "golden_2x2.afft")));
}

TEST_CASE("feature files round-trip") {
  TempDir tmp;
  FeatureMatrix m{9, 3, {}};
  Rng rng(1);
  for (int i = 0; i < 27; ++i) m.values.push_back(static_cast<float>(rng.normal()));
  write_features(tmp / "x.afft", m);
  const auto back = load_features(tmp / "x.afft");
  CHECK(back.frames == 9);
  CHECK(back.channels == 3);
  CHECK(back.values == m.values);
}

TEST_CASE("feature parse errors name byte offsets") {
  const auto good = encode_features({2, 2, {1, 2, 3, 4}});
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(error_of([&] { decode_features(bad_magic); }).find("offset 0") != std::string::npos);
  auto bad_version = good;
  bad_version[4] = 9;
  CHECK(error_of([&] { decode_features(bad_version); }).find("offset 4") != std::string::npos);
  const std::vector<std::uint8_t> truncated(good.begin(), good.end() - 3);
  CHECK(error_of([&] { decode_features(truncated); }).find("offset 27") != std::string::npos);
  const std::vector<std::uint8_t> short_header(good.begin(), good.begin() + 8);
  CHECK_FALSE(error_of([&] { decode_features(short_header); }).empty());
  auto extra = good;
  extra.push_back(0);
  CHECK_FALSE(error_of([&] { decode_features(extra); }).empty());
  CHECK_THROWS_AS(load_features("/nonexistent/file.afft"), DataError);
}

TEST_CASE("sequences enforce length, finiteness and duration") {
  FeatureMatrix m{16, 2, std::vector<float>(32, 0.5f)};
  const auto seq = make_sequence("v", m, 8.0, 2.0);
  CHECK(seq.frames() == 16);
  CHECK(seq.features.shape() == Shape{16, 2});
  CHECK_THROWS_AS(make_sequence("v", m, 8.0, 3.0), DataError);
  CHECK_NOTHROW(make_sequence("v", m, 8.0, 2.1));
  FeatureMatrix tiny{7, 2, std::vector<float>(14, 0.0f)};
  CHECK_THROWS_AS(make_sequence("v", tiny, 8.0, 7.0 / 8.0), DataError);
  m.values[5] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(make_sequence("v", m, 8.0, 2.0), DataError);
}

TEST_CASE("golden manifest round-trips exactly") {
  const auto text = read_file(kData / "manifest_golden.json");
  const auto m = manifest_from_json(text, kData);
  REQUIRE(m.videos.size() == 3);
  CHECK(m.videos[0].segments.size() == 2);
  CHECK(m.videos[0].segments[1].interval.start_sec == 10.125);
  CHECK_FALSE(m.videos[1].fake);
  CHECK(m.videos[2].segments[0].domain == Domain::OpenWorld);
  CHECK(m.feature_path(m.videos[0]) == kData / "features/clip_a.afft");
  CHECK(manifest_to_json(m) == text);
}

TEST_CASE("manifest validation") {
  const auto bad = [](const std::string& text) { return error_of([&] { manifest_from_json(text, "."); }); };
  CHECK_FALSE(bad("[]").empty());
  CHECK_FALSE(bad("{\"videos\": 3}").empty());
  CHECK_FALSE(bad("not json").empty());
  const std::string overlap =
      R"({"videos":[{"id":"a","duration_sec":10,"fps":8,"feature_file":"a","label":"fake","segments":[)"
      R"({"start_sec":1,"end_sec":5,"method":"m","domain":"A"},{"start_sec":4,"end_sec":6,"method":"m","domain":"A"}]}]})";
  CHECK_FALSE(bad(overlap).empty());
  const std::string outside =
      R"({"videos":[{"id":"a","duration_sec":10,"fps":8,"feature_file":"a","label":"fake","segments":[)"
      R"({"start_sec":1,"end_sec":11,"method":"m","domain":"A"}]}]})";
  CHECK_FALSE(bad(outside).empty());
  const std::string domain =
      R"({"videos":[{"id":"a","duration_sec":10,"fps":8,"feature_file":"a","label":"fake","segments":[)"
      R"({"start_sec":1,"end_sec":2,"method":"m","domain":"C"}]}]})";
  CHECK_FALSE(bad(domain).empty());
  const std::string fake_without_segments =
      R"({"videos":[{"id":"a","duration_sec":10,"fps":8,"feature_file":"a","label":"fake","segments":[]}]})";
  CHECK_FALSE(bad(fake_without_segments).empty());
}

TEST_CASE("generation is deterministic to the byte") {
  TempDir a, b, c;
  const auto cfg = small_synthetic(7);
  generate_dataset(cfg, a.path());
  generate_dataset(cfg, b.path());
  auto other = cfg;
  other.seed = 8;
  generate_dataset(other, c.path());
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
  for (const auto& entry : std::filesystem::directory_iterator(a / "features")) {
    const auto name = entry.path().filename().string();
    CHECK(read_file(entry.path()) == read_file(b / ("features/" + name)));
  }
  CHECK(read_file(a / "features/vid_00003.afft") != read_file(c / "features/vid_00003.afft"));
}

TEST_CASE("generated annotations are valid and domain-tagged") {
  TempDir tmp;
  auto cfg = small_synthetic();
  cfg.real_fraction = 0.2;
  const auto m = generate_dataset(cfg, tmp.path());
  REQUIRE(m.videos.size() == 50);
  std::size_t real = 0;
  for (const auto& v : m.videos) {
    CHECK_NOTHROW(v.annotation().validate());
    if (!v.fake) {
      ++real;
      CHECK(v.segments.empty());
      continue;
    }
    CHECK(v.segments.size() >= 1);
    CHECK(v.segments.size() <= 2);
    const auto seq = load_video(m, v);
    CHECK(seq.features.cols() == 8);
    for (const auto& s : v.segments) CHECK(s.domain == v.segments.front().domain);
  }
  CHECK(real > 0);
  const auto summary = summarize(m);
  CHECK(summary.real_videos == real);
  CHECK(summary.videos_per_domain.at("open-world") == 10);
  CHECK(summary.segments_per_method.size() == 5);
}

TEST_CASE("segment ratios: most segments cover under 30% of the video") {
  SyntheticConfig cfg;
  std::size_t below = 0, total = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto v = generate_video(cfg, i % (cfg.num_videos + cfg.num_open_world_videos));
    for (const auto& s : v.record.segments) {
      const double ratio = s.interval.length() / v.record.duration_sec;
      CHECK(ratio > 0.0);
      CHECK(ratio <= cfg.max_ratio + 1e-9);
      below += ratio < 0.3 ? 1 : 0;
      ++total;
    }
    if (i + 1 == cfg.num_videos + cfg.num_open_world_videos) cfg.seed += 1;
  }
  CHECK(static_cast<double>(below) / static_cast<double>(total) > 0.6);
}

TEST_CASE("mechanism directions are unit length and distinct") {
  const auto mechs = default_mechanisms();
  std::vector<std::vector<double>> shifts;
  for (const auto& m : mechs) {
    for (double rho : {0.0, 0.5}) {
      const auto d = mechanism_directions(m, 32, 3, rho);
      for (const auto* v : {&d.shift, &d.noise, &d.jump}) {
        double n = 0;
        for (double x : *v) n += x * x;
        CHECK(std::abs(n - 1.0) < 1e-12);
      }
      if (rho == 0.0) shifts.push_back(d.shift);
    }
  }
  for (std::size_t i = 0; i < shifts.size(); ++i)
    for (std::size_t j = i + 1; j < shifts.size(); ++j) CHECK(shifts[i] != shifts[j]);
}

TEST_CASE("null mechanism leaves forged spans indistinguishable") {
  auto cfg = small_synthetic(11);
  cfg.num_videos = 400;
  cfg.num_open_world_videos = 0;
  cfg.mechanisms = {{"null", Domain::A, 0.0, 0.0, 2, 0.0}};
  const auto dim = cfg.input_dim;
  // Per-video mean difference (inside - outside); videos are independent.
  const auto z_scores = [&](const SyntheticConfig& c) {
    std::vector<std::vector<double>> diffs;
    for (std::size_t i = 0; i < c.num_videos; ++i) {
      const auto v = generate_video(c, i);
      const auto in = forged_frames(v);
      std::vector<double> si(dim, 0), so(dim, 0);
      std::size_t ni = 0, no = 0;
      for (std::size_t t = 0; t < in.size(); ++t) {
        for (std::size_t ch = 0; ch < dim; ++ch) (in[t] ? si : so)[ch] += v.features.values[t * dim + ch];
        (in[t] ? ni : no) += 1;
      }
      std::vector<double> d(dim);
      for (std::size_t ch = 0; ch < dim; ++ch) d[ch] = si[ch] / ni - so[ch] / no;
      diffs.push_back(d);
    }
    std::vector<double> z(dim);
    for (std::size_t ch = 0; ch < dim; ++ch) {
      double m = 0, m2 = 0;
      for (const auto& d : diffs) m += d[ch];
      m /= diffs.size();
      for (const auto& d : diffs) m2 += (d[ch] - m) * (d[ch] - m);
      const double se = std::sqrt(m2 / (diffs.size() - 1) / diffs.size());
      z[ch] = m / se;
    }
    return z;
  };
  for (double z : z_scores(cfg)) CHECK(std::abs(z) < 3.5);
  // Positive control: a shift-only mechanism is detected.
  cfg.mechanisms = {{"shift", Domain::A, 1.0, 0.0, 2, 0.0}};
  double max_z = 0;
  for (double z : z_scores(cfg)) max_z = std::max(max_z, std::abs(z));
  CHECK(max_z > 10.0);
}

TEST_CASE("Fisher separability grows with the shift magnitude") {
  std::vector<double> scores;
  for (double shift : {0.5, 1.0, 2.0}) {
    auto cfg = small_synthetic(5);
    cfg.num_videos = 60;
    cfg.num_open_world_videos = 0;
    cfg.mechanisms = {{"m", Domain::A, shift, 0.0, 2, 0.0}};
    std::vector<std::vector<double>> forged, authentic;
    for (std::size_t i = 0; i < cfg.num_videos; ++i) {
      const auto v = generate_video(cfg, i);
      const auto in = forged_frames(v);
      for (std::size_t t = 0; t < in.size(); ++t) {
        std::vector<double> row(v.features.values.begin() + static_cast<std::ptrdiff_t>(t * cfg.input_dim),
                                v.features.values.begin() + static_cast<std::ptrdiff_t>((t + 1) * cfg.input_dim));
        (in[t] ? forged : authentic).push_back(std::move(row));
      }
    }
    scores.push_back(fisher_score(forged, authentic));
  }
  CHECK(scores[0] < scores[1]);
  CHECK(scores[1] < scores[2]);
}

TEST_CASE("invalid synthetic configs") {
  auto cfg = small_synthetic();
  cfg.t_min = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_synthetic();
  cfg.mechanisms.push_back(cfg.mechanisms.front());
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_synthetic();
  cfg.mechanisms.front().shift = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_synthetic();
  std::erase_if(cfg.mechanisms, [](const MechanismSignature& m) { return m.domain == Domain::OpenWorld; });
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("protocol splits") {
  TempDir tmp;
  auto cfg = small_synthetic(3);
  cfg.real_fraction = 0.1;
  const auto m = generate_dataset(cfg, tmp.path());
  const auto methods = [](const Manifest& s) {
    std::set<std::string> out;
    for (const auto& v : s.videos)
      for (const auto& seg : v.segments) out.insert(seg.method);
    return out;
  };
  const auto ids = [](const Manifest& s) {
    std::set<std::string> out;
    for (const auto& v : s.videos) out.insert(v.id);
    return out;
  };
  const auto disjoint = [&](const Split& s) {
    const auto a = ids(s.train), b = ids(s.test);
    return std::none_of(a.begin(), a.end(), [&](const std::string& id) { return b.count(id) > 0; });
  };

  const auto intra = split_dataset(m, Protocol::Intra, 0);
  CHECK(disjoint(intra));
  const std::set<std::string> ab{"a_text2video", "a_interp", "b_pose", "b_edit"};
  CHECK(methods(intra.train) == ab);
  CHECK(methods(intra.test) == ab);
  CHECK(intra.train.videos.size() + intra.test.videos.size() == 40);
  // Rounding is per method stratum, so the total may drift by a video or two.
  CHECK(intra.train.videos.size() >= 28);
  CHECK(intra.train.videos.size() <= 32);

  const auto cab = split_dataset(m, Protocol::CrossAB, 0);
  CHECK(disjoint(cab));
  CHECK(methods(cab.train) == std::set<std::string>{"a_text2video", "a_interp"});
  CHECK(methods(cab.test) == std::set<std::string>{"b_pose", "b_edit"});
  const auto cba = split_dataset(m, Protocol::CrossBA, 0);
  CHECK(methods(cba.train) == std::set<std::string>{"b_pose", "b_edit"});

  const auto ow = split_dataset(m, Protocol::OpenWorld, 0);
  CHECK(disjoint(ow));
  CHECK(methods(ow.test) == std::set<std::string>{"ow_commercial"});
  for (const auto& v : ow.test.videos) CHECK(v.fake);
  CHECK(methods(ow.train) == ab);

  for (const auto& v : split_dataset(m, Protocol::OpenWorld, 0).train.videos)
    CHECK(video_domain(v) != std::optional<Domain>(Domain::OpenWorld));

  const auto again = split_dataset(m, Protocol::Intra, 0);
  CHECK(ids(again.test) == ids(intra.test));
  CHECK(ids(split_dataset(m, Protocol::Intra, 1).test) != ids(intra.test));
}

TEST_CASE("default dataset splits intra 300/100") {
  const SyntheticConfig cfg;
  Manifest m;
  for (std::size_t i = 0; i < cfg.num_videos + cfg.num_open_world_videos; ++i)
    m.videos.push_back(generate_video(cfg, i).record);
  const auto intra = split_dataset(m, Protocol::Intra, 0);
  CHECK(intra.train.videos.size() == 300);
  CHECK(intra.test.videos.size() == 100);
  const auto ow = split_dataset(m, Protocol::OpenWorld, 0);
  CHECK(ow.train.videos.size() == 400);
  CHECK(ow.test.videos.size() == 100);
}

TEST_CASE("splits fail without the tags a protocol needs") {
  TempDir tmp;
  auto cfg = small_synthetic();
  cfg.num_open_world_videos = 0;
  std::erase_if(cfg.mechanisms, [](const MechanismSignature& m) { return m.domain != Domain::A; });
  const auto m = generate_dataset(cfg, tmp.path());
  CHECK_THROWS_AS(split_dataset(m, Protocol::OpenWorld, 0), DataError);
  CHECK_THROWS_AS(split_dataset(m, Protocol::CrossAB, 0), DataError);
  CHECK_NOTHROW(split_dataset(m, Protocol::Intra, 0));
  CHECK_THROWS_AS(parse_protocol("cross"), ConfigError);
}

} // TEST_SUITE
