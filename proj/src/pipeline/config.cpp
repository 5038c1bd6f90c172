// SPDX-License-Identifier: Apache-2.0
#include "pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>
#include <openssl/evp.h>

namespace tadiff {

namespace {

using ojson = nlohmann::ordered_json;

// The field list below is walked once by JsonOut (serialize) and once by
// JsonIn (parse), so both directions stay in sync.

struct JsonOut {
  ojson& j;

  template <typename T>
  void field(const char* key, T& v) {
    if constexpr (std::is_same_v<T, std::filesystem::path>) {
      j[key] = v.generic_string();
    } else if constexpr (std::is_same_v<T, Domain>) {
      j[key] = std::string(domain_name(v));
    } else if constexpr (std::is_same_v<T, std::vector<std::pair<double, double>>>) {
      ojson arr = ojson::array();
      for (const auto& [lo, hi] : v) arr.push_back({lo, std::isinf(hi) ? ojson(nullptr) : ojson(hi)});
      j[key] = std::move(arr);
    } else {
      j[key] = v;
    }
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    ojson sub = ojson::object();
    JsonOut w{sub};
    fn(w);
    j[key] = std::move(sub);
  }

  template <typename T, typename Fn>
  void list(const char* key, std::vector<T>& items, Fn&& fn) {
    ojson arr = ojson::array();
    for (auto& item : items) {
      ojson sub = ojson::object();
      JsonOut w{sub};
      fn(w, item);
      arr.push_back(std::move(sub));
    }
    j[key] = std::move(arr);
  }
};

struct JsonIn {
  const ojson& j;
  std::string path;
  std::set<std::string> known;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config key '" + path + key + "': " + what);
  }

  template <typename T>
  static T as_unsigned(const JsonIn& self, const std::string& key, const ojson& v) {
    if (!v.is_number_unsigned()) self.fail(key, "expected a non-negative integer");
    return v.get<T>();
  }

  template <typename T>
  void parse_value(const std::string& key, const ojson& v, T& out) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      out = as_unsigned<T>(*this, key, v);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (!v.is_string()) fail(key, "expected a path string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, Domain>) {
      if (!v.is_string()) fail(key, "expected A, B or open-world");
      try {
        out = parse_domain(v.get<std::string>());
      } catch (const DataError& e) {
        fail(key, e.what());
      }
    } else if constexpr (std::is_same_v<T, std::vector<std::pair<double, double>>>) {
      if (!v.is_array()) fail(key, "expected a list of [lo, hi] pairs");
      out.clear();
      for (const auto& p : v) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !(p[1].is_number() || p[1].is_null())) {
          fail(key, "expected [lo, hi] with hi a number or null");
        }
        out.emplace_back(p[0].get<double>(), p[1].is_null() ? kOpenRange : p[1].get<double>());
      }
    } else {
      // std::vector of a scalar type
      if (!v.is_array()) fail(key, "expected a list");
      out.clear();
      for (const auto& item : v) {
        typename T::value_type x{};
        parse_value(key, item, x);
        out.push_back(std::move(x));
      }
    }
  }

  template <typename T>
  void field(const char* key, T& v) {
    known.insert(key);
    if (const auto it = j.find(key); it != j.end()) parse_value(key, *it, v);
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    known.insert(key);
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_object()) fail(key, "expected an object");
    JsonIn r{*it, path + key + ".", {}};
    fn(r);
    r.finish();
  }

  template <typename T, typename Fn>
  void list(const char* key, std::vector<T>& items, Fn&& fn) {
    known.insert(key);
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array()) fail(key, "expected a list of objects");
    items.clear();
    std::size_t i = 0;
    for (const auto& sub : *it) {
      const std::string where = path + key + "[" + std::to_string(i++) + "].";
      if (!sub.is_object()) throw ConfigError("config key '" + where + "': expected an object");
      JsonIn r{sub, where, {}};
      T item{};
      fn(r, item);
      r.finish();
      items.push_back(std::move(item));
    }
  }

  void finish() const {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.count(it.key())) throw ConfigError("unknown config key '" + path + it.key() + "'");
    }
  }
};

template <typename V>
void visit_synthetic(V& v, SyntheticConfig& s) {
  v.field("num_videos", s.num_videos);
  v.field("num_open_world_videos", s.num_open_world_videos);
  v.field("t_min", s.t_min);
  v.field("t_max", s.t_max);
  v.field("input_dim", s.input_dim);
  v.field("fps", s.fps);
  v.field("max_segments", s.max_segments);
  v.field("two_segment_prob", s.two_segment_prob);
  v.field("ratio_alpha", s.ratio_alpha);
  v.field("ratio_beta", s.ratio_beta);
  v.field("max_ratio", s.max_ratio);
  v.field("min_segment_frames", s.min_segment_frames);
  v.field("min_gap_frames", s.min_gap_frames);
  v.field("walk_smooth", s.walk_smooth);
  v.field("walk_decay", s.walk_decay);
  v.field("content_scale", s.content_scale);
  v.field("semantic_change", s.semantic_change);
  v.field("observation_noise", s.observation_noise);
  v.field("real_fraction", s.real_fraction);
  v.field("shared_fraction", s.shared_fraction);
  v.field("direction_jitter", s.direction_jitter);
  v.list("mechanisms", s.mechanisms, [](auto& w, MechanismSignature& m) {
    w.field("name", m.name);
    w.field("domain", m.domain);
    w.field("shift", m.shift);
    w.field("noise_amp", m.noise_amp);
    w.field("noise_period", m.noise_period);
    w.field("jump", m.jump);
  });
}

template <typename V>
void visit(V& v, RunConfig& c) {
  v.field("seed", c.seed);
  v.field("output", c.output);
  v.field("protocol", c.protocol);
  v.section("data", [&](auto& d) {
    d.field("dir", c.data.dir);
    d.field("train_fraction", c.data.train_fraction);
    d.section("synthetic", [&](auto& s) { visit_synthetic(s, c.data.synthetic); });
  });
  v.section("model", [&](auto& m) {
    auto& p = c.model.pyramid;
    m.field("input_dim", p.input_dim);
    m.field("channels", p.channels);
    m.field("levels", p.levels);
    m.field("window", p.window);
    m.field("heads", p.heads);
    m.field("mlp_ratio", p.mlp_ratio);
    m.field("head_layers", p.head_layers);
    m.field("head_kernel", p.head_kernel);
    m.field("share_heads", p.share_heads);
    m.field("prior_prob", p.prior_prob);
    m.section("diffusion", [&](auto& d) {
      auto& df = c.model.diffusion;
      d.field("steps", df.steps);
      d.field("beta_start", df.beta_start);
      d.field("beta_end", df.beta_end);
      d.field("eta", df.eta);
      d.field("noise", df.noise);
      d.field("denoise", df.denoise);
      d.field("embed_dim", df.embed_dim);
    });
  });
  v.section("train", [&](auto& t) {
    auto& tc = c.train;
    t.field("epochs", tc.epochs);
    t.field("batch_size", tc.batch_size);
    t.field("warmup_epochs", tc.warmup_epochs);
    t.field("lr", tc.lr);
    t.field("weight_decay", tc.weight_decay);
    t.field("clip_norm", tc.clip_norm);
    t.field("focal_alpha", tc.focal.alpha);
    t.field("focal_gamma", tc.focal.gamma);
    t.field("center_radius", tc.assignment.center_radius);
    t.field("ranges", tc.assignment.ranges);
  });
  v.section("eval", [&](auto& e) {
    auto& ec = c.eval;
    e.field("tiou_thresholds", ec.tiou_thresholds);
    e.field("recall_at", ec.recall_at);
    e.field("recall_tious", ec.recall_tious);
    e.field("nms_threshold", ec.nms.iou_threshold);
    e.field("soft_nms", ec.nms.soft);
    e.field("soft_nms_sigma", ec.nms.soft_sigma);
    e.field("score_threshold", ec.decode.score_threshold);
    e.field("max_per_video", ec.decode.max_per_video);
    e.field("fisher", ec.fisher);
  });
  v.section("ablate", [&](auto& a) {
    a.field("seeds", c.ablate.seeds);
    a.field("protocols", c.ablate.protocols);
    a.field("sweep_protocol", c.ablate.sweep_protocol);
  });
}

} // namespace

void RunConfig::resolve() {
  data.synthetic.seed = seed;
  train.seed = seed;
  eval.noise_seed = seed;
}

void RunConfig::validate() const {
  parse_protocol(protocol);
  for (const auto& p : ablate.protocols) parse_protocol(p);
  parse_protocol(ablate.sweep_protocol);
  if (ablate.seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  if (ablate.protocols.empty()) throw ConfigError("ablate.protocols must not be empty");
  if (!(data.train_fraction > 0 && data.train_fraction < 1)) throw ConfigError("data.train_fraction must be in (0,1)");
  if (output.empty()) throw ConfigError("output must not be empty");
  data.synthetic.validate();
  model.validate();
  train.validate();
  train.assignment.validate(model.pyramid.levels);
  eval.validate();
  const std::size_t min_frames = std::size_t{1} << (model.pyramid.levels - 1);
  if (data.synthetic.t_min < min_frames) {
    throw ConfigError("data.synthetic.t_min " + std::to_string(data.synthetic.t_min) + " is shorter than the " +
                      std::to_string(min_frames) + " frames a " + std::to_string(model.pyramid.levels) +
                      "-level pyramid needs");
  }
}

RunConfig parse_run_config(std::string_view json_text) {
  ojson root;
  try {
    root = ojson::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  JsonIn in{root, "", {}};
  visit(in, cfg);
  in.finish();
  cfg.resolve();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  ojson root = ojson::object();
  JsonOut out{root};
  RunConfig copy = cfg;
  visit(out, copy);
  return root.dump(2) + "\n";
}

std::string training_identity_json(const RunConfig& cfg) {
  ojson full = ojson::parse(run_config_to_json(cfg));
  ojson id = ojson::object();
  for (const char* key : {"seed", "protocol", "data", "model", "train"}) id[key] = full[key];
  return id.dump(2) + "\n";
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha256: out of memory");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha256: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

} // namespace tadiff
