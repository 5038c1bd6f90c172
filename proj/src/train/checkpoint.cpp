// SPDX-License-Identifier: Apache-2.0
#include "train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tadiff {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'C', 'K'};

class Writer {
public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str32(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw DataError("checkpoint: truncated at byte " + std::to_string(pos_) + " while reading " + what + " (" +
                      std::to_string(n) + " bytes needed, " + std::to_string(b_.size() - pos_) + " left)");
    }
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

} // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.raw(kMagic, 4);
  w.uint(Checkpoint::kVersion);
  w.uint(static_cast<std::uint64_t>(ck.config_json.size()));
  w.raw(ck.config_json.data(), ck.config_json.size());
  w.uint(ck.epochs_done);
  w.uint(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& p : ck.params) {
    if (shape_numel(p.shape) != p.values.size()) throw ShapeError("checkpoint: parameter " + p.name + " size mismatch");
    w.str32(p.name);
    w.uint(static_cast<std::uint32_t>(p.shape.size()));
    for (auto d : p.shape) w.uint(static_cast<std::uint64_t>(d));
    for (double v : p.values) w.f64(v);
  }
  w.uint(static_cast<std::uint8_t>(ck.optimizer ? 1 : 0));
  if (ck.optimizer) {
    const auto& o = *ck.optimizer;
    if (o.m.size() != ck.params.size() || o.v.size() != ck.params.size()) {
      throw ShapeError("checkpoint: optimizer state does not match parameter count");
    }
    w.uint(static_cast<std::uint64_t>(o.step));
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      if (o.m[i].size() != ck.params[i].values.size() || o.v[i].size() != ck.params[i].values.size()) {
        throw ShapeError("checkpoint: optimizer moments for " + ck.params[i].name + " have the wrong size");
      }
      for (double x : o.m[i]) w.f64(x);
      for (double x : o.v[i]) w.f64(x);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw DataError("checkpoint: bad magic at byte 0 (expected TDCK)");
  const auto version = r.uint<std::uint16_t>("version");
  if (version != Checkpoint::kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version) + " at byte 4");
  }
  Checkpoint ck;
  const auto cfg_len = r.uint<std::uint64_t>("config length");
  ck.config_json = r.bytes(cfg_len, "config");
  ck.epochs_done = r.uint<std::uint64_t>("epoch count");
  const auto count = r.uint<std::uint32_t>("parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor p;
    p.name = r.bytes(r.uint<std::uint32_t>("name length"), "name");
    const auto rank = r.uint<std::uint32_t>("rank");
    if (rank > 8) throw DataError("checkpoint: implausible rank " + std::to_string(rank) + " for " + p.name);
    for (std::uint32_t k = 0; k < rank; ++k) p.shape.push_back(static_cast<std::size_t>(r.uint<std::uint64_t>("dim")));
    const std::size_t n = shape_numel(p.shape);
    r.need(n * 8, "parameter values");
    p.values.resize(n);
    for (auto& v : p.values) v = r.f64("parameter value");
    ck.params.push_back(std::move(p));
  }
  const auto has_opt = r.uint<std::uint8_t>("optimizer flag");
  if (has_opt > 1) throw DataError("checkpoint: bad optimizer flag at byte " + std::to_string(r.offset() - 1));
  if (has_opt) {
    OptimizerState o;
    o.step = static_cast<std::int64_t>(r.uint<std::uint64_t>("optimizer step"));
    for (const auto& p : ck.params) {
      r.need(p.values.size() * 16, "optimizer moments");
      std::vector<double> m(p.values.size()), v(p.values.size());
      for (auto& x : m) x = r.f64("moment");
      for (auto& x : v) x = r.f64("moment");
      o.m.push_back(std::move(m));
      o.v.push_back(std::move(v));
    }
    ck.optimizer = std::move(o);
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes after offset " + std::to_string(r.offset()));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const std::string bytes = encode_checkpoint(ck);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<NamedTensor> snapshot_parameters(const ParameterStore& store) {
  std::vector<NamedTensor> out;
  for (const auto& [name, t] : store.entries()) {
    const auto d = t.data();
    out.push_back({name, t.shape(), std::vector<double>(d.begin(), d.end())});
  }
  return out;
}

void restore_parameters(ParameterStore& store, const std::vector<NamedTensor>& params) {
  const auto& entries = store.entries();
  if (entries.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(params.size()) + " parameters, model expects " +
                    std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, t] = entries[i];
    if (params[i].name != name) throw DataError("checkpoint parameter #" + std::to_string(i) + " is " + params[i].name + ", model expects " + name);
    if (params[i].shape != t.shape()) {
      throw DataError("checkpoint parameter " + name + " has shape " + shape_str(params[i].shape) + ", model expects " +
                      shape_str(t.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = entries[i].second;
    std::copy(params[i].values.begin(), params[i].values.end(), t.mutable_data().begin());
  }
}

} // namespace tadiff
