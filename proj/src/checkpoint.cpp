#include "mchess/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>

#include "mchess/errors.hpp"
#include "mchess/io.hpp"

namespace mchess {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'K', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string& data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}
  void need(std::size_t n) {
    if (pos_ + n > end_) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const NetworkSpec& s = c.net.spec();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(s.geometry.width);
  w.u32(s.geometry.height);
  w.u32(s.blocks);
  w.u32(s.filters);
  w.u32(s.residual ? 1 : 0);
  w.u32(s.value_hidden);
  w.u32(s.policy_size);
  w.u32(s.input_channels);
  w.u64(c.iteration);
  w.u8(c.rng_state ? 1 : 0);
  if (c.rng_state) w.str(*c.rng_state);
  w.str(serialize_variant(c.variant));
  w.u64(c.net.params().size());
  w.u64(c.net.running_stats().size());
  for (float v : c.net.params()) w.f32(v);
  for (float v : c.net.running_stats()) w.f32(v);
  w.u32(crc_of(w.data().data(), w.data().size()));
  return std::move(w.data());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "not a checkpoint (bad magic or too short)");
  }
  Reader r(bytes, bytes.size() - 4);
  r.need(4);
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                               std::to_string(kCheckpointVersion));
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t{static_cast<std::uint8_t>(bytes[body + i])} << (8 * i);
  if (stored != crc_of(bytes.data(), body)) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint checksum mismatch");

  NetworkSpec s;
  s.geometry.width = static_cast<int>(r.u32());
  s.geometry.height = static_cast<int>(r.u32());
  s.blocks = static_cast<int>(r.u32());
  s.filters = static_cast<int>(r.u32());
  s.residual = r.u32() != 0;
  s.value_hidden = static_cast<int>(r.u32());
  s.policy_size = static_cast<int>(r.u32());
  s.input_channels = static_cast<int>(r.u32());
  Checkpoint c;
  c.iteration = r.u64();
  if (r.u8()) c.rng_state = r.str();
  try {
    c.variant = parse_variant(r.str());
    validate_spec(s);
    c.net = Network(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint header invalid: " + e.detail());
  }
  const std::uint64_t n_params = r.u64(), n_running = r.u64();
  if (n_params != c.net.params().size() || n_running != c.net.running_stats().size()) {
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint payload size does not match its spec");
  }
  for (float& v : c.net.params()) v = r.f32();
  for (float& v : c.net.running_stats()) v = r.f32();
  if (r.pos() != body) throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) { write_file_atomic(path, serialize_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return deserialize_checkpoint(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path + ": " + e.detail());
  }
}

Checkpoint load_checkpoint(const std::string& path, const NetworkSpec& expected) {
  Checkpoint c = load_checkpoint(path);
  if (!(c.net.spec() == expected)) {
    throw Error(ErrorCode::SpecMismatch, path + ": checkpoint spec " + describe_spec(c.net.spec()) +
                                             " does not match " + describe_spec(expected));
  }
  return c;
}

}  // namespace mchess
