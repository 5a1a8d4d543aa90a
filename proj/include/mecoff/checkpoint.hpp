// Checkpoint files: the eval network parameters plus the update counter.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mecoff/neural.hpp"

namespace mecoff {

inline constexpr std::uint32_t kCheckpointMagic = 0x4d434b50;  // "MCKP"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetParams params;
  std::int64_t update_count = 0;

  Checkpoint() : params(zeros_like(NetConfig{})) {}
  Checkpoint(NetParams p, std::int64_t updates) : params(std::move(p)), update_count(updates) {}
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  detail::put_u32(out, kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.update_count & 0xffffffffull));
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.update_count >> 32));
  out += serialize_params(ckpt.params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string blob = ss.str();
  std::size_t pos = 0;
  if (detail::get_u32(blob, pos) != kCheckpointMagic)
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (detail::get_u32(blob, pos) != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version: " + path);
  std::uint32_t lo = detail::get_u32(blob, pos);
  std::uint32_t hi = detail::get_u32(blob, pos);
  Checkpoint ckpt;
  ckpt.update_count = static_cast<std::int64_t>((static_cast<std::uint64_t>(hi) << 32) | lo);
  ckpt.params = deserialize_params(blob.substr(pos));
  return ckpt;
}

}  // namespace mecoff
