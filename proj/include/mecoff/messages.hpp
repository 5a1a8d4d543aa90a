// Typed device <-> trainer messages with a length-prefixed, versioned wire
// encoding, so a networked deployment can replace the in-process router
// without touching agent logic.
#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "mecoff/observation.hpp"
#include "mecoff/replay.hpp"

namespace mecoff {

struct Message {
  enum class Type : std::uint8_t {
    parameter_request = 1,
    parameter_response = 2,
    experience_upload = 3,
  };

  Type type = Type::parameter_request;
  int device = 0;
  std::string params_blob;  // parameter_response
  int episode = 0;          // experience_upload idempotence key
  int birth_slot = 0;       // experience_upload idempotence key
  Experience experience;    // experience_upload

  static Message make_parameter_request(int device) {
    Message m;
    m.type = Type::parameter_request;
    m.device = device;
    return m;
  }
  static Message make_parameter_response(int device, std::string blob) {
    Message m;
    m.type = Type::parameter_response;
    m.device = device;
    m.params_blob = std::move(blob);
    return m;
  }
  static Message make_experience_upload(int device, int episode, int birth_slot,
                                        Experience e) {
    Message m;
    m.type = Type::experience_upload;
    m.device = device;
    m.episode = episode;
    m.birth_slot = birth_slot;
    m.experience = std::move(e);
    return m;
  }
};

namespace wire {

inline constexpr std::uint8_t kVersion = 1;

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
inline void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_i32(std::string& out, std::int32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_f64(std::string& out, double v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("truncated message");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::int32_t i32() {
    need(4);
    std::int32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline void put_observation(std::string& out, const Observation& obs) {
  put_f64(out, obs.task_size_mbits);
  put_i32(out, obs.comp_wait_slots);
  put_i32(out, obs.tran_wait_slots);
  put_u32(out, static_cast<std::uint32_t>(obs.num_edges));
  put_u32(out, static_cast<std::uint32_t>(obs.t_step));
  for (double q : obs.edge_queue_mbits) put_f64(out, q);
  for (double h : obs.load_history) put_f64(out, h);
}

inline Observation get_observation(Reader& r) {
  Observation obs;
  obs.task_size_mbits = r.f64();
  obs.comp_wait_slots = r.i32();
  obs.tran_wait_slots = r.i32();
  obs.num_edges = static_cast<int>(r.u32());
  obs.t_step = static_cast<int>(r.u32());
  if (obs.num_edges < 0 || obs.t_step < 0) throw std::runtime_error("bad observation shape");
  obs.edge_queue_mbits.resize(obs.num_edges);
  for (double& q : obs.edge_queue_mbits) q = r.f64();
  obs.load_history.resize(static_cast<std::size_t>(obs.t_step) * obs.num_edges);
  for (double& h : obs.load_history) h = r.f64();
  return obs;
}

inline void put_experience(std::string& out, const Experience& e) {
  put_observation(out, e.state);
  put_u8(out, e.action.local ? 1 : 0);
  put_i32(out, e.action.local ? -1 : e.action.edge);
  put_f64(out, e.cost);
  put_observation(out, e.next_state);
  put_u8(out, e.terminal ? 1 : 0);
}

inline Experience get_experience(Reader& r) {
  Experience e;
  e.state = get_observation(r);
  bool local = r.u8() != 0;
  int edge = r.i32();
  e.action = local ? ActionChoice::make_local() : ActionChoice::make_offload(edge);
  e.cost = r.f64();
  e.next_state = get_observation(r);
  e.terminal = r.u8() != 0;
  return e;
}

}  // namespace wire

// Frame: u32 payload length, then version, type, and the fields in
// declaration order.
inline std::string encode_message(const Message& m) {
  std::string body;
  wire::put_u8(body, wire::kVersion);
  wire::put_u8(body, static_cast<std::uint8_t>(m.type));
  wire::put_i32(body, m.device);
  switch (m.type) {
    case Message::Type::parameter_request:
      break;
    case Message::Type::parameter_response:
      wire::put_u32(body, static_cast<std::uint32_t>(m.params_blob.size()));
      body += m.params_blob;
      break;
    case Message::Type::experience_upload:
      wire::put_i32(body, m.episode);
      wire::put_i32(body, m.birth_slot);
      wire::put_experience(body, m.experience);
      break;
  }
  std::string out;
  wire::put_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

inline Message decode_message(const std::string& frame) {
  wire::Reader r{frame};
  std::uint32_t len = r.u32();
  if (frame.size() != len + 4) throw std::runtime_error("message length prefix mismatch");
  if (r.u8() != wire::kVersion) throw std::runtime_error("unsupported message version");
  auto type = static_cast<Message::Type>(r.u8());
  Message m;
  m.type = type;
  m.device = r.i32();
  switch (type) {
    case Message::Type::parameter_request:
      break;
    case Message::Type::parameter_response: {
      std::uint32_t n = r.u32();
      m.params_blob = r.bytes(n);
      break;
    }
    case Message::Type::experience_upload:
      m.episode = r.i32();
      m.birth_slot = r.i32();
      m.experience = wire::get_experience(r);
      break;
    default:
      throw std::runtime_error("unknown message type");
  }
  if (r.pos != frame.size()) throw std::runtime_error("trailing bytes in message");
  return m;
}

}  // namespace mecoff
