// Wire protocol: message structs and the length-prefixed codec used on
// all three controller endpoints (greeting, service, shutdown).
//
// Framing is a 4-octet big-endian unsigned payload length followed by
// exactly that many octets of UTF-8 JSON. Every payload carries a
// mandatory "type" discriminator. Frames above 1 MiB are rejected.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fognet/types.hpp"

namespace fognet::protocol {

constexpr std::size_t kMaxFrameBytes = 1u << 20;

// Boot-time registration binding a node id to a device type. Fog
// greetings additionally declare total capacities.
struct Greeting {
  NodeId node_id;
  NodeKind device_type = NodeKind::Unknown;  // EndDevice or FogDevice
  Millicores total_processing = 0;
  MemBytes total_memory = 0;
  std::string address;
};

struct ServiceRequest {
  std::string request_id;
  NodeId node_id;  // requesting end-device
  std::string image;
  Bps bw = 0;
  Millicores processing = 0;
  MemBytes memory = 0;
  std::optional<TransportPort> desired_port;
  Transport transport = Transport::Tcp;
};

enum class FailureReason { NoServicer, NoPath, DesiredPortBusy, BackendError };

struct ServiceResponse {
  std::string request_id;
  bool success = false;
  // success payload
  std::string fog_address;
  TransportPort proxy_port = 0;
  std::string service_id;
  // failure payload
  FailureReason reason = FailureReason::NoServicer;
};

struct ShutdownRequest {
  std::string service_id;
};

struct ShutdownResponse {
  std::string service_id;
  bool ok = false;  // false: unknown service
};

struct ResourceReport {
  NodeId fog_id;
  double processor_utilization = 0.0;  // fraction 0..1
  double memory_utilization = 0.0;     // fraction 0..1
  double timestamp = 0.0;
};

using Message = std::variant<Greeting, ServiceRequest, ServiceResponse,
                             ShutdownRequest, ShutdownResponse, ResourceReport>;

inline const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::NoPath: return "no_path";
    case FailureReason::DesiredPortBusy: return "desired_port_busy";
    case FailureReason::BackendError: return "backend_error";
    case FailureReason::NoServicer: break;
  }
  return "no_servicer";
}

enum class DecodeStatus { Ok, NeedMoreData, Error };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Error;
  std::size_t consumed = 0;  // octets removed from the stream; 0 unless Ok
  std::optional<Message> message;
  std::string error;
};

namespace detail {

using nlohmann::json;

inline json to_json(const Greeting& g) {
  json j{{"type", "greeting"},
         {"node_id", g.node_id},
         {"device_type", to_string(g.device_type)},
         {"address", g.address}};
  if (g.device_type == NodeKind::FogDevice) {
    j["total_processing_mcores"] = g.total_processing;
    j["total_memory_bytes"] = g.total_memory;
  }
  return j;
}

inline json to_json(const ServiceRequest& r) {
  json j{{"type", "service_request"},
         {"request_id", r.request_id},
         {"node_id", r.node_id},
         {"image", r.image},
         {"bw_bps", r.bw},
         {"processing_mcores", r.processing},
         {"memory_bytes", r.memory},
         {"transport", to_string(r.transport)}};
  if (r.desired_port) j["desired_port"] = *r.desired_port;
  return j;
}

inline json to_json(const ServiceResponse& r) {
  json j{{"type", "service_response"}, {"request_id", r.request_id}};
  if (r.success) {
    j["status"] = "success";
    j["fog_address"] = r.fog_address;
    j["proxy_port"] = r.proxy_port;
    j["service_id"] = r.service_id;
  } else {
    j["status"] = "failure";
    j["reason"] = to_string(r.reason);
  }
  return j;
}

inline json to_json(const ShutdownRequest& r) {
  return json{{"type", "shutdown_request"}, {"service_id", r.service_id}};
}

inline json to_json(const ShutdownResponse& r) {
  return json{{"type", "shutdown_response"},
              {"service_id", r.service_id},
              {"response", r.ok ? "ok" : "unknown_service"}};
}

inline json to_json(const ResourceReport& r) {
  return json{{"type", "resource_report"},
              {"fog_id", r.fog_id},
              {"processor_utilization", r.processor_utilization},
              {"memory_utilization", r.memory_utilization},
              {"timestamp", r.timestamp}};
}

inline NodeKind parse_device_type(const std::string& s) {
  if (s == "end") return NodeKind::EndDevice;
  if (s == "fog") return NodeKind::FogDevice;
  throw Error("unknown device_type: " + s);
}

inline Transport parse_transport(const std::string& s) {
  if (s == "tcp") return Transport::Tcp;
  if (s == "udp") return Transport::Udp;
  if (s == "sctp") return Transport::Sctp;
  throw Error("unknown transport: " + s);
}

inline FailureReason parse_reason(const std::string& s) {
  if (s == "no_servicer") return FailureReason::NoServicer;
  if (s == "no_path") return FailureReason::NoPath;
  if (s == "desired_port_busy") return FailureReason::DesiredPortBusy;
  if (s == "backend_error") return FailureReason::BackendError;
  throw Error("unknown failure reason: " + s);
}

inline Message from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "greeting") {
    Greeting g;
    g.node_id = j.at("node_id").get<std::string>();
    g.device_type = parse_device_type(j.at("device_type").get<std::string>());
    g.address = j.value("address", std::string{});
    if (g.device_type == NodeKind::FogDevice) {
      // fog greetings must carry both capacity fields
      g.total_processing = j.at("total_processing_mcores").get<Millicores>();
      g.total_memory = j.at("total_memory_bytes").get<MemBytes>();
      if (g.total_processing <= 0) throw Error("fog greeting with no processing capacity");
    }
    return g;
  }
  if (type == "service_request") {
    ServiceRequest r;
    r.request_id = j.at("request_id").get<std::string>();
    r.node_id = j.at("node_id").get<std::string>();
    r.image = j.at("image").get<std::string>();
    r.bw = j.at("bw_bps").get<Bps>();
    r.processing = j.at("processing_mcores").get<Millicores>();
    r.memory = j.at("memory_bytes").get<MemBytes>();
    r.transport = parse_transport(j.at("transport").get<std::string>());
    if (j.contains("desired_port"))
      r.desired_port = j.at("desired_port").get<TransportPort>();
    if (r.bw == 0 || r.processing <= 0 || r.memory == 0)
      throw Error("service_request with non-positive resource demand");
    return r;
  }
  if (type == "service_response") {
    ServiceResponse r;
    r.request_id = j.at("request_id").get<std::string>();
    r.success = j.at("status").get<std::string>() == "success";
    if (r.success) {
      r.fog_address = j.at("fog_address").get<std::string>();
      r.proxy_port = j.at("proxy_port").get<TransportPort>();
      r.service_id = j.at("service_id").get<std::string>();
    } else {
      r.reason = parse_reason(j.at("reason").get<std::string>());
    }
    return r;
  }
  if (type == "shutdown_request") {
    return ShutdownRequest{j.at("service_id").get<std::string>()};
  }
  if (type == "shutdown_response") {
    ShutdownResponse r;
    r.service_id = j.at("service_id").get<std::string>();
    const std::string resp = j.at("response").get<std::string>();
    if (resp != "ok" && resp != "unknown_service")
      throw Error("unknown shutdown response: " + resp);
    r.ok = resp == "ok";
    return r;
  }
  if (type == "resource_report") {
    ResourceReport r;
    r.fog_id = j.at("fog_id").get<std::string>();
    r.processor_utilization = j.at("processor_utilization").get<double>();
    r.memory_utilization = j.at("memory_utilization").get<double>();
    r.timestamp = j.value("timestamp", 0.0);
    if (r.processor_utilization < 0.0 || r.processor_utilization > 1.0 ||
        r.memory_utilization < 0.0 || r.memory_utilization > 1.0)
      throw Error("utilization fraction out of [0,1]");
    return r;
  }
  throw Error("unknown message type: " + type);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Message& msg) {
  const std::string body =
      std::visit([](const auto& m) { return detail::to_json(m); }, msg).dump();
  if (body.size() > kMaxFrameBytes) throw Error("frame exceeds 1 MiB bound");
  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// Decodes one frame from the front of `buf`. Never inspects bytes past
// the declared frame length, and consumes nothing unless a complete
// frame was decoded.
inline DecodeResult decode(std::span<const std::uint8_t> buf) {
  DecodeResult res;
  if (buf.size() < 4) {
    res.status = DecodeStatus::NeedMoreData;
    return res;
  }
  const std::uint32_t n = (std::uint32_t{buf[0]} << 24) |
                          (std::uint32_t{buf[1]} << 16) |
                          (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
  if (n > kMaxFrameBytes) {
    res.error = "declared frame length exceeds 1 MiB bound";
    return res;
  }
  if (n == 0) {
    res.error = "empty frame carries no type discriminator";
    return res;
  }
  if (buf.size() < 4u + n) {
    res.status = DecodeStatus::NeedMoreData;
    return res;
  }
  try {
    const auto j = nlohmann::json::parse(buf.begin() + 4, buf.begin() + 4 + n);
    res.message = detail::from_json(j);
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }
  res.status = DecodeStatus::Ok;
  res.consumed = 4u + n;
  return res;
}

}  // namespace fognet::protocol
