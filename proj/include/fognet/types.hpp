// Basic identifiers, units, and error types shared across the library.
//
// Bandwidth is carried as bits/second in unsigned 64-bit integers and
// processing capacity as integral millicores so that resource ledgers
// stay exact under arbitrary allocate/release sequences.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fognet {

using NodeId = std::string;
using Bps = std::uint64_t;           // bandwidth, bits per second
using Millicores = std::int64_t;     // processing capacity, 1/1000 CPU core
using MemBytes = std::uint64_t;      // memory capacity, bytes
using PortNo = std::uint32_t;        // switch port number
using TransportPort = std::uint16_t; // L4 port number

enum class NodeKind { Unknown, EndDevice, FogDevice, Switch, Controller };

enum class Transport { Tcp, Udp, Sctp };

constexpr Bps kbps(std::uint64_t v) { return v * 1000ull; }
constexpr Bps mbps(std::uint64_t v) { return v * 1000000ull; }
constexpr Bps gbps(std::uint64_t v) { return v * 1000000000ull; }
constexpr MemBytes mib(std::uint64_t v) { return v << 20; }
constexpr MemBytes gib(std::uint64_t v) { return v << 30; }

// Whole cores to millicores; fractional core counts go through
// millicores_from_cores to avoid float drift in the ledgers.
constexpr Millicores cores(std::int64_t v) { return v * 1000; }

inline Millicores millicores_from_cores(double c) {
  return static_cast<Millicores>(c * 1000.0 + (c >= 0 ? 0.5 : -0.5));
}

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::EndDevice: return "end";
    case NodeKind::FogDevice: return "fog";
    case NodeKind::Switch: return "switch";
    case NodeKind::Controller: return "controller";
    case NodeKind::Unknown: break;
  }
  return "unknown";
}

inline const char* to_string(Transport t) {
  switch (t) {
    case Transport::Udp: return "udp";
    case Transport::Sctp: return "sctp";
    case Transport::Tcp: break;
  }
  return "tcp";
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural misuse of the topology (dangling link endpoints, ledger
// underflow, conflicting device registration).
class TopologyError : public Error {
 public:
  using Error::Error;
};

// Contract violations on the k-ary heap (duplicate destination push,
// decrease-key on an absent entry, non-decreasing new key).
class HeapError : public Error {
 public:
  using Error::Error;
};

// A peer spoke out of turn: unregistered sender, malformed message for
// the endpoint, out-of-range report values.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace fognet
