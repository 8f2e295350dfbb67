// Backend abstraction for switch and fog-device configuration: queue
// and QoS management, flow programming, and container control. The
// SimulatedFabric is the reference implementation; a production driver
// would speak OVSDB/OpenFlow/Docker behind the same interface.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fognet/types.hpp"

namespace fognet::southbound {

struct Status {
  bool ok = true;
  std::string error;

  explicit operator bool() const { return ok; }
  static Status success() { return {}; }
  static Status fail(std::string msg) { return {false, std::move(msg)}; }
};

struct QueueSpec {
  NodeId switch_id;
  PortNo port = 0;
  std::uint64_t queue_id = 0;  // unique per (switch, port)
  Bps rate_limit = 0;
};

struct QosEntry {
  NodeId switch_id;
  PortNo port = 0;
  bool attached = false;  // placed on the port
  std::set<std::uint64_t> queues;
};

enum class PortMatch { SrcPort, DstPort, AnyPort };

struct FlowMatch {
  std::string src_addr;
  std::string dst_addr;
  Transport transport = Transport::Tcp;
  PortMatch port_field = PortMatch::DstPort;
  TransportPort port_value = 0;  // ignored for AnyPort
};

// One flow with two actions: output to `output_port` and enqueue on
// (output_port, queue_id).
struct FlowSpec {
  NodeId switch_id;
  FlowMatch match;
  PortNo output_port = 0;
  std::uint64_t queue_id = 0;
  int priority = 100;
  std::uint64_t cookie = 0;  // reservation identifier
};

struct ContainerSpec {
  std::string service_id;
  std::string image;
  Millicores cpu = 0;
  MemBytes memory = 0;
  TransportPort proxy_port = 0;
};

struct PacketHeader {
  std::string src_addr;
  std::string dst_addr;
  Transport transport = Transport::Tcp;
  TransportPort src_port = 0;
  TransportPort dst_port = 0;
};

struct MatchResult {
  bool matched = false;  // false: no flow matched, packet dropped
  PortNo output_port = 0;
  std::uint64_t queue_id = 0;
};

// Control-channel payload sizes per backend call, in bytes each way.
// The queue figures are the OVSDB costs; the rest are configurable
// estimates.
struct ByteCosts {
  std::uint64_t queue_up = 55;
  std::uint64_t queue_down = 1000;
  std::uint64_t flow_up = 150;
  std::uint64_t flow_down = 100;
  std::uint64_t container_up = 2000;
  std::uint64_t container_down = 500;
  std::uint64_t qos_up = 0;
  std::uint64_t qos_down = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual Status create_queue(const QueueSpec& q) = 0;
  virtual Status delete_queue(const NodeId& sw, PortNo port, std::uint64_t queue_id) = 0;
  virtual Status create_qos(const NodeId& sw, PortNo port) = 0;
  virtual Status delete_qos(const NodeId& sw, PortNo port) = 0;
  virtual Status place_queue_on_qos(const NodeId& sw, PortNo port, std::uint64_t queue_id) = 0;
  virtual Status remove_queue_from_qos(const NodeId& sw, PortNo port, std::uint64_t queue_id) = 0;
  virtual Status place_qos_on_port(const NodeId& sw, PortNo port) = 0;
  virtual Status remove_qos_from_port(const NodeId& sw, PortNo port) = 0;

  virtual Status create_flow(const FlowSpec& f) = 0;
  virtual Status delete_flow(const NodeId& sw, std::uint64_t cookie) = 0;

  virtual Status start_container(const NodeId& fog, const ContainerSpec& c) = 0;
  virtual Status stop_container(const std::string& service_id) = 0;

  // Full fabric state as a JSON document, for assertions and audits.
  // Byte accounting is not part of the state.
  virtual nlohmann::json dump() const = 0;
};

// Deterministic in-memory fabric. Tracks per-device byte accounting for
// the control-plane cost model and supports scripted fault injection.
class SimulatedFabric final : public Backend {
 public:
  struct DeviceBytes {
    std::uint64_t queue_up = 0, queue_down = 0;
    std::uint64_t flow_up = 0, flow_down = 0;
    std::uint64_t container_up = 0, container_down = 0;
    std::uint64_t qos_up = 0, qos_down = 0;

    std::uint64_t total_up() const { return queue_up + flow_up + container_up + qos_up; }
    std::uint64_t total_down() const { return queue_down + flow_down + container_down + qos_down; }
  };

  explicit SimulatedFabric(ByteCosts costs = {}) : costs_(costs) {}

  void register_switch(const NodeId& id, const std::vector<PortNo>& ports) {
    auto& sw = switches_[id];
    for (PortNo p : ports) sw.ports.insert(p);
  }

  void register_fog(const NodeId& id, Millicores total_cpu, MemBytes total_mem) {
    auto& fog = fogs_[id];
    fog.total_cpu = total_cpu;
    fog.total_mem = total_mem;
  }

  bool has_switch(const NodeId& id) const { return switches_.count(id) != 0; }
  bool has_fog(const NodeId& id) const { return fogs_.count(id) != 0; }

  // Fails the Nth mutating call from now (0 = the next one), then
  // disarms. Used to exercise rollback paths.
  void arm_fault(std::uint64_t nth_call) {
    fault_armed_ = true;
    fault_at_ = mutation_count_ + nth_call;
  }

  void disarm_fault() { fault_armed_ = false; }

  Status create_queue(const QueueSpec& q) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(q.switch_id);
    if (!sw) return Status::fail("unknown switch: " + q.switch_id);
    if (!sw->ports.count(q.port))
      return Status::fail("unknown port " + std::to_string(q.port) + " on " + q.switch_id);
    if (q.rate_limit == 0) return Status::fail("queue rate limit must be positive");
    account(q.switch_id).queue_up += costs_.queue_up;
    account(q.switch_id).queue_down += costs_.queue_down;
    sw->queues[{q.port, q.queue_id}] = q;  // create or update rate
    return Status::success();
  }

  Status delete_queue(const NodeId& sw_id, PortNo port, std::uint64_t queue_id) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->queues.find({port, queue_id});
    if (it == sw->queues.end()) return Status::fail("no such queue on " + sw_id);
    auto qos = sw->qos.find(port);
    if (qos != sw->qos.end() && qos->second.queues.count(queue_id))
      return Status::fail("queue still placed on a QoS entry");
    for (const auto& f : sw->flows)
      if (f.output_port == port && f.queue_id == queue_id)
        return Status::fail("queue still referenced by a flow");
    account(sw_id).queue_up += costs_.queue_up;
    account(sw_id).queue_down += costs_.queue_down;
    sw->queues.erase(it);
    return Status::success();
  }

  Status create_qos(const NodeId& sw_id, PortNo port) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    if (!sw->ports.count(port))
      return Status::fail("unknown port " + std::to_string(port) + " on " + sw_id);
    if (sw->qos.count(port)) return Status::fail("QoS entry already exists on port");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    sw->qos[port] = QosEntry{sw_id, port, false, {}};
    return Status::success();
  }

  Status delete_qos(const NodeId& sw_id, PortNo port) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->qos.find(port);
    if (it == sw->qos.end()) return Status::fail("no QoS entry on port");
    if (!it->second.queues.empty()) return Status::fail("QoS entry still holds queues");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    sw->qos.erase(it);
    return Status::success();
  }

  Status place_queue_on_qos(const NodeId& sw_id, PortNo port, std::uint64_t queue_id) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->qos.find(port);
    if (it == sw->qos.end()) return Status::fail("no QoS entry on port");
    if (!sw->queues.count({port, queue_id})) return Status::fail("no such queue on port");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    it->second.queues.insert(queue_id);
    return Status::success();
  }

  Status remove_queue_from_qos(const NodeId& sw_id, PortNo port, std::uint64_t queue_id) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->qos.find(port);
    if (it == sw->qos.end()) return Status::fail("no QoS entry on port");
    if (!it->second.queues.erase(queue_id))
      return Status::fail("queue not on this QoS entry");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    return Status::success();
  }

  Status place_qos_on_port(const NodeId& sw_id, PortNo port) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->qos.find(port);
    if (it == sw->qos.end()) return Status::fail("no QoS entry on port");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    it->second.attached = true;
    return Status::success();
  }

  Status remove_qos_from_port(const NodeId& sw_id, PortNo port) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    auto it = sw->qos.find(port);
    if (it == sw->qos.end()) return Status::fail("no QoS entry on port");
    account(sw_id).qos_up += costs_.qos_up;
    account(sw_id).qos_down += costs_.qos_down;
    it->second.attached = false;
    return Status::success();
  }

  Status create_flow(const FlowSpec& f) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(f.switch_id);
    if (!sw) return Status::fail("unknown switch: " + f.switch_id);
    if (!sw->ports.count(f.output_port))
      return Status::fail("unknown output port on " + f.switch_id);
    auto qos = sw->qos.find(f.output_port);
    if (!sw->queues.count({f.output_port, f.queue_id}) || qos == sw->qos.end() ||
        !qos->second.queues.count(f.queue_id))
      return Status::fail("enqueue target missing on " + f.switch_id);
    account(f.switch_id).flow_up += costs_.flow_up;
    account(f.switch_id).flow_down += costs_.flow_down;
    sw->flows.push_back(f);
    return Status::success();
  }

  // Removes every flow bearing the cookie on that switch.
  Status delete_flow(const NodeId& sw_id, std::uint64_t cookie) override {
    if (auto st = begin_mutation(); !st) return st;
    auto* sw = find_switch(sw_id);
    if (!sw) return Status::fail("unknown switch: " + sw_id);
    account(sw_id).flow_up += costs_.flow_up;
    account(sw_id).flow_down += costs_.flow_down;
    std::erase_if(sw->flows, [&](const FlowSpec& f) { return f.cookie == cookie; });
    return Status::success();
  }

  Status start_container(const NodeId& fog_id, const ContainerSpec& c) override {
    if (auto st = begin_mutation(); !st) return st;
    auto it = fogs_.find(fog_id);
    if (it == fogs_.end()) return Status::fail("unknown fog-device: " + fog_id);
    FogState& fog = it->second;
    if (fog.used_cpu + c.cpu > fog.total_cpu || fog.used_mem + c.memory > fog.total_mem)
      return Status::fail("insufficient container headroom on " + fog_id);
    if (fog.used_ports.count(c.proxy_port))
      return Status::fail("port " + std::to_string(c.proxy_port) + " already in use on " + fog_id);
    if (containers_.count(c.service_id))
      return Status::fail("duplicate service id: " + c.service_id);
    account(fog_id).container_up += costs_.container_up;
    account(fog_id).container_down += costs_.container_down;
    fog.containers[c.service_id] = c;
    fog.used_cpu += c.cpu;
    fog.used_mem += c.memory;
    fog.used_ports.insert(c.proxy_port);
    containers_[c.service_id] = fog_id;
    return Status::success();
  }

  Status stop_container(const std::string& service_id) override {
    if (auto st = begin_mutation(); !st) return st;
    auto it = containers_.find(service_id);
    if (it == containers_.end()) return Status::fail("unknown service: " + service_id);
    FogState& fog = fogs_.at(it->second);
    const ContainerSpec& c = fog.containers.at(service_id);
    account(it->second).container_up += costs_.container_up;
    account(it->second).container_down += costs_.container_down;
    fog.used_cpu -= c.cpu;
    fog.used_mem -= c.memory;
    fog.used_ports.erase(c.proxy_port);
    fog.containers.erase(service_id);
    containers_.erase(it);
    return Status::success();
  }

  // Read-only packet classification against the switch's flow table.
  // Higher priority wins; equal priority resolves to the lower cookie.
  MatchResult classify(const NodeId& sw_id, const PacketHeader& h) const {
    MatchResult res;
    auto it = switches_.find(sw_id);
    if (it == switches_.end()) return res;
    const FlowSpec* best = nullptr;
    for (const auto& f : it->second.flows) {
      if (!matches(f.match, h)) continue;
      if (!best || f.priority > best->priority ||
          (f.priority == best->priority && f.cookie < best->cookie))
        best = &f;
    }
    if (best) res = {true, best->output_port, best->queue_id};
    return res;
  }

  std::size_t flow_count(const NodeId& sw_id, std::uint64_t cookie) const {
    auto it = switches_.find(sw_id);
    if (it == switches_.end()) return 0;
    std::size_t n = 0;
    for (const auto& f : it->second.flows)
      if (f.cookie == cookie) ++n;
    return n;
  }

  std::size_t total_flows() const {
    std::size_t n = 0;
    for (const auto& [id, sw] : switches_) n += sw.flows.size();
    return n;
  }

  std::size_t total_queues() const {
    std::size_t n = 0;
    for (const auto& [id, sw] : switches_) n += sw.queues.size();
    return n;
  }

  const QueueSpec* find_queue(const NodeId& sw_id, PortNo port, std::uint64_t queue_id) const {
    auto it = switches_.find(sw_id);
    if (it == switches_.end()) return nullptr;
    auto q = it->second.queues.find({port, queue_id});
    return q == it->second.queues.end() ? nullptr : &q->second;
  }

  // Sum of queue rate limits hung off one egress port.
  Bps port_rate_sum(const NodeId& sw_id, PortNo port) const {
    auto it = switches_.find(sw_id);
    if (it == switches_.end()) return 0;
    Bps sum = 0;
    for (const auto& [key, q] : it->second.queues)
      if (key.first == port) sum += q.rate_limit;
    return sum;
  }

  const std::map<std::string, ContainerSpec>* containers_on(const NodeId& fog_id) const {
    auto it = fogs_.find(fog_id);
    return it == fogs_.end() ? nullptr : &it->second.containers;
  }

  const DeviceBytes& accounting(const NodeId& device) const {
    static const DeviceBytes kZero;
    auto it = bytes_.find(device);
    return it == bytes_.end() ? kZero : it->second;
  }

  DeviceBytes accounting_total() const {
    DeviceBytes sum;
    for (const auto& [id, b] : bytes_) {
      sum.queue_up += b.queue_up; sum.queue_down += b.queue_down;
      sum.flow_up += b.flow_up; sum.flow_down += b.flow_down;
      sum.container_up += b.container_up; sum.container_down += b.container_down;
      sum.qos_up += b.qos_up; sum.qos_down += b.qos_down;
    }
    return sum;
  }

  nlohmann::json dump() const override {
    nlohmann::json j;
    j["switches"] = nlohmann::json::object();
    for (const auto& [id, sw] : switches_) {
      nlohmann::json s;
      s["ports"] = sw.ports;
      s["queues"] = nlohmann::json::array();
      for (const auto& [key, q] : sw.queues)
        s["queues"].push_back({{"port", q.port},
                               {"queue_id", q.queue_id},
                               {"rate_limit", q.rate_limit}});
      s["qos"] = nlohmann::json::array();
      for (const auto& [port, e] : sw.qos)
        s["qos"].push_back({{"port", port},
                            {"attached", e.attached},
                            {"queues", e.queues}});
      s["flows"] = nlohmann::json::array();
      std::vector<FlowSpec> flows = sw.flows;
      std::sort(flows.begin(), flows.end(), [](const FlowSpec& a, const FlowSpec& b) {
        if (a.cookie != b.cookie) return a.cookie < b.cookie;
        if (a.output_port != b.output_port) return a.output_port < b.output_port;
        return a.queue_id < b.queue_id;
      });
      for (const auto& f : flows)
        s["flows"].push_back({{"src_addr", f.match.src_addr},
                              {"dst_addr", f.match.dst_addr},
                              {"transport", to_string(f.match.transport)},
                              {"port_field", f.match.port_field == PortMatch::SrcPort ? "src"
                                             : f.match.port_field == PortMatch::DstPort ? "dst"
                                                                                        : "any"},
                              {"port_value", f.match.port_value},
                              {"output_port", f.output_port},
                              {"queue_id", f.queue_id},
                              {"priority", f.priority},
                              {"cookie", f.cookie}});
      j["switches"][id] = std::move(s);
    }
    j["fogs"] = nlohmann::json::object();
    for (const auto& [id, fog] : fogs_) {
      nlohmann::json f;
      f["total_cpu_mcores"] = fog.total_cpu;
      f["total_memory_bytes"] = fog.total_mem;
      f["containers"] = nlohmann::json::array();
      for (const auto& [sid, c] : fog.containers)
        f["containers"].push_back({{"service_id", sid},
                                   {"image", c.image},
                                   {"cpu_mcores", c.cpu},
                                   {"memory_bytes", c.memory},
                                   {"proxy_port", c.proxy_port}});
      j["fogs"][id] = std::move(f);
    }
    return j;
  }

 private:
  struct SwitchState {
    std::set<PortNo> ports;
    std::map<std::pair<PortNo, std::uint64_t>, QueueSpec> queues;
    std::map<PortNo, QosEntry> qos;
    std::vector<FlowSpec> flows;
  };

  struct FogState {
    Millicores total_cpu = 0;
    MemBytes total_mem = 0;
    Millicores used_cpu = 0;
    MemBytes used_mem = 0;
    std::set<TransportPort> used_ports;
    std::map<std::string, ContainerSpec> containers;
  };

  static bool matches(const FlowMatch& m, const PacketHeader& h) {
    if (m.src_addr != h.src_addr || m.dst_addr != h.dst_addr) return false;
    if (m.transport != h.transport) return false;
    switch (m.port_field) {
      case PortMatch::SrcPort: return h.src_port == m.port_value;
      case PortMatch::DstPort: return h.dst_port == m.port_value;
      case PortMatch::AnyPort: return true;
    }
    return false;
  }

  Status begin_mutation() {
    const std::uint64_t n = mutation_count_++;
    if (fault_armed_ && n == fault_at_) {
      fault_armed_ = false;
      return Status::fail("injected fault");
    }
    return Status::success();
  }

  SwitchState* find_switch(const NodeId& id) {
    auto it = switches_.find(id);
    return it == switches_.end() ? nullptr : &it->second;
  }

  DeviceBytes& account(const NodeId& id) { return bytes_[id]; }

  ByteCosts costs_;
  std::map<NodeId, SwitchState> switches_;
  std::map<NodeId, FogState> fogs_;
  std::map<std::string, NodeId> containers_;  // service id -> fog
  std::map<NodeId, DeviceBytes> bytes_;
  std::uint64_t mutation_count_ = 0;
  bool fault_armed_ = false;
  std::uint64_t fault_at_ = 0;
};

}  // namespace fognet::southbound
