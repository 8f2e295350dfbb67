// The controller runtime: device registration, service and shutdown
// request handling, fog telemetry, the proxy-port pool, and the
// allocation ledger. One global lock serializes every operation that
// touches shared resource state; concurrent callers queue FIFO.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fognet/protocol.hpp"
#include "fognet/raa.hpp"
#include "fognet/southbound.hpp"
#include "fognet/topology.hpp"
#include "fognet/types.hpp"

namespace fognet {

struct OrchestratorConfig {
  // Bandwidth set aside on every link at startup for controller<->node
  // traffic; excluded from allocatable capacity. Clamped to the link
  // total on undersized links.
  Bps control_reservation_bw = mbps(50);
  TransportPort port_range_lo = 49152;
  TransportPort port_range_hi = 65535;
  int flow_priority = 100;
};

struct ReconcileReport {
  bool ok = true;
  std::string detail;
};

enum class PortAssignStatus { Ok, DesiredBusy, Exhausted };

struct PortAssignResult {
  PortAssignStatus status = PortAssignStatus::Ok;
  TransportPort port = 0;
};

// Registers a topology device with the simulated fabric: switches with
// their egress ports, fog-devices with their capacities.
inline void seed_fabric_device(southbound::SimulatedFabric& fabric, const Topology& t,
                               const NodeId& id) {
  const Node& n = t.node(id);
  if (n.kind == NodeKind::Switch) {
    std::vector<PortNo> ports;
    for (const NodeId& next : t.out_neighbors(id))
      ports.push_back(t.link(id, next).src_port);
    fabric.register_switch(id, ports);
  } else if (n.kind == NodeKind::FogDevice && n.compute) {
    fabric.register_fog(id, n.compute->total_processing, n.compute->total_memory);
  }
}

inline void seed_fabric(southbound::SimulatedFabric& fabric, const Topology& t) {
  for (const auto& [id, node] : t.nodes()) seed_fabric_device(fabric, t, id);
}

class Orchestrator {
 public:
  using DeviceSeeder = std::function<void(const Topology&, const NodeId&)>;

  struct TraceEntry {
    std::string label;
    std::uint64_t enter_seq = 0;
    std::uint64_t exit_seq = 0;
  };

  Orchestrator(Topology topology, southbound::Backend& backend,
               OrchestratorConfig config = {})
      : topo_(std::move(topology)), backend_(backend), cfg_(config) {}

  void set_device_seeder(DeviceSeeder seeder) { seeder_ = std::move(seeder); }

  // Charges the startup control-traffic reservation on every link and
  // creates one QoS entry per switch egress port.
  void bootstrap() {
    std::lock_guard lk(mu_);
    if (seeder_)
      for (const auto& [id, node] : topo_.nodes()) seeder_(topo_, id);
    for (const auto& [key, link] : topo_.links()) charge_control_locked(key);
    for (const auto& [id, node] : topo_.nodes())
      if (node.kind == NodeKind::Switch) setup_switch_qos_locked(id);
  }

  southbound::Status handle_greeting(const protocol::Greeting& g) {
    std::lock_guard lk(mu_);
    try {
      register_greeting(topo_, g);
    } catch (const Error& e) {
      return southbound::Status::fail(e.what());
    }
    if (seeder_) seeder_(topo_, g.node_id);
    return southbound::Status::success();
  }

  protocol::ServiceResponse service_end_device(const protocol::ServiceRequest& req,
                                               const NodeId& from) {
    std::lock_guard lk(mu_);
    const std::size_t trace_idx = trace_enter_locked("service:" + req.request_id);
    protocol::ServiceResponse resp;
    resp.request_id = req.request_id;

    const Node* sender = topo_.find_node(from);
    if (!sender || sender->kind != NodeKind::EndDevice) {
      trace_exit_locked(trace_idx);
      throw ProtocolViolation("service request from unregistered sender: " + from);
    }
    if (req.bw == 0 || req.processing <= 0 || req.memory == 0) {
      trace_exit_locked(trace_idx);
      throw ProtocolViolation("non-positive resource demand in request " + req.request_id);
    }

    raa::ResourceRequest r;
    r.end_device = from;
    r.bw = req.bw;
    r.processing = req.processing;
    r.memory = req.memory;
    r.image = req.image;
    r.desired_port = req.desired_port;
    r.transport = req.transport;

    const std::set<NodeId> servicers = raa::find_request_servicers(topo_, r);
    if (servicers.empty()) {
      resp.reason = protocol::FailureReason::NoServicer;
      trace_exit_locked(trace_idx);
      return resp;
    }
    const raa::PathTree tree = raa::shortest_paths(topo_, from, r);
    const std::optional<NodeId> fog = raa::select_fog(tree, servicers);
    if (!fog) {
      resp.reason = protocol::FailureReason::NoPath;
      trace_exit_locked(trace_idx);
      return resp;
    }

    const PortAssignResult port = assign_proxy_port_locked(*fog, req.desired_port);
    if (port.status != PortAssignStatus::Ok) {
      resp.reason = port.status == PortAssignStatus::DesiredBusy
                        ? protocol::FailureReason::DesiredPortBusy
                        : protocol::FailureReason::BackendError;
      trace_exit_locked(trace_idx);
      return resp;
    }

    ++service_seq_;
    const std::string service_id = "svc-" + std::to_string(service_seq_);
    raa::AllocationPlan plan =
        raa::build_plan(topo_, tree, r, *fog, port.port, service_seq_);
    for (auto& f : plan.flows) f.priority = cfg_.flow_priority;

    raa::charge_plan(topo_, plan);
    if (auto st = apply_plan_locked(plan, service_id); !st) {
      raa::release_plan(topo_, plan);
      release_port_locked(*fog, port.port);
      resp.reason = protocol::FailureReason::BackendError;
      trace_exit_locked(trace_idx);
      return resp;
    }

    reservations_.emplace(service_id,
                          raa::Reservation{service_id, std::move(plan),
                                           raa::Reservation::State::Live});
    resp.success = true;
    resp.fog_address = topo_.node(*fog).effective_address();
    resp.proxy_port = port.port;
    resp.service_id = service_id;
    trace_exit_locked(trace_idx);
    return resp;
  }

  protocol::ShutdownResponse service_shutdown_request(const protocol::ShutdownRequest& req) {
    std::lock_guard lk(mu_);
    const std::size_t trace_idx = trace_enter_locked("shutdown:" + req.service_id);
    protocol::ShutdownResponse resp;
    resp.service_id = req.service_id;
    auto it = reservations_.find(req.service_id);
    if (it == reservations_.end() || it->second.state == raa::Reservation::State::Dead) {
      resp.ok = false;
      trace_exit_locked(trace_idx);
      return resp;
    }
    raa::Reservation& res = it->second;
    raa::deallocate(topo_, res, &backend_);
    release_port_locked(res.plan.fog, res.plan.proxy_port);
    resp.ok = true;
    trace_exit_locked(trace_idx);
    return resp;
  }

  // Stores fog telemetry. Allocation decisions never read it.
  void service_fog_device(const protocol::ResourceReport& report) {
    std::lock_guard lk(mu_);
    const Node* fog = topo_.find_node(report.fog_id);
    if (!fog || fog->kind != NodeKind::FogDevice)
      throw ProtocolViolation("resource report from unknown fog-device: " + report.fog_id);
    if (report.processor_utilization < 0.0 || report.processor_utilization > 1.0 ||
        report.memory_utilization < 0.0 || report.memory_utilization > 1.0)
      throw ProtocolViolation("utilization fraction out of [0,1]");
    topo_.record_telemetry(report.fog_id,
                           UtilizationSample{report.processor_utilization,
                                             report.memory_utilization, report.timestamp});
  }

  PortAssignResult assign_proxy_port(const NodeId& fog, std::optional<TransportPort> desired) {
    std::lock_guard lk(mu_);
    return assign_proxy_port_locked(fog, desired);
  }

  // Reconciles the topology against an observed snapshot. New links get
  // the control reservation, new switches get QoS entries, and any
  // reservation stranded by a removed node/link (or by a capacity cut
  // below its charge) is force-deallocated.
  ChangeSet apply_topology_update(const TopologySnapshot& snap) {
    std::lock_guard lk(mu_);
    const ChangeSet diff = topo_.update(snap);
    if (diff.empty()) return diff;

    for (const auto& key : diff.removed_links) control_charge_.erase(key);
    std::set<NodeId> touched_switches;
    for (const auto& id : diff.added_nodes) {
      if (seeder_) seeder_(topo_, id);
      if (topo_.node(id).kind == NodeKind::Switch) touched_switches.insert(id);
    }
    for (const auto& key : diff.added_links) {
      charge_control_locked(key);
      if (topo_.node(key.first).kind == NodeKind::Switch)
        touched_switches.insert(key.first);
    }
    for (const auto& key : diff.updated_links) reclamp_control_locked(key);
    for (const NodeId& sw : touched_switches) {
      if (seeder_) seeder_(topo_, sw);  // pick up new ports
      setup_switch_qos_locked(sw);
    }

    for (auto& [sid, res] : reservations_) {
      if (res.state != raa::Reservation::State::Live) continue;
      if (!reservation_broken_locked(res)) continue;
      raa::deallocate(topo_, res, &backend_, /*force=*/true);
      release_port_locked(res.plan.fog, res.plan.proxy_port);
    }
    return diff;
  }

  // Exact ledger audit: charged bandwidth and compute must equal the
  // sum over live reservations plus the startup control reservation.
  ReconcileReport reconcile() const {
    std::lock_guard lk(mu_);
    std::map<LinkKey, Bps> expected_bw = control_charge_;
    std::map<NodeId, std::pair<Millicores, MemBytes>> expected_compute;
    for (const auto& [sid, res] : reservations_) {
      if (res.state != raa::Reservation::State::Live) continue;
      for (const Link& l : res.plan.path) {
        expected_bw[{l.src, l.dst}] += res.plan.request.bw;
        expected_bw[{l.dst, l.src}] += res.plan.request.bw;
      }
      auto& c = expected_compute[res.plan.fog];
      c.first += res.plan.request.processing;
      c.second += res.plan.request.memory;
    }
    for (const auto& [key, link] : topo_.links()) {
      const Bps want = expected_bw.count(key) ? expected_bw.at(key) : 0;
      if (link.alloc_bw != want) {
        std::ostringstream os;
        os << "link " << key.first << " -> " << key.second << " charged " << link.alloc_bw
           << " expected " << want;
        return {false, os.str()};
      }
    }
    for (const auto& [id, node] : topo_.nodes()) {
      if (node.kind != NodeKind::FogDevice || !node.compute) continue;
      const auto want = expected_compute.count(id)
                            ? expected_compute.at(id)
                            : std::pair<Millicores, MemBytes>{0, 0};
      if (node.compute->alloc_processing != want.first ||
          node.compute->alloc_memory != want.second) {
        return {false, "compute ledger mismatch on " + id};
      }
    }
    return {};
  }

  // Point-in-time copy for lock-free readers.
  Topology topology_snapshot() const {
    std::lock_guard lk(mu_);
    return topo_;
  }

  const Topology& topology_unlocked() const { return topo_; }

  std::size_t live_reservation_count() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [sid, res] : reservations_)
      if (res.state == raa::Reservation::State::Live) ++n;
    return n;
  }

  std::optional<raa::Reservation> find_reservation(const std::string& service_id) const {
    std::lock_guard lk(mu_);
    auto it = reservations_.find(service_id);
    if (it == reservations_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<TraceEntry> trace() const {
    std::lock_guard lk(mu_);
    return trace_;
  }

  const OrchestratorConfig& config() const { return cfg_; }

 private:
  void charge_control_locked(const LinkKey& key) {
    const Link& l = topo_.link(key.first, key.second);
    const Bps amount = std::min(cfg_.control_reservation_bw, l.available_bw());
    if (amount > 0) topo_.charge_bw(key.first, key.second, amount);
    control_charge_[key] = amount;
  }

  // After a capacity change, fit the control charge into whatever the
  // live reservations leave over. Reservations that no longer fit are
  // handled by the force-deallocation pass.
  void reclamp_control_locked(const LinkKey& key) {
    const Link& l = topo_.link(key.first, key.second);
    auto it = control_charge_.find(key);
    if (it == control_charge_.end()) {
      charge_control_locked(key);
      return;
    }
    const Bps reserved_by_services = l.alloc_bw - it->second;
    const Bps want = std::min(cfg_.control_reservation_bw,
                              l.total_bw > reserved_by_services
                                  ? l.total_bw - reserved_by_services
                                  : 0);
    if (want > it->second) topo_.charge_bw(key.first, key.second, want - it->second);
    if (want < it->second) topo_.release_bw(key.first, key.second, it->second - want);
    it->second = want;
  }

  void setup_switch_qos_locked(const NodeId& sw) {
    for (const NodeId& next : topo_.out_neighbors(sw)) {
      const PortNo port = topo_.link(sw, next).src_port;
      if (!qos_ready_.insert({sw, port}).second) continue;
      backend_.create_qos(sw, port);  // no-op error if it already exists
      backend_.place_qos_on_port(sw, port);
    }
  }

  PortAssignResult assign_proxy_port_locked(const NodeId& fog,
                                            std::optional<TransportPort> desired) {
    auto& used = ports_in_use_[fog];
    if (desired) {
      if (used.count(*desired)) return {PortAssignStatus::DesiredBusy, 0};
      used.insert(*desired);
      return {PortAssignStatus::Ok, *desired};
    }
    for (std::uint32_t p = cfg_.port_range_lo; p <= cfg_.port_range_hi; ++p) {
      const auto port = static_cast<TransportPort>(p);
      if (!used.count(port)) {
        used.insert(port);
        return {PortAssignStatus::Ok, port};
      }
    }
    return {PortAssignStatus::Exhausted, 0};
  }

  void release_port_locked(const NodeId& fog, TransportPort port) {
    auto it = ports_in_use_.find(fog);
    if (it != ports_in_use_.end()) it->second.erase(port);
  }

  // Applies the enforcement plan step by step: per switch the two
  // queues with their QoS placements, then the two flows; the container
  // last. Any failure rolls back every already-applied step.
  southbound::Status apply_plan_locked(const raa::AllocationPlan& plan,
                                       const std::string& service_id) {
    std::vector<southbound::QueueSpec> queues_created;
    std::vector<southbound::QueueSpec> queues_placed;
    std::set<NodeId> flow_switches;
    bool container_started = false;

    auto undo = [&]() {
      if (container_started) backend_.stop_container(service_id);
      for (const NodeId& sw : flow_switches) backend_.delete_flow(sw, plan.cookie);
      for (auto it = queues_placed.rbegin(); it != queues_placed.rend(); ++it)
        backend_.remove_queue_from_qos(it->switch_id, it->port, it->queue_id);
      for (auto it = queues_created.rbegin(); it != queues_created.rend(); ++it)
        backend_.delete_queue(it->switch_id, it->port, it->queue_id);
    };

    for (std::size_t i = 0; i + 1 < plan.path.size(); ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const auto& q = plan.queues[2 * i + j];
        if (auto st = backend_.create_queue(q); !st) {
          undo();
          return st;
        }
        queues_created.push_back(q);
        if (auto st = backend_.place_queue_on_qos(q.switch_id, q.port, q.queue_id); !st) {
          undo();
          return st;
        }
        queues_placed.push_back(q);
      }
      for (std::size_t j = 0; j < 2; ++j) {
        const auto& f = plan.flows[2 * i + j];
        if (auto st = backend_.create_flow(f); !st) {
          undo();
          return st;
        }
        flow_switches.insert(f.switch_id);
      }
    }

    southbound::ContainerSpec c{service_id, plan.request.image, plan.request.processing,
                                plan.request.memory, plan.proxy_port};
    if (auto st = backend_.start_container(plan.fog, c); !st) {
      undo();
      return st;
    }
    return southbound::Status::success();
  }

  bool reservation_broken_locked(const raa::Reservation& res) const {
    if (!topo_.find_node(res.plan.fog)) return true;
    for (const Link& l : res.plan.path) {
      const Link* fwd = topo_.find_link(l.src, l.dst);
      const Link* rev = topo_.find_link(l.dst, l.src);
      if (!fwd || !rev) return true;
      if (fwd->alloc_bw > fwd->total_bw || rev->alloc_bw > rev->total_bw) return true;
    }
    return false;
  }

  std::size_t trace_enter_locked(std::string label) {
    trace_.push_back(TraceEntry{std::move(label), ++seq_, 0});
    return trace_.size() - 1;
  }

  void trace_exit_locked(std::size_t idx) { trace_[idx].exit_seq = ++seq_; }

  mutable std::mutex mu_;
  Topology topo_;
  southbound::Backend& backend_;
  OrchestratorConfig cfg_;
  DeviceSeeder seeder_;
  std::map<std::string, raa::Reservation> reservations_;
  std::map<NodeId, std::set<TransportPort>> ports_in_use_;
  std::map<LinkKey, Bps> control_charge_;
  std::set<std::pair<NodeId, PortNo>> qos_ready_;
  std::uint64_t service_seq_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<TraceEntry> trace_;
};

}  // namespace fognet
