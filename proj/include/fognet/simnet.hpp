// Deterministic discrete-event simulation of the control plane:
// generated evaluation topologies, a store-and-forward delay model for
// controller communication, per-request delay breakdowns, and scenario
// replay against a real orchestrator over the simulated fabric.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fognet/orchestrator.hpp"
#include "fognet/raa.hpp"
#include "fognet/southbound.hpp"
#include "fognet/topology.hpp"
#include "fognet/types.hpp"

namespace fognet::simnet {

// ---------------------------------------------------------------------------
// Topology generation

struct TopologyGenSpec {
  enum class Kind { LeafSpine, Tree };
  Kind kind = Kind::LeafSpine;
  int l1 = 3;            // leaf / level 1 switch count
  int l2 = 3;            // spine / level 2 switch count
  int l3 = 0;            // level 3 switch count (Tree only)
  int fogs_per_top_switch = 2;
  int end_devices = 4;
  Bps switch_link_bw = gbps(1);
  Bps host_link_bw = gbps(1);
  Millicores fog_processing = cores(4);
  MemBytes fog_memory = gib(8);
};

namespace detail {

class PortCounter {
 public:
  PortNo next(const NodeId& n) { return ++counts_[n]; }

 private:
  std::map<NodeId, PortNo> counts_;
};

inline void wire(Topology& t, PortCounter& ports, const NodeId& a, const NodeId& b, Bps bw) {
  t.add_duplex_link(LinkDecl{a, b, ports.next(a), ports.next(b), bw});
}

}  // namespace detail

// Two switch layouts for scalability studies. LeafSpine: two levels,
// each level-1 switch uplinks to the nearest third of the level-2
// switches. Tree: three levels with single uplinks. In both, top-level
// switches are chained horizontally, the controller hangs off the
// middle top-level switch, fog-devices hang off every top-level switch,
// and end-devices spread round-robin across level-1 switches.
inline Topology generate_topology(const TopologyGenSpec& g) {
  if (g.l1 < 1 || g.l2 < 1 || (g.kind == TopologyGenSpec::Kind::Tree && g.l3 < 1))
    throw Error("topology generator needs at least one switch per level");
  if (g.fogs_per_top_switch < 0 || g.end_devices < 0)
    throw Error("negative device count");

  Topology t;
  detail::PortCounter ports;

  const bool tree = g.kind == TopologyGenSpec::Kind::Tree;
  const int levels = tree ? 3 : 2;
  std::vector<std::vector<NodeId>> level(levels);
  int sw_seq = 0;
  auto make_switch = [&](int lvl) {
    NodeId id = "openflow:" + std::to_string(++sw_seq);
    t.add_node(NodeDecl{id, NodeKind::Switch});
    level[lvl].push_back(id);
    return id;
  };
  for (int i = 0; i < g.l1; ++i) make_switch(0);
  for (int i = 0; i < g.l2; ++i) make_switch(1);
  if (tree)
    for (int i = 0; i < g.l3; ++i) make_switch(2);

  if (tree) {
    for (int i = 0; i < g.l1; ++i)
      detail::wire(t, ports, level[0][i], level[1][(i * g.l2) / g.l1], g.switch_link_bw);
    for (int j = 0; j < g.l2; ++j)
      detail::wire(t, ports, level[1][j], level[2][(j * g.l3) / g.l2], g.switch_link_bw);
  } else {
    // each L1 switch connects to the nearest ceil(l2/3) L2 switches
    const int group = std::max(1, (g.l2 + 2) / 3);
    for (int i = 0; i < g.l1; ++i) {
      int start = (i * g.l2) / g.l1;
      if (start + group > g.l2) start = g.l2 - group;
      for (int k = 0; k < group; ++k)
        detail::wire(t, ports, level[0][i], level[1][start + k], g.switch_link_bw);
    }
  }

  const auto& top = level[levels - 1];
  for (std::size_t j = 0; j + 1 < top.size(); ++j)
    detail::wire(t, ports, top[j], top[j + 1], g.switch_link_bw);

  t.add_node(NodeDecl{"ctrl:1", NodeKind::Controller});
  detail::wire(t, ports, "ctrl:1", top[top.size() / 2], g.host_link_bw);

  int fog_seq = 0;
  for (const NodeId& sw : top) {
    for (int f = 0; f < g.fogs_per_top_switch; ++f) {
      NodeDecl d{"fog:" + std::to_string(++fog_seq), NodeKind::FogDevice};
      d.total_processing = g.fog_processing;
      d.total_memory = g.fog_memory;
      t.add_node(d);
      detail::wire(t, ports, d.id, sw, g.host_link_bw);
    }
  }
  for (int e = 0; e < g.end_devices; ++e) {
    NodeId id = "end:" + std::to_string(e + 1);
    t.add_node(NodeDecl{id, NodeKind::EndDevice});
    detail::wire(t, ports, id, level[0][e % g.l1], g.host_link_bw);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Control-plane delay model

struct DelayModelConfig {
  Bps data_bw_used = 0;          // x: background data-flow load per link
  Bps control_bw = mbps(50);     // y: bandwidth allocated to control flows
  std::uint64_t service_request_bytes = 256;
  std::uint64_t response_bytes = 128;
  southbound::ByteCosts costs;
  double config_exec_s = 0.0;    // per-request device configuration time
  bool measure_raa = false;      // true: wall-clock the allocation run
};

struct DelayReport {
  std::string request_id;
  double send_request = 0.0;  // end-device -> controller
  double raa_exec = 0.0;      // allocation computation
  double config_comm = 0.0;   // controller <-> switch configuration traffic
  double config_exec = 0.0;   // on-device configuration
  double reply = 0.0;         // controller -> end-device

  double total() const {
    return send_request + raa_exec + config_comm + config_exec + reply;
  }
};

namespace detail {

// Hop paths for control traffic: breadth-first over the fabric,
// relaying through switches only. Neighbor order is id order, so the
// tree is deterministic.
inline std::map<NodeId, NodeId> bfs_parents(const Topology& t, const NodeId& from) {
  std::map<NodeId, NodeId> parent;
  std::deque<NodeId> frontier{from};
  parent[from] = from;
  while (!frontier.empty()) {
    const NodeId at = frontier.front();
    frontier.pop_front();
    if (at != from && t.node(at).kind != NodeKind::Switch) continue;
    for (const NodeId& next : t.out_neighbors(at)) {
      if (parent.count(next)) continue;
      parent[next] = at;
      frontier.push_back(next);
    }
  }
  return parent;
}

// Node sequence from `from` to `to` using the parent map of `from`.
inline std::vector<NodeId> control_path(const std::map<NodeId, NodeId>& parents,
                                        const NodeId& from, const NodeId& to) {
  auto it = parents.find(to);
  if (it == parents.end())
    throw Error("no control path to " + to);
  std::vector<NodeId> rev{to};
  NodeId at = to;
  while (at != from) {
    at = parents.at(at);
    rev.push_back(at);
  }
  std::vector<NodeId> out(rev.rbegin(), rev.rend());
  return out;
}

// Store-and-forward transfer time of one message along a node path:
// per link, serialization at the control-flow rate inflated by the
// background utilization of that link.
inline double transfer_time(const Topology& t, const std::vector<NodeId>& path,
                            std::uint64_t bytes, const DelayModelConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Link& l = t.link(path[i], path[i + 1]);
    if (cfg.data_bw_used >= l.total_bw)
      throw Error("control channel saturated on " + l.src + " -> " + l.dst);
    const double serialization =
        static_cast<double>(bytes) * 8.0 / static_cast<double>(cfg.control_bw);
    const double utilization =
        static_cast<double>(cfg.data_bw_used) / static_cast<double>(l.total_bw);
    total += serialization / (1.0 - utilization);
  }
  return total;
}

inline const NodeId& find_controller(const Topology& t) {
  for (const auto& [id, n] : t.nodes())
    if (n.kind == NodeKind::Controller) return n.id;
  throw Error("topology has no controller node");
}

struct ConfigBytes {
  std::uint64_t up = 0;
  std::uint64_t down = 0;
};

// Per-switch configuration exchange for one reservation: two queue
// creations plus two flow installs.
inline ConfigBytes alloc_bytes_per_switch(const southbound::ByteCosts& c) {
  return {2 * c.queue_up + 2 * c.flow_up + 2 * c.qos_up,
          2 * c.queue_down + 2 * c.flow_down + 2 * c.qos_down};
}

// Teardown: one cookie-addressed flow delete, two queue removals from
// QoS, two queue deletions.
inline ConfigBytes teardown_bytes_per_switch(const southbound::ByteCosts& c) {
  return {c.flow_up + 2 * c.queue_up + 2 * c.qos_up,
          c.flow_down + 2 * c.queue_down + 2 * c.qos_down};
}

}  // namespace detail

// Communication cost of configuring the switches along a reservation
// path: for each switch, the up bytes travel controller->switch and the
// down bytes switch->controller, store-and-forward.
inline double config_comm_delay(const Topology& t, const std::vector<Link>& path,
                                const DelayModelConfig& cfg, bool teardown = false) {
  const NodeId& ctrl = detail::find_controller(t);
  const auto parents = detail::bfs_parents(t, ctrl);
  const detail::ConfigBytes bytes = teardown
                                        ? detail::teardown_bytes_per_switch(cfg.costs)
                                        : detail::alloc_bytes_per_switch(cfg.costs);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const NodeId& sw = path[i].dst;
    const auto down_path = detail::control_path(parents, ctrl, sw);
    std::vector<NodeId> up_path(down_path.rbegin(), down_path.rend());
    total += detail::transfer_time(t, down_path, bytes.up, cfg);
    total += detail::transfer_time(t, up_path, bytes.down, cfg);
  }
  return total;
}

// One-shot what-if: runs the real allocation on a scratch copy of the
// topology and prices the five delay components of fulfilling it.
// `forced_fog` pins the servicer choice (used by the per-hop sweeps).
inline DelayReport simulate_request(const Topology& t, const raa::ResourceRequest& r,
                                    const DelayModelConfig& cfg,
                                    const std::optional<NodeId>& forced_fog = std::nullopt) {
  const NodeId& ctrl = detail::find_controller(t);
  const auto parents = detail::bfs_parents(t, ctrl);
  const auto to_device = detail::control_path(parents, ctrl, r.end_device);
  const std::vector<NodeId> to_ctrl(to_device.rbegin(), to_device.rend());

  DelayReport rep;
  rep.send_request = detail::transfer_time(t, to_ctrl, cfg.service_request_bytes, cfg);

  Topology scratch = t;
  const auto started = std::chrono::steady_clock::now();
  raa::AllocationPlan plan;
  if (forced_fog) {
    const raa::PathTree tree = raa::shortest_paths(scratch, r.end_device, r);
    if (tree.weight_of(*forced_fog) == kInfiniteWeight)
      throw Error("no feasible path to " + *forced_fog);
    plan = raa::build_plan(scratch, tree, r, *forced_fog, 5201, 1);
  } else {
    const auto result = raa::allocate(scratch, r, {"whatif", 5201, 1});
    if (!result.ok()) throw Error("request infeasible in simulation");
    plan = result.reservation->plan;
  }
  if (cfg.measure_raa) {
    const auto ended = std::chrono::steady_clock::now();
    rep.raa_exec = std::chrono::duration<double>(ended - started).count();
  }

  rep.config_comm = config_comm_delay(t, plan.path, cfg);
  rep.config_exec = cfg.config_exec_s * static_cast<double>(plan.switch_count());
  rep.reply = detail::transfer_time(t, to_device, cfg.response_bytes, cfg);
  return rep;
}

// ---------------------------------------------------------------------------
// Scenario replay

struct ScenarioEvent {
  enum class Action { Request, Shutdown, Stream };
  double at = 0.0;
  NodeId node;
  Action action = Action::Request;
  Bps bw = 0;
  Millicores processing = 0;
  MemBytes memory = 0;
  std::string image = "svc/default";
  double hold = -1.0;      // Request: auto-shutdown after this many seconds
  double duration = 0.0;   // Stream: sampling window
  std::optional<TransportPort> desired_port;
};

struct Scenario {
  std::vector<ScenarioEvent> events;
};

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  for (const auto& e : j.at("events")) {
    ScenarioEvent ev;
    ev.at = e.at("at").get<double>();
    ev.node = e.at("node").get<std::string>();
    const std::string action = e.at("action").get<std::string>();
    if (action == "request") ev.action = ScenarioEvent::Action::Request;
    else if (action == "shutdown") ev.action = ScenarioEvent::Action::Shutdown;
    else if (action == "stream") ev.action = ScenarioEvent::Action::Stream;
    else throw Error("unknown scenario action: " + action);
    if (ev.action != ScenarioEvent::Action::Shutdown) {
      ev.bw = e.contains("rate") ? e.at("rate").get<Bps>() : e.at("bw").get<Bps>();
      ev.processing = millicores_from_cores(e.value("cpu", 0.25));
      ev.memory = e.value("mem", mib(256));
      ev.image = e.value("image", std::string("svc/default"));
      ev.hold = e.value("hold", -1.0);
      ev.duration = e.value("duration", 0.0);
      if (e.contains("desired_port"))
        ev.desired_port = e.at("desired_port").get<TransportPort>();
    }
    sc.events.push_back(ev);
  }
  return sc;
}

inline Scenario scenario_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("invalid scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

struct SimEvent {
  enum class Kind { MsgDeparture, MsgArrival, RAAStart, RAAEnd, ConfigApplied };
  double time = 0.0;
  Kind kind = Kind::MsgDeparture;
  std::string payload;

  bool operator==(const SimEvent&) const = default;
};

inline const char* to_string(SimEvent::Kind k) {
  switch (k) {
    case SimEvent::Kind::MsgArrival: return "msg_arrival";
    case SimEvent::Kind::RAAStart: return "raa_start";
    case SimEvent::Kind::RAAEnd: return "raa_end";
    case SimEvent::Kind::ConfigApplied: return "config_applied";
    case SimEvent::Kind::MsgDeparture: break;
  }
  return "msg_departure";
}

struct RequestOutcome {
  double at = 0.0;
  NodeId node;
  bool success = false;
  std::string failure;      // empty on success
  std::string service_id;   // empty on failure
  double fulfillment_s = 0.0;
};

struct MetricSample {
  double time = 0.0;
  std::string series;
  double value = 0.0;
};

struct MetricSet {
  std::vector<MetricSample> samples;
  std::vector<RequestOutcome> requests;
  std::vector<SimEvent> trace;
  std::map<std::string, int> failures;  // reason -> count
  int successes = 0;
  int shutdowns = 0;
  bool reconciliation_ok = false;
  std::string reconciliation_detail;
};

struct ScenarioConfig {
  DelayModelConfig delay;
  OrchestratorConfig orch;
};

namespace detail {

struct PendingEvent {
  double time = 0.0;
  std::uint64_t seq = 0;  // FIFO tie order
  enum class Kind { RequestArrival, ShutdownArrival, StreamSample } kind = Kind::RequestArrival;
  ScenarioEvent scenario;       // for arrivals
  std::string service_id;       // shutdown / samples
  double issued_at = 0.0;       // original device-side departure time
  Bps stream_rate = 0;
  double stream_end = 0.0;

  bool operator>(const PendingEvent& o) const {
    if (time != o.time) return time > o.time;
    return seq > o.seq;
  }
};

}  // namespace detail

// Replays timed request/shutdown/stream events against a live
// orchestrator on the simulated fabric. Requests queue at the
// controller in arrival order; the allocation critical section is
// serialized exactly as the real server serializes it.
inline MetricSet run_scenario(const Topology& topo, const Scenario& sc,
                              const ScenarioConfig& cfg) {
  for (const auto& e : sc.events)
    if (!topo.find_node(e.node)) throw Error("scenario references unknown node: " + e.node);

  southbound::SimulatedFabric fabric(cfg.delay.costs);
  Orchestrator orch(topo, fabric, cfg.orch);
  orch.set_device_seeder([&fabric](const Topology& t, const NodeId& id) {
    seed_fabric_device(fabric, t, id);
  });
  orch.bootstrap();

  const Topology& t = orch.topology_unlocked();
  const NodeId& ctrl = detail::find_controller(t);
  const auto parents = detail::bfs_parents(t, ctrl);

  MetricSet out;
  std::priority_queue<detail::PendingEvent, std::vector<detail::PendingEvent>,
                      std::greater<detail::PendingEvent>>
      queue;
  std::uint64_t seq = 0;
  std::map<NodeId, std::deque<std::string>> live_by_node;
  std::map<std::string, raa::Reservation> live_plans;
  double ctrl_free = 0.0;

  auto send_delay = [&](const NodeId& node, std::uint64_t bytes) {
    const auto down = detail::control_path(parents, ctrl, node);
    const std::vector<NodeId> up(down.rbegin(), down.rend());
    return detail::transfer_time(t, up, bytes, cfg.delay);
  };
  auto reply_delay = [&](const NodeId& node, std::uint64_t bytes) {
    const auto down = detail::control_path(parents, ctrl, node);
    return detail::transfer_time(t, down, bytes, cfg.delay);
  };
  auto trace = [&](double time, SimEvent::Kind kind, std::string payload) {
    out.trace.push_back(SimEvent{time, kind, std::move(payload)});
  };

  for (const auto& e : sc.events) {
    detail::PendingEvent p;
    p.scenario = e;
    p.issued_at = e.at;
    if (e.action == ScenarioEvent::Action::Shutdown) {
      p.kind = detail::PendingEvent::Kind::ShutdownArrival;
      p.time = e.at + send_delay(e.node, cfg.delay.service_request_bytes);
    } else {
      p.kind = detail::PendingEvent::Kind::RequestArrival;
      p.time = e.at + send_delay(e.node, cfg.delay.service_request_bytes);
    }
    p.seq = ++seq;
    trace(e.at, SimEvent::Kind::MsgDeparture, e.node);
    queue.push(p);
  }

  while (!queue.empty()) {
    const detail::PendingEvent p = queue.top();
    queue.pop();

    if (p.kind == detail::PendingEvent::Kind::StreamSample) {
      auto it = live_plans.find(p.service_id);
      if (it == live_plans.end()) continue;  // sampled after shutdown
      const raa::AllocationPlan& plan = it->second.plan;
      double delivered = static_cast<double>(std::min(p.stream_rate, plan.request.bw));
      // the fabric must actually classify the stream onto its queues
      southbound::PacketHeader h;
      h.src_addr = t.node(plan.request.end_device).effective_address();
      h.dst_addr = t.node(plan.fog).effective_address();
      h.transport = plan.request.transport;
      h.src_port = 40000;
      h.dst_port = plan.proxy_port;
      for (std::size_t i = 0; i + 1 < plan.path.size(); ++i) {
        const auto m = fabric.classify(plan.path[i].dst, h);
        const auto* q =
            m.matched ? fabric.find_queue(plan.path[i].dst, m.output_port, m.queue_id) : nullptr;
        if (!q) delivered = 0.0;
        else delivered = std::min(delivered, static_cast<double>(q->rate_limit));
      }
      out.samples.push_back(MetricSample{
          p.time, "throughput_mbps:" + p.scenario.node + ":" + p.service_id, delivered / 1e6});
      continue;
    }

    const NodeId& node = p.scenario.node;
    trace(p.time, SimEvent::Kind::MsgArrival, node);
    const double start = std::max(p.time, ctrl_free);

    if (p.kind == detail::PendingEvent::Kind::RequestArrival) {
      protocol::ServiceRequest req;
      req.request_id = "req-" + std::to_string(p.seq);
      req.node_id = node;
      req.image = p.scenario.image;
      req.bw = p.scenario.bw;
      req.processing = p.scenario.processing;
      req.memory = p.scenario.memory;
      req.desired_port = p.scenario.desired_port;

      trace(start, SimEvent::Kind::RAAStart, req.request_id);
      const protocol::ServiceResponse resp = orch.service_end_device(req, node);
      double busy = 0.0;  // modeled allocation time; wall time is not simulated time
      trace(start + busy, SimEvent::Kind::RAAEnd, req.request_id);

      RequestOutcome outcome;
      outcome.at = p.issued_at;
      outcome.node = node;
      outcome.success = resp.success;
      if (resp.success) {
        const auto res = orch.find_reservation(resp.service_id);
        busy += config_comm_delay(t, res->plan.path, cfg.delay) +
                cfg.delay.config_exec_s * static_cast<double>(res->plan.switch_count());
        trace(start + busy, SimEvent::Kind::ConfigApplied, resp.service_id);
        outcome.service_id = resp.service_id;
        live_by_node[node].push_back(resp.service_id);
        live_plans[resp.service_id] = *res;
        ++out.successes;
      } else {
        outcome.failure = protocol::to_string(resp.reason);
        ++out.failures[outcome.failure];
      }
      ctrl_free = start + busy;
      const double completion = ctrl_free + reply_delay(node, cfg.delay.response_bytes);
      trace(completion, SimEvent::Kind::MsgArrival, node + ":reply");
      outcome.fulfillment_s = completion - p.issued_at;
      out.requests.push_back(outcome);
      out.samples.push_back(
          MetricSample{completion, "fulfill_s:" + node, outcome.fulfillment_s});

      if (resp.success) {
        if (p.scenario.action == ScenarioEvent::Action::Stream) {
          for (double s = 1.0; s <= p.scenario.duration; s += 1.0) {
            detail::PendingEvent sample;
            sample.kind = detail::PendingEvent::Kind::StreamSample;
            sample.time = completion + s;
            sample.seq = ++seq;
            sample.scenario = p.scenario;
            sample.service_id = resp.service_id;
            sample.stream_rate = p.scenario.bw;
            queue.push(sample);
          }
        }
        const double ends = p.scenario.action == ScenarioEvent::Action::Stream
                                ? p.scenario.duration
                                : p.scenario.hold;
        if (ends >= 0.0) {
          detail::PendingEvent shd;
          shd.kind = detail::PendingEvent::Kind::ShutdownArrival;
          shd.scenario = p.scenario;
          shd.issued_at = completion + ends;
          shd.time = shd.issued_at + send_delay(node, cfg.delay.service_request_bytes);
          shd.seq = ++seq;
          shd.service_id = resp.service_id;
          queue.push(shd);
          trace(shd.issued_at, SimEvent::Kind::MsgDeparture, node + ":shutdown");
        }
      }
      continue;
    }

    // shutdown arrival
    std::string service_id = p.service_id;
    if (service_id.empty()) {
      auto& fifo = live_by_node[node];
      if (fifo.empty()) {
        ctrl_free = start;
        continue;  // nothing live to shut down
      }
      service_id = fifo.front();
    }
    protocol::ShutdownRequest req{service_id};
    const auto res = orch.find_reservation(service_id);
    const protocol::ShutdownResponse resp = orch.service_shutdown_request(req);
    double busy = 0.0;
    if (resp.ok && res) {
      busy = config_comm_delay(t, res->plan.path, cfg.delay, /*teardown=*/true) +
             cfg.delay.config_exec_s * static_cast<double>(res->plan.switch_count());
      ++out.shutdowns;
      auto& fifo = live_by_node[node];
      std::erase(fifo, service_id);
      live_plans.erase(service_id);
      trace(start + busy, SimEvent::Kind::ConfigApplied, service_id + ":down");
    }
    ctrl_free = start + busy;
    const double completion = ctrl_free + reply_delay(node, cfg.delay.response_bytes);
    out.samples.push_back(
        MetricSample{completion, "shutdown_s:" + node, completion - p.issued_at});
  }

  const ReconcileReport rec = orch.reconcile();
  out.reconciliation_ok = rec.ok;
  out.reconciliation_detail = rec.detail;
  return out;
}

// ---------------------------------------------------------------------------
// Measurement helpers for the scalability sweeps

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

inline double median_of(const std::vector<double>& sorted, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  const std::size_t mid = lo + n / 2;
  if (n % 2 == 1) return sorted[mid];
  return (sorted[mid - 1] + sorted[mid]) / 2.0;
}

inline Quartiles quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  Quartiles q;
  if (v.empty()) return q;
  q.median = median_of(v, 0, v.size());
  q.q1 = median_of(v, 0, v.size() / 2);
  q.q3 = median_of(v, (v.size() + 1) / 2, v.size());
  return q;
}

// Wall time of the allocation decision (servicer filter, shortest
// paths, fog selection; no enforcement) with every fog eligible.
// Returns one median per end-device, in device id order.
inline std::vector<double> raa_time_per_device(const Topology& t, int reps) {
  std::vector<double> medians;
  raa::ResourceRequest r;
  r.bw = kbps(1);
  r.processing = 1;
  r.memory = 1;
  r.image = "probe";
  for (const auto& [id, node] : t.nodes()) {
    if (node.kind != NodeKind::EndDevice) continue;
    r.end_device = id;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
      const auto begin = std::chrono::steady_clock::now();
      const auto servicers = raa::find_request_servicers(t, r);
      const auto tree = raa::shortest_paths(t, id, r);
      const auto fog = raa::select_fog(tree, servicers);
      const auto end = std::chrono::steady_clock::now();
      if (!fog) throw Error("probe request infeasible from " + id);
      samples.push_back(std::chrono::duration<double>(end - begin).count());
    }
    medians.push_back(quartiles(samples).median);
  }
  return medians;
}

struct HopDelayRow {
  int hops = 0;
  std::size_t pairs = 0;
  Quartiles comm;  // communication delay: send + config + reply
};

// Communication delay of allocation against end-to-fog hop distance,
// over every (end-device, fog-device) pair, as medians per hop count.
inline std::vector<HopDelayRow> alloc_delay_by_hops(const Topology& t,
                                                    const DelayModelConfig& cfg,
                                                    Bps request_bw) {
  raa::ResourceRequest r;
  r.bw = request_bw;
  r.processing = 1;
  r.memory = 1;
  r.image = "probe";
  std::map<int, std::vector<double>> by_hops;
  for (const auto& [eid, en] : t.nodes()) {
    if (en.kind != NodeKind::EndDevice) continue;
    r.end_device = eid;
    const raa::PathTree tree = raa::shortest_paths(t, eid, r);
    for (const auto& [fid, fn] : t.nodes()) {
      if (fn.kind != NodeKind::FogDevice) continue;
      if (tree.weight_of(fid) == kInfiniteWeight) continue;
      const DelayReport rep = simulate_request(t, r, cfg, fid);
      const raa::AllocationPlan plan = raa::build_plan(t, tree, r, fid, 5201, 1);
      const int hops = static_cast<int>(plan.path.size());
      by_hops[hops].push_back(rep.send_request + rep.config_comm + rep.reply);
    }
  }
  std::vector<HopDelayRow> rows;
  for (auto& [hops, values] : by_hops)
    rows.push_back(HopDelayRow{hops, values.size(), quartiles(values)});
  return rows;
}

// ---------------------------------------------------------------------------
// Metric output

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void write_metrics_csv(std::ostream& os, const MetricSet& m) {
  os << "time,series,value\n";
  for (const auto& s : m.samples)
    os << format_value(s.time) << ',' << s.series << ',' << format_value(s.value) << '\n';
}

inline nlohmann::json summary_json(const MetricSet& m) {
  nlohmann::json j;
  j["requests"] = m.requests.size();
  j["successes"] = m.successes;
  j["shutdowns"] = m.shutdowns;
  j["failures"] = m.failures;
  j["reconciliation_ok"] = m.reconciliation_ok;
  if (!m.reconciliation_ok) j["reconciliation_detail"] = m.reconciliation_detail;
  return j;
}

}  // namespace fognet::simnet
