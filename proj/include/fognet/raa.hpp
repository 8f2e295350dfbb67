// Resource allocation: servicer filtering, bandwidth-weighted shortest
// paths over the switch fabric, fog selection, and the enforcement plan
// (queues + flows per switch, container on the fog). The deallocation
// half releases exactly what allocation charged.
//
// Link cost is 1/(available bandwidth in Mbps); a link whose available
// bandwidth is below the requested rate (in either direction) costs
// infinity. Requested bandwidth is charged on both directions of every
// path link, so the reverse reservation can never fail after forward
// selection.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fognet/kheap.hpp"
#include "fognet/southbound.hpp"
#include "fognet/topology.hpp"
#include "fognet/types.hpp"

namespace fognet::raa {

struct ResourceRequest {
  NodeId end_device;
  Bps bw = 0;               // requested rate, both directions
  Millicores processing = 0;
  MemBytes memory = 0;
  std::string image;
  std::optional<TransportPort> desired_port;
  Transport transport = Transport::Tcp;
};

inline void validate(const ResourceRequest& r) {
  if (r.bw == 0 || r.processing <= 0 || r.memory == 0)
    throw Error("resource request demands must be positive");
}

// Shortest-path tree rooted at the requesting end-device: for each
// reached node, the incoming link on its least-cost path and the total
// cost of that path.
struct PathTree {
  NodeId root;
  std::map<NodeId, Link> best;
  std::map<NodeId, double> weights;

  double weight_of(const NodeId& n) const {
    auto it = weights.find(n);
    return it == weights.end() ? kInfiniteWeight : it->second;
  }
};

// Fog-devices with strictly more free processing AND memory than the
// request demands. Strict: an exact fit does not service.
inline std::set<NodeId> find_request_servicers(const Topology& t, const ResourceRequest& r) {
  std::set<NodeId> out;
  for (const auto& [id, node] : t.nodes()) {
    if (node.kind != NodeKind::FogDevice || !node.compute) continue;
    const ComputeLedger& c = *node.compute;
    if (c.available_processing() > r.processing && c.available_memory() > r.memory)
      out.insert(id);
  }
  return out;
}

namespace detail {

inline double link_cost_mbps(const Link& l) {
  return 1.0 / (static_cast<double>(l.available_bw()) / 1e6);
}

// A link is usable only when both directions can still carry the
// requested rate.
inline bool feasible(const Topology& t, const Link& l, Bps rate) {
  if (l.available_bw() < rate) return false;
  const Link* rev = t.find_link(l.dst, l.src);
  return rev && rev->available_bw() >= rate;
}

inline bool relays(const Node& n, const NodeId& root) {
  return n.id == root || n.kind == NodeKind::Switch;
}

}  // namespace detail

// Dijkstra over directed links with the bandwidth-derived cost, seeded
// with a zero-weight self-link at the end-device. Only switches relay;
// end-devices, fog-devices, and the controller are leaves.
inline PathTree shortest_paths(const Topology& t, const NodeId& end_device,
                               const ResourceRequest& r) {
  const Node* root = t.find_node(end_device);
  if (!root) throw TopologyError("unknown end-device: " + end_device);
  if (root->kind != NodeKind::EndDevice)
    throw TopologyError(end_device + " is not an end-device");

  PathTree tree;
  tree.root = end_device;

  KHeap heap(t.nodes().size(), t.links().size());
  std::map<NodeId, HeapEntry> best_known;

  HeapEntry init;
  init.link = Link{end_device, end_device, 0, 0, 0, 0};
  init.weight = 0.0;
  heap.push(init);
  best_known[end_device] = init;

  while (!heap.empty()) {
    const HeapEntry u = heap.pop_min();
    if (u.link.src != u.link.dst) {
      tree.best[u.link.dst] = u.link;
      tree.weights[u.link.dst] = u.weight;
    } else {
      tree.weights[u.link.dst] = u.weight;
    }
    const Node& settled = t.node(u.link.dst);
    if (!detail::relays(settled, end_device)) continue;

    for (const NodeId& next : t.out_neighbors(u.link.dst)) {
      const Link& v = t.link(u.link.dst, next);
      HeapEntry cand;
      cand.link = v;
      cand.weight = best_known.at(v.src).weight + detail::link_cost_mbps(v);
      if (!detail::feasible(t, v, r.bw)) cand.weight = kInfiniteWeight;

      auto known = best_known.find(v.dst);
      if (known == best_known.end()) {
        heap.push(cand);
        best_known[v.dst] = cand;
      } else if (cand.weight < known->second.weight) {
        heap.decrease_key(known->second, cand);
        known->second = cand;
      }
    }
  }
  return tree;
}

// Least-cost request servicer; ties break to the lexically smallest
// node id. nullopt when no servicer is reachable with enough bandwidth.
inline std::optional<NodeId> select_fog(const PathTree& tree, const std::set<NodeId>& servicers) {
  double min_weight = kInfiniteWeight;
  std::optional<NodeId> best;
  for (const NodeId& f : servicers) {  // id order: first strict improvement wins ties
    const double w = tree.weight_of(f);
    if (w < min_weight) {
      min_weight = w;
      best = f;
    }
  }
  if (min_weight == kInfiniteWeight) return std::nullopt;
  return best;
}

struct AllocationPlan {
  ResourceRequest request;
  NodeId fog;
  std::vector<Link> path;  // end-device -> fog order
  std::vector<southbound::QueueSpec> queues;  // two per switch
  std::vector<southbound::FlowSpec> flows;    // two per switch
  TransportPort proxy_port = 0;
  std::uint64_t cookie = 0;
  double total_cost = 0.0;

  std::size_t switch_count() const { return path.empty() ? 0 : path.size() - 1; }
};

// Identity assigned to one fulfilled request by its owner: the service
// token, the proxy port on the fog, and the flow cookie.
struct ServiceIdentity {
  std::string service_id;
  TransportPort proxy_port = 0;
  std::uint64_t cookie = 0;
};

// Walks best-link pointers from the fog back to the end-device and
// emits, per switch, one rate-limited queue plus one flow for each
// direction. Flows toward the fog match on destination port; flows
// toward the end-device match on source port.
inline AllocationPlan build_plan(const Topology& t, const PathTree& tree,
                                 const ResourceRequest& r, const NodeId& fog,
                                 TransportPort proxy_port, std::uint64_t cookie) {
  if (tree.weight_of(fog) == kInfiniteWeight)
    throw Error("build_plan on an unreachable fog: " + fog);

  AllocationPlan plan;
  plan.request = r;
  plan.fog = fog;
  plan.proxy_port = proxy_port;
  plan.cookie = cookie;
  plan.total_cost = tree.weight_of(fog);

  std::vector<Link> reversed;
  NodeId at = fog;
  while (at != tree.root) {
    auto it = tree.best.find(at);
    if (it == tree.best.end())
      throw Error("broken path chain at " + at);
    reversed.push_back(it->second);
    at = it->second.src;
    if (reversed.size() > t.links().size())
      throw Error("path chain cycle detected");
  }
  plan.path.assign(reversed.rbegin(), reversed.rend());

  const std::string& end_addr = t.node(tree.root).effective_address();
  const std::string& fog_addr = t.node(fog).effective_address();

  // Interior links: plan.path[i] enters switch plan.path[i].dst for
  // i < size-1. Egress toward the fog is path[i+1].src_port; egress
  // toward the end-device is path[i].dst_port of the reverse edge.
  for (std::size_t i = 0; i + 1 < plan.path.size(); ++i) {
    const Link& in = plan.path[i];
    const Link& out = plan.path[i + 1];
    const NodeId& sw = in.dst;

    southbound::QueueSpec q_fwd{sw, out.src_port, 2 * cookie, r.bw};
    const Link& back = t.link(in.dst, in.src);
    southbound::QueueSpec q_rev{sw, back.src_port, 2 * cookie + 1, r.bw};
    plan.queues.push_back(q_fwd);
    plan.queues.push_back(q_rev);

    southbound::FlowSpec f_fwd;
    f_fwd.switch_id = sw;
    f_fwd.match = {end_addr, fog_addr, r.transport, southbound::PortMatch::DstPort, proxy_port};
    f_fwd.output_port = q_fwd.port;
    f_fwd.queue_id = q_fwd.queue_id;
    f_fwd.cookie = cookie;
    southbound::FlowSpec f_rev;
    f_rev.switch_id = sw;
    f_rev.match = {fog_addr, end_addr, r.transport, southbound::PortMatch::SrcPort, proxy_port};
    f_rev.output_port = q_rev.port;
    f_rev.queue_id = q_rev.queue_id;
    f_rev.cookie = cookie;
    plan.flows.push_back(f_fwd);
    plan.flows.push_back(f_rev);
  }
  return plan;
}

enum class FailureKind { NoServicer, NoPath };

struct Reservation {
  enum class State { Live, Dead };
  std::string service_id;
  AllocationPlan plan;
  State state = State::Live;
};

struct AllocateResult {
  std::optional<Reservation> reservation;
  FailureKind failure = FailureKind::NoServicer;

  bool ok() const { return reservation.has_value(); }
};

inline void charge_plan(Topology& t, const AllocationPlan& plan) {
  for (const Link& l : plan.path) {
    t.charge_bw(l.src, l.dst, plan.request.bw);
    t.charge_bw(l.dst, l.src, plan.request.bw);
  }
  t.charge_compute(plan.fog, plan.request.processing, plan.request.memory);
}

// Skips path links that no longer exist, so a reservation stranded by a
// topology change can still be released.
inline void release_plan(Topology& t, const AllocationPlan& plan) {
  for (const Link& l : plan.path) {
    if (t.find_link(l.src, l.dst)) t.release_bw(l.src, l.dst, plan.request.bw);
    if (t.find_link(l.dst, l.src)) t.release_bw(l.dst, l.src, plan.request.bw);
  }
  if (const Node* fog = t.find_node(plan.fog); fog && fog->compute)
    t.release_compute(plan.fog, plan.request.processing, plan.request.memory);
}

// The full allocation pipeline. On success the topology ledgers are
// charged and a live reservation is returned; on failure the topology
// is untouched.
inline AllocateResult allocate(Topology& t, const ResourceRequest& r,
                               const ServiceIdentity& id) {
  validate(r);
  AllocateResult res;
  const std::set<NodeId> servicers = find_request_servicers(t, r);
  if (servicers.empty()) {
    res.failure = FailureKind::NoServicer;
    return res;
  }
  const PathTree tree = shortest_paths(t, r.end_device, r);
  const std::optional<NodeId> fog = select_fog(tree, servicers);
  if (!fog) {
    res.failure = FailureKind::NoPath;
    return res;
  }
  AllocationPlan plan = build_plan(t, tree, r, *fog, id.proxy_port, id.cookie);
  charge_plan(t, plan);
  res.reservation = Reservation{id.service_id, std::move(plan), Reservation::State::Live};
  return res;
}

// Tears down the reservation: flows, then queue placements and queues,
// then the container, then the ledger charges. With no backend only the
// ledger half runs. With `force`, backend errors (for example a switch
// that no longer exists) are ignored.
inline void deallocate(Topology& t, Reservation& res,
                       southbound::Backend* backend = nullptr, bool force = false) {
  if (res.state == Reservation::State::Dead)
    throw Error("service already shut down: " + res.service_id);
  if (backend) {
    std::set<NodeId> switches;
    for (const auto& q : res.plan.queues) switches.insert(q.switch_id);
    for (const NodeId& sw : switches) {
      auto st = backend->delete_flow(sw, res.plan.cookie);
      if (!st && !force) throw Error("flow teardown failed on " + sw + ": " + st.error);
    }
    for (const auto& q : res.plan.queues) {
      auto st = backend->remove_queue_from_qos(q.switch_id, q.port, q.queue_id);
      if (!st && !force) throw Error("queue unplacement failed: " + st.error);
      st = backend->delete_queue(q.switch_id, q.port, q.queue_id);
      if (!st && !force) throw Error("queue teardown failed: " + st.error);
    }
    auto st = backend->stop_container(res.service_id);
    if (!st && !force) throw Error("container shutdown failed: " + st.error);
  }
  release_plan(t, res.plan);
  res.state = Reservation::State::Dead;
}

}  // namespace fognet::raa
