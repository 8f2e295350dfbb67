// Directed graph of the network with per-link bandwidth ledgers and
// per-fog-device compute ledgers. The single source of truth for all
// resources; every full-duplex cable is modeled as two directed edges.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fognet/protocol.hpp"
#include "fognet/types.hpp"

namespace fognet {

struct ComputeLedger {
  Millicores total_processing = 0;
  MemBytes total_memory = 0;
  Millicores alloc_processing = 0;
  MemBytes alloc_memory = 0;

  Millicores available_processing() const { return total_processing - alloc_processing; }
  MemBytes available_memory() const { return total_memory - alloc_memory; }
};

// Most recent utilization report from a fog agent. Recorded verbatim;
// allocation decisions use the ledgers, never these samples.
struct UtilizationSample {
  double processor = 0.0;
  double memory = 0.0;
  double timestamp = 0.0;
};

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Unknown;
  std::optional<ComputeLedger> compute;  // present iff kind == FogDevice
  std::string address;                   // defaults to the node id
  std::optional<UtilizationSample> telemetry;

  const std::string& effective_address() const {
    return address.empty() ? id : address;
  }
};

struct Link {
  NodeId src;
  NodeId dst;
  PortNo src_port = 0;
  PortNo dst_port = 0;
  Bps total_bw = 0;
  Bps alloc_bw = 0;

  Bps available_bw() const { return total_bw - alloc_bw; }
};

using LinkKey = std::pair<NodeId, NodeId>;

struct NodeDecl {
  NodeId id;
  NodeKind kind = NodeKind::Unknown;
  Millicores total_processing = 0;
  MemBytes total_memory = 0;
  std::string address;
};

struct LinkDecl {
  NodeId src;
  NodeId dst;
  PortNo src_port = 0;
  PortNo dst_port = 0;
  Bps total_bw = 0;
};

// Full point-in-time observation of the fabric, as a discovery backend
// would report it.
struct TopologySnapshot {
  std::vector<NodeDecl> nodes;
  std::vector<LinkDecl> links;
};

struct ChangeSet {
  std::vector<NodeId> added_nodes;
  std::vector<NodeId> removed_nodes;
  std::vector<NodeId> updated_nodes;
  std::vector<LinkKey> added_links;
  std::vector<LinkKey> removed_links;
  std::vector<LinkKey> updated_links;

  bool empty() const {
    return added_nodes.empty() && removed_nodes.empty() && updated_nodes.empty() &&
           added_links.empty() && removed_links.empty() && updated_links.empty();
  }
};

class Topology {
 public:
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::map<LinkKey, Link>& links() const { return links_; }
  std::uint64_t revision() const { return revision_; }

  const Node* find_node(const NodeId& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  Node& node(const NodeId& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw TopologyError("unknown node: " + id);
    return it->second;
  }

  const Node& node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw TopologyError("unknown node: " + id);
    return it->second;
  }

  const Link* find_link(const NodeId& src, const NodeId& dst) const {
    auto it = links_.find({src, dst});
    return it == links_.end() ? nullptr : &it->second;
  }

  const Link& link(const NodeId& src, const NodeId& dst) const {
    auto it = links_.find({src, dst});
    if (it == links_.end()) throw TopologyError("unknown link: " + src + " -> " + dst);
    return it->second;
  }

  // Destination ids of all links leaving `src`, in id order.
  const std::vector<NodeId>& out_neighbors(const NodeId& src) const {
    static const std::vector<NodeId> kNone;
    auto it = out_.find(src);
    return it == out_.end() ? kNone : it->second;
  }

  void add_node(const NodeDecl& d) {
    if (d.id.empty()) throw TopologyError("empty node id");
    if (nodes_.count(d.id)) throw TopologyError("duplicate node id: " + d.id);
    nodes_.emplace(d.id, make_node(d));
    bump();
  }

  // Adds a single directed edge. Callers modeling a full-duplex cable
  // use add_duplex_link.
  void add_link(const LinkDecl& d) {
    require_node(d.src);
    require_node(d.dst);
    LinkKey key{d.src, d.dst};
    if (links_.count(key)) throw TopologyError("duplicate link " + d.src + " -> " + d.dst);
    links_.emplace(key, Link{d.src, d.dst, d.src_port, d.dst_port, d.total_bw, 0});
    insert_neighbor(d.src, d.dst);
    bump();
  }

  void add_duplex_link(const LinkDecl& d) {
    add_link(d);
    add_link(LinkDecl{d.dst, d.src, d.dst_port, d.src_port, d.total_bw});
  }

  void remove_link(const NodeId& src, const NodeId& dst) {
    if (links_.erase({src, dst}) == 0)
      throw TopologyError("unknown link: " + src + " -> " + dst);
    erase_neighbor(src, dst);
    bump();
  }

  // Removes the node and every incident link.
  void remove_node(const NodeId& id) {
    if (!nodes_.count(id)) throw TopologyError("unknown node: " + id);
    for (auto it = links_.begin(); it != links_.end();) {
      if (it->first.first == id || it->first.second == id) {
        erase_neighbor(it->first.first, it->first.second);
        it = links_.erase(it);
      } else {
        ++it;
      }
    }
    nodes_.erase(id);
    bump();
  }

  void charge_bw(const NodeId& src, const NodeId& dst, Bps amount) {
    Link& l = link_mut(src, dst);
    if (l.alloc_bw + amount > l.total_bw)
      throw TopologyError("bandwidth over-allocation on " + src + " -> " + dst);
    l.alloc_bw += amount;
    bump();
  }

  void release_bw(const NodeId& src, const NodeId& dst, Bps amount) {
    Link& l = link_mut(src, dst);
    if (amount > l.alloc_bw)
      throw TopologyError("bandwidth ledger underflow on " + src + " -> " + dst);
    l.alloc_bw -= amount;
    bump();
  }

  void charge_compute(const NodeId& fog, Millicores cpu, MemBytes mem) {
    ComputeLedger& c = compute_mut(fog);
    if (c.alloc_processing + cpu > c.total_processing || c.alloc_memory + mem > c.total_memory)
      throw TopologyError("compute over-allocation on " + fog);
    c.alloc_processing += cpu;
    c.alloc_memory += mem;
    bump();
  }

  void release_compute(const NodeId& fog, Millicores cpu, MemBytes mem) {
    ComputeLedger& c = compute_mut(fog);
    if (cpu > c.alloc_processing || mem > c.alloc_memory)
      throw TopologyError("compute ledger underflow on " + fog);
    c.alloc_processing -= cpu;
    c.alloc_memory -= mem;
    bump();
  }

  void record_telemetry(const NodeId& fog, const UtilizationSample& s) {
    Node& n = node(fog);
    n.telemetry = s;
    bump();
  }

  // Reconciles this topology against a full observed snapshot. Ledgers
  // of surviving elements are preserved; a snapshot kind of Unknown
  // never downgrades a node typed by a greeting. Returns the diff;
  // revision is bumped iff the diff is non-empty.
  ChangeSet update(const TopologySnapshot& snap) {
    std::set<NodeId> snap_ids;
    for (const auto& n : snap.nodes) {
      if (n.id.empty()) throw TopologyError("snapshot contains empty node id");
      if (!snap_ids.insert(n.id).second)
        throw TopologyError("snapshot contains duplicate node: " + n.id);
    }
    std::set<LinkKey> snap_links;
    for (const auto& l : snap.links) {
      if (!snap_ids.count(l.src) || !snap_ids.count(l.dst))
        throw TopologyError("snapshot link " + l.src + " -> " + l.dst +
                            " references a node absent from the snapshot");
      if (!snap_links.insert({l.src, l.dst}).second)
        throw TopologyError("snapshot contains duplicate link " + l.src + " -> " + l.dst);
    }

    ChangeSet diff;
    for (const auto& [id, node] : nodes_)
      if (!snap_ids.count(id)) diff.removed_nodes.push_back(id);
    for (const auto& d : snap.nodes) {
      auto it = nodes_.find(d.id);
      if (it == nodes_.end()) {
        diff.added_nodes.push_back(d.id);
      } else if (node_differs(it->second, d)) {
        diff.updated_nodes.push_back(d.id);
      }
    }
    for (const auto& [key, link] : links_)
      if (!snap_links.count(key)) diff.removed_links.push_back(key);
    for (const auto& d : snap.links) {
      auto it = links_.find({d.src, d.dst});
      if (it == links_.end()) {
        diff.added_links.push_back({d.src, d.dst});
      } else if (link_differs(it->second, d)) {
        diff.updated_links.push_back({d.src, d.dst});
      }
    }
    if (diff.empty()) return diff;

    for (const auto& id : diff.removed_nodes) remove_node_quiet(id);
    for (const auto& d : snap.nodes) {
      auto it = nodes_.find(d.id);
      if (it == nodes_.end()) {
        nodes_.emplace(d.id, make_node(d));
      } else {
        apply_node_decl(it->second, d);
      }
    }
    for (const auto& key : diff.removed_links) {
      if (links_.erase(key)) erase_neighbor(key.first, key.second);
    }
    for (const auto& d : snap.links) {
      auto it = links_.find({d.src, d.dst});
      if (it == links_.end()) {
        links_.emplace(LinkKey{d.src, d.dst},
                       Link{d.src, d.dst, d.src_port, d.dst_port, d.total_bw, 0});
        insert_neighbor(d.src, d.dst);
      } else {
        it->second.src_port = d.src_port;
        it->second.dst_port = d.dst_port;
        it->second.total_bw = d.total_bw;  // alloc_bw preserved
      }
    }
    bump();
    return diff;
  }

 private:
  static Node make_node(const NodeDecl& d) {
    Node n;
    n.id = d.id;
    n.kind = d.kind;
    n.address = d.address;
    if (d.kind == NodeKind::FogDevice)
      n.compute = ComputeLedger{d.total_processing, d.total_memory, 0, 0};
    return n;
  }

  static bool node_differs(const Node& n, const NodeDecl& d) {
    if (d.kind != NodeKind::Unknown && d.kind != n.kind) return true;
    if (d.kind == NodeKind::FogDevice && n.compute &&
        (n.compute->total_processing != d.total_processing ||
         n.compute->total_memory != d.total_memory))
      return true;
    if (!d.address.empty() && d.address != n.address) return true;
    return false;
  }

  static void apply_node_decl(Node& n, const NodeDecl& d) {
    if (d.kind != NodeKind::Unknown && d.kind != n.kind) {
      n.kind = d.kind;
      if (d.kind == NodeKind::FogDevice && !n.compute)
        n.compute = ComputeLedger{d.total_processing, d.total_memory, 0, 0};
      if (d.kind != NodeKind::FogDevice) n.compute.reset();
    }
    if (n.kind == NodeKind::FogDevice && n.compute &&
        d.kind == NodeKind::FogDevice) {
      n.compute->total_processing = d.total_processing;
      n.compute->total_memory = d.total_memory;  // allocations preserved
    }
    if (!d.address.empty()) n.address = d.address;
  }

  static bool link_differs(const Link& l, const LinkDecl& d) {
    return l.src_port != d.src_port || l.dst_port != d.dst_port ||
           l.total_bw != d.total_bw;
  }

  void remove_node_quiet(const NodeId& id) {
    for (auto it = links_.begin(); it != links_.end();) {
      if (it->first.first == id || it->first.second == id) {
        erase_neighbor(it->first.first, it->first.second);
        it = links_.erase(it);
      } else {
        ++it;
      }
    }
    nodes_.erase(id);
  }

  void require_node(const NodeId& id) const {
    if (!nodes_.count(id)) throw TopologyError("link endpoint not in topology: " + id);
  }

  Link& link_mut(const NodeId& src, const NodeId& dst) {
    auto it = links_.find({src, dst});
    if (it == links_.end()) throw TopologyError("unknown link: " + src + " -> " + dst);
    return it->second;
  }

  ComputeLedger& compute_mut(const NodeId& fog) {
    Node& n = node(fog);
    if (n.kind != NodeKind::FogDevice || !n.compute)
      throw TopologyError(fog + " is not a fog-device");
    return *n.compute;
  }

  void insert_neighbor(const NodeId& src, const NodeId& dst) {
    auto& v = out_[src];
    v.insert(std::lower_bound(v.begin(), v.end(), dst), dst);
  }

  void erase_neighbor(const NodeId& src, const NodeId& dst) {
    auto it = out_.find(src);
    if (it == out_.end()) return;
    auto& v = it->second;
    auto pos = std::lower_bound(v.begin(), v.end(), dst);
    if (pos != v.end() && *pos == dst) v.erase(pos);
    if (v.empty()) out_.erase(it);
  }

  void bump() { ++revision_; }

  std::map<NodeId, Node> nodes_;
  std::map<LinkKey, Link> links_;
  std::map<NodeId, std::vector<NodeId>> out_;
  std::uint64_t revision_ = 0;
};

inline TopologySnapshot snapshot_of(const Topology& t) {
  TopologySnapshot s;
  for (const auto& [id, n] : t.nodes()) {
    NodeDecl d{id, n.kind};
    if (n.compute) {
      d.total_processing = n.compute->total_processing;
      d.total_memory = n.compute->total_memory;
    }
    d.address = n.address;
    s.nodes.push_back(d);
  }
  for (const auto& [key, l] : t.links())
    s.links.push_back(LinkDecl{l.src, l.dst, l.src_port, l.dst_port, l.total_bw});
  return s;
}

// Types a node from a boot-time greeting. Creates the node first when
// discovery has not seen it yet. Re-greeting with the same type is a
// no-op; a type conflict signals a misconfigured device.
inline void register_greeting(Topology& t, const protocol::Greeting& g) {
  if (g.device_type != NodeKind::EndDevice && g.device_type != NodeKind::FogDevice)
    throw TopologyError("greeting must declare an end-device or a fog-device");
  if (!t.find_node(g.node_id)) t.add_node(NodeDecl{g.node_id, NodeKind::Unknown});
  Node& n = t.node(g.node_id);
  if (n.kind != NodeKind::Unknown && n.kind != g.device_type)
    throw TopologyError("conflicting re-registration of " + g.node_id + ": " +
                        std::string(to_string(n.kind)) + " vs " +
                        std::string(to_string(g.device_type)));
  if (n.kind == g.device_type) {
    if (!g.address.empty()) n.address = g.address;
    return;
  }
  n.kind = g.device_type;
  if (!g.address.empty()) n.address = g.address;
  if (g.device_type == NodeKind::FogDevice)
    n.compute = ComputeLedger{g.total_processing, g.total_memory, 0, 0};
}

// "openflow:" + the decimal value of the 48-bit MAC, which is how
// discovery data sets are correlated with switch bridge rows.
inline NodeId mac_to_openflow_id(const std::string& mac) {
  if (mac.size() != 17) throw Error("malformed MAC address: " + mac);
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < 17; ++i) {
    if (i % 3 == 2) {
      if (mac[i] != ':') throw Error("malformed MAC address: " + mac);
      continue;
    }
    const char c = mac[i];
    std::uint64_t digit;
    if (c >= '0' && c <= '9') digit = static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') digit = static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') digit = static_cast<std::uint64_t>(c - 'A' + 10);
    else throw Error("malformed MAC address: " + mac);
    value = (value << 4) | digit;
  }
  return "openflow:" + std::to_string(value);
}

namespace detail {

inline NodeKind parse_kind(const std::string& s) {
  if (s == "end") return NodeKind::EndDevice;
  if (s == "fog") return NodeKind::FogDevice;
  if (s == "switch") return NodeKind::Switch;
  if (s == "controller") return NodeKind::Controller;
  if (s == "unknown") return NodeKind::Unknown;
  throw TopologyError("unknown node kind: " + s);
}

}  // namespace detail

// Topology document: one JSON object with `nodes` and `links` arrays.
// Fog nodes declare `total_processing` (fractional cores) and
// `total_memory` (bytes). Reverse edges are generated for every link
// unless `duplex` is false.
inline Topology topology_from_json(const nlohmann::json& j) {
  Topology t;
  const bool duplex = j.value("duplex", true);
  for (const auto& n : j.at("nodes")) {
    NodeDecl d;
    d.id = n.at("id").get<std::string>();
    d.kind = detail::parse_kind(n.value("kind", std::string("unknown")));
    if (n.contains("total_processing"))
      d.total_processing = millicores_from_cores(n.at("total_processing").get<double>());
    if (n.contains("total_memory")) d.total_memory = n.at("total_memory").get<MemBytes>();
    d.address = n.value("address", std::string{});
    t.add_node(d);
  }
  if (j.contains("links")) {
    for (const auto& l : j.at("links")) {
      LinkDecl d;
      d.src = l.at("src").get<std::string>();
      d.dst = l.at("dst").get<std::string>();
      d.src_port = l.value("src_port", PortNo{0});
      d.dst_port = l.value("dst_port", PortNo{0});
      d.total_bw = l.at("total_bw").get<Bps>();
      if (duplex) t.add_duplex_link(d); else t.add_link(d);
    }
  }
  return t;
}

// Inverse of topology_from_json. Emits every directed link explicitly
// (duplex: false) so arbitrary graphs round-trip.
inline nlohmann::json topology_to_json(const Topology& t) {
  nlohmann::json j;
  j["duplex"] = false;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, n] : t.nodes()) {
    nlohmann::json node{{"id", id}, {"kind", to_string(n.kind)}};
    if (n.compute) {
      node["total_processing"] = static_cast<double>(n.compute->total_processing) / 1000.0;
      node["total_memory"] = n.compute->total_memory;
    }
    if (!n.address.empty()) node["address"] = n.address;
    j["nodes"].push_back(std::move(node));
  }
  j["links"] = nlohmann::json::array();
  for (const auto& [key, l] : t.links())
    j["links"].push_back({{"src", l.src},
                          {"dst", l.dst},
                          {"src_port", l.src_port},
                          {"dst_port", l.dst_port},
                          {"total_bw", l.total_bw}});
  return j;
}

inline Topology topology_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open topology file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("invalid topology file " + path + ": " + e.what());
  }
  return topology_from_json(j);
}

}  // namespace fognet
