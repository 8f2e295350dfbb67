#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fognet/topology.hpp"
#include "oracles.hpp"

using namespace fognet;

namespace {

Topology small_net() {
  Topology t;
  t.add_node(NodeDecl{"end:1", NodeKind::EndDevice});
  t.add_node(NodeDecl{"openflow:1", NodeKind::Switch});
  t.add_node(NodeDecl{"openflow:2", NodeKind::Switch});
  NodeDecl fog{"fog:1", NodeKind::FogDevice};
  fog.total_processing = cores(4);
  fog.total_memory = gib(8);
  t.add_node(fog);
  t.add_duplex_link(LinkDecl{"end:1", "openflow:1", 1, 1, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:1", "openflow:2", 2, 1, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:2", "fog:1", 2, 1, gbps(1)});
  return t;
}

}  // namespace

TEST_CASE("available bandwidth is total minus allocated") {
  Link l{"a", "b", 1, 1, gbps(1), 0};
  CHECK(l.available_bw() == gbps(1));
  l.alloc_bw = mbps(300);
  CHECK(l.available_bw() == mbps(700));
  l.alloc_bw = gbps(1);
  CHECK(l.available_bw() == 0);
}

TEST_CASE("mac addresses map to openflow node ids") {
  CHECK(mac_to_openflow_id("00:00:00:00:00:01") == "openflow:1");
  CHECK(mac_to_openflow_id("00:00:00:00:00:ff") == "openflow:255");
  CHECK(mac_to_openflow_id("00:11:22:33:44:55") == "openflow:73588229205");
  // independent digit-accumulation oracle over random addresses
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> hex(0, 15);
  const char* digits = "0123456789abcdef";
  for (int i = 0; i < 200; ++i) {
    std::string mac;
    for (int oct = 0; oct < 6; ++oct) {
      if (oct) mac += ':';
      mac += digits[hex(rng)];
      mac += digits[hex(rng)];
    }
    CHECK(mac_to_openflow_id(mac) == "openflow:" + std::to_string(oracles::mac_value(mac)));
  }
  CHECK_THROWS_AS(mac_to_openflow_id("00:00:00:00:00"), Error);
  CHECK_THROWS_AS(mac_to_openflow_id("00:00:00:00:00:0g"), Error);
  CHECK_THROWS_AS(mac_to_openflow_id("00-00-00-00-00-01"), Error);
}

TEST_CASE("greetings type nodes and initialize fog ledgers") {
  Topology t = small_net();
  t.add_node(NodeDecl{"fog:2", NodeKind::Unknown});

  protocol::Greeting g;
  g.node_id = "fog:2";
  g.device_type = NodeKind::FogDevice;
  g.total_processing = cores(4);
  g.total_memory = gib(8);
  register_greeting(t, g);

  const Node& fog = t.node("fog:2");
  REQUIRE(fog.kind == NodeKind::FogDevice);
  REQUIRE(fog.compute.has_value());
  CHECK(fog.compute->total_processing == cores(4));
  CHECK(fog.compute->total_memory == gib(8));
  CHECK(fog.compute->alloc_processing == 0);
  CHECK(fog.compute->alloc_memory == 0);

  SECTION("re-greeting with the same type is a no-op") {
    t.charge_compute("fog:2", cores(1), gib(1));
    register_greeting(t, g);
    CHECK(t.node("fog:2").compute->alloc_processing == cores(1));
  }

  SECTION("conflicting type is an error") {
    protocol::Greeting end;
    end.node_id = "end:9";
    end.device_type = NodeKind::EndDevice;
    register_greeting(t, end);  // creates the node
    CHECK(t.node("end:9").kind == NodeKind::EndDevice);
    end.device_type = NodeKind::FogDevice;
    end.total_processing = cores(1);
    end.total_memory = gib(1);
    CHECK_THROWS_AS(register_greeting(t, end), TopologyError);
  }
}

TEST_CASE("identical snapshot yields an empty diff and stable revision") {
  Topology t = small_net();
  const auto rev = t.revision();
  const ChangeSet diff = t.update(snapshot_of(t));
  CHECK(diff.empty());
  CHECK(t.revision() == rev);
}

TEST_CASE("additive snapshot diff reports new elements") {
  Topology t = small_net();
  TopologySnapshot s = snapshot_of(t);
  s.nodes.push_back(NodeDecl{"openflow:4", NodeKind::Switch});
  s.links.push_back(LinkDecl{"openflow:2", "openflow:4", 9, 9, gbps(1)});
  s.links.push_back(LinkDecl{"openflow:4", "openflow:2", 9, 9, gbps(1)});
  const auto rev = t.revision();
  const ChangeSet diff = t.update(s);
  CHECK(diff.added_nodes == std::vector<NodeId>{"openflow:4"});
  CHECK(diff.added_links.size() == 2);
  CHECK(diff.removed_nodes.empty());
  CHECK(t.revision() > rev);
  CHECK(t.find_link("openflow:4", "openflow:2") != nullptr);
}

TEST_CASE("snapshot with dangling link endpoint is rejected whole") {
  Topology t = small_net();
  TopologySnapshot s = snapshot_of(t);
  s.links.push_back(LinkDecl{"openflow:2", "ghost:1", 3, 1, gbps(1)});
  const auto rev = t.revision();
  CHECK_THROWS_AS(t.update(s), TopologyError);
  CHECK(t.revision() == rev);
  CHECK(t.nodes().size() == 4);
}

TEST_CASE("removal survives in the diff and ledgers track survivors") {
  Topology t = small_net();
  t.charge_compute("fog:1", cores(1), gib(1));
  t.charge_bw("end:1", "openflow:1", mbps(100));

  TopologySnapshot s = snapshot_of(t);
  std::erase_if(s.nodes, [](const NodeDecl& d) { return d.id == "fog:1"; });
  std::erase_if(s.links, [](const LinkDecl& d) { return d.src == "fog:1" || d.dst == "fog:1"; });

  const ChangeSet diff = t.update(s);
  CHECK(diff.removed_nodes == std::vector<NodeId>{"fog:1"});
  CHECK(diff.removed_links.size() == 2);
  CHECK(t.find_node("fog:1") == nullptr);
  // surviving ledgers untouched
  CHECK(t.link("end:1", "openflow:1").alloc_bw == mbps(100));

  // the ledger-bearing node set now equals the snapshot survivor set
  for (const auto& [id, n] : t.nodes())
    if (n.compute) FAIL("unexpected compute ledger on " + id);
}

TEST_CASE("diff applied to the pre-state reproduces the snapshot") {
  std::mt19937 rng(21);
  for (int round = 0; round < 50; ++round) {
    Topology t = oracles::random_graph(rng);
    Topology mutated = oracles::random_graph(rng);
    TopologySnapshot target = snapshot_of(mutated);
    t.update(target);
    // after update, a second update with the same snapshot must be a no-op
    CHECK(t.update(target).empty());
    CHECK(t.nodes().size() == mutated.nodes().size());
    CHECK(t.links().size() == mutated.links().size());
    for (const auto& [key, l] : mutated.links()) {
      const Link* got = t.find_link(key.first, key.second);
      REQUIRE(got != nullptr);
      CHECK(got->total_bw == l.total_bw);
    }
  }
}

TEST_CASE("reverse edge pairing holds for duplex links") {
  Topology t = small_net();
  for (const auto& [key, l] : t.links()) {
    const Link* rev = t.find_link(key.second, key.first);
    REQUIRE(rev != nullptr);
    CHECK(rev->src_port == l.dst_port);
    CHECK(rev->dst_port == l.src_port);
  }
}

TEST_CASE("ledgers never over-allocate under random operation sequences") {
  std::mt19937 rng(5);
  Topology t = small_net();
  std::uniform_int_distribution<int> op(0, 3);
  std::uniform_int_distribution<Bps> amount(1, 200);
  std::vector<std::pair<LinkKey, Bps>> charges;
  for (int i = 0; i < 2000; ++i) {
    const Bps amt = mbps(amount(rng));
    switch (op(rng)) {
      case 0:
      case 1: {
        auto it = t.links().begin();
        std::advance(it, static_cast<long>(i) % static_cast<long>(t.links().size()));
        const LinkKey key = it->first;
        try {
          t.charge_bw(key.first, key.second, amt);
          charges.push_back({key, amt});
        } catch (const TopologyError&) {
          // over-allocation rejected; ledger must be unchanged and legal
        }
        break;
      }
      default: {
        if (charges.empty()) break;
        auto [key, amt2] = charges.back();
        charges.pop_back();
        t.release_bw(key.first, key.second, amt2);
        break;
      }
    }
    for (const auto& [key, l] : t.links()) CHECK(l.alloc_bw <= l.total_bw);
  }
}

TEST_CASE("topology file round trip with duplex expansion") {
  const auto j = nlohmann::json::parse(R"({
    "nodes": [
      {"id": "end:1", "kind": "end"},
      {"id": "openflow:1", "kind": "switch"},
      {"id": "fog:1", "kind": "fog", "total_processing": 4.0, "total_memory": 8589934592}
    ],
    "links": [
      {"src": "end:1", "dst": "openflow:1", "src_port": 1, "dst_port": 1, "total_bw": 1000000000},
      {"src": "openflow:1", "dst": "fog:1", "src_port": 2, "dst_port": 1, "total_bw": 1000000000}
    ]
  })");
  Topology t = topology_from_json(j);
  CHECK(t.nodes().size() == 3);
  CHECK(t.links().size() == 4);  // duplex default
  CHECK(t.node("fog:1").compute->total_processing == cores(4));
  CHECK(t.find_link("fog:1", "openflow:1") != nullptr);
}
