// Acceptance suite: one named check per release criterion, one PASS or
// FAIL line each, non-zero exit when anything fails. Tolerances are
// pinned here, in code.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fognet/audit.hpp"
#include "fognet/orchestrator.hpp"
#include "fognet/protocol.hpp"
#include "fognet/raa.hpp"
#include "fognet/simnet.hpp"
#include "fognet/southbound.hpp"
#include "fognet/topology.hpp"
#include "fixtures.hpp"
#include "msggen.hpp"
#include "oracles.hpp"

using namespace fognet;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFailure {
  std::string what;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw CheckFailure{what};
}

struct Rig {
  southbound::SimulatedFabric fabric;
  Orchestrator orch;

  explicit Rig(Topology t, OrchestratorConfig cfg = {})
      : fabric(), orch(std::move(t), fabric, cfg) {
    orch.set_device_seeder([this](const Topology& topo, const NodeId& id) {
      seed_fabric_device(fabric, topo, id);
    });
    orch.bootstrap();
  }
};

protocol::ServiceRequest make_request(const std::string& id, Bps bw, Millicores cpu,
                                      MemBytes mem) {
  protocol::ServiceRequest r;
  r.request_id = id;
  r.image = "svc/echo";
  r.bw = bw;
  r.processing = cpu;
  r.memory = mem;
  return r;
}

// Chain of h data-path switches, each two control hops from the
// controller via a hub too narrow for data traffic.
Topology hub_chain(int h) {
  Topology t;
  t.add_node(NodeDecl{"ctrl:1", NodeKind::Controller});
  t.add_node(NodeDecl{"end:1", NodeKind::EndDevice});
  NodeDecl fog{"fog:1", NodeKind::FogDevice};
  fog.total_processing = cores(4);
  fog.total_memory = gib(8);
  t.add_node(fog);
  t.add_node(NodeDecl{"openflow:900", NodeKind::Switch});
  for (int i = 1; i <= h; ++i)
    t.add_node(NodeDecl{"openflow:" + std::to_string(i), NodeKind::Switch});
  PortNo hub_port = 0;
  t.add_duplex_link(LinkDecl{"ctrl:1", "openflow:900", 1, ++hub_port, gbps(1)});
  for (int i = 1; i <= h; ++i)
    t.add_duplex_link(
        LinkDecl{"openflow:900", "openflow:" + std::to_string(i), ++hub_port, 9, mbps(10)});
  t.add_duplex_link(LinkDecl{"end:1", "openflow:1", 1, 1, gbps(1)});
  for (int i = 1; i < h; ++i)
    t.add_duplex_link(LinkDecl{"openflow:" + std::to_string(i),
                               "openflow:" + std::to_string(i + 1), 2, 1, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:" + std::to_string(h), "fog:1", 2, 1, gbps(1)});
  return t;
}

// ---------------------------------------------------------------------------

// 1. Allocation optimality and failure completeness against exhaustive
//    enumeration on >= 1000 random graphs, exact cost match, < 60 s.
std::string check_raa_optimality() {
  const auto started = Clock::now();
  std::mt19937 rng(20240601);
  int feasible = 0, infeasible = 0;
  for (int round = 0; round < 1000; ++round) {
    Topology t = oracles::random_graph(rng, 10, 4);
    const raa::ResourceRequest r = oracles::random_request(rng);
    const auto oracle = oracles::best_allocation(t, r);
    const auto result = raa::allocate(t, r, {"svc", 5201, 1});
    require(result.ok() == oracle.has_value(),
            "feasibility disagreement on round " + std::to_string(round));
    if (oracle) {
      ++feasible;
      const double got = result.reservation->plan.total_cost;
      require(std::abs(got - oracle->cost) <= 1e-12 * std::max(1.0, std::abs(oracle->cost)),
              "cost mismatch on round " + std::to_string(round) + ": " +
                  std::to_string(got) + " vs " + std::to_string(oracle->cost));
    } else {
      ++infeasible;
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - started).count();
  require(secs < 60.0, "oracle sweep took " + std::to_string(secs) + " s");
  require(feasible > 100 && infeasible > 20, "generator did not exercise both outcomes");
  std::ostringstream os;
  os << "1000 graphs, " << feasible << " feasible / " << infeasible << " infeasible, "
     << std::fixed << secs << " s";
  return os.str();
}

// 2. Exactly 2h queues and 2h flows per reservation over h switches;
//    deallocation removes exactly those.
std::string check_reservation_footprint() {
  int audited = 0;
  for (int h : {1, 2, 3, 5}) {
    Rig rig(hub_chain(h));
    const auto before = rig.fabric.dump();
    const auto resp =
        rig.orch.service_end_device(make_request("r", mbps(50), 400, mib(256)), "end:1");
    require(resp.success, "allocation failed on a " + std::to_string(h) + "-switch chain");
    const auto res = rig.orch.find_reservation(resp.service_id);
    require(res->plan.switch_count() == static_cast<std::size_t>(h), "unexpected path length");
    require(rig.fabric.total_queues() == 2u * static_cast<std::size_t>(h),
            "queue count != 2h on h=" + std::to_string(h));
    require(rig.fabric.total_flows() == 2u * static_cast<std::size_t>(h),
            "flow count != 2h on h=" + std::to_string(h));
    std::size_t tagged = 0;
    for (const auto& q : res->plan.queues) {
      require(rig.fabric.find_queue(q.switch_id, q.port, q.queue_id) != nullptr,
              "reservation queue missing from fabric");
      ++tagged;
    }
    require(tagged == 2u * static_cast<std::size_t>(h), "reservation records != 2h queues");
    for (const auto& f : res->plan.flows)
      require(rig.fabric.flow_count(f.switch_id, res->plan.cookie) == 2,
              "per-switch cookie flow count != 2");
    require(rig.orch.service_shutdown_request({resp.service_id}).ok, "shutdown failed");
    require(rig.fabric.dump() == before, "deallocation left fabric residue on h=" +
                                             std::to_string(h));
    ++audited;
  }
  return std::to_string(audited) + " path lengths audited (h = 1,2,3,5)";
}

// 3. Ledger reconciliation after >= 500 fuzzed operations, bit-exact.
std::string check_ledger_reconciliation() {
  Rig rig(fixtures::testbed());
  std::mt19937 rng(7781);
  std::uniform_int_distribution<int> coin(0, 9);
  std::uniform_int_distribution<Bps> bw(1, 120);
  std::uniform_int_distribution<Millicores> cpu(50, 900);
  std::uniform_int_distribution<MemBytes> mem(32, 1024);
  std::uniform_int_distribution<int> end_pick(1, 8);
  std::uniform_int_distribution<int> fog_pick(1, 4);
  std::uniform_real_distribution<double> frac(0.0, 1.0);

  std::vector<std::string> live;
  std::uint64_t ops = 0;
  int allocs = 0, releases = 0, reports = 0;
  for (int step = 0; step < 600; ++step) {
    const int what = coin(rng);
    if (what < 5 || live.empty()) {
      const auto resp = rig.orch.service_end_device(
          make_request("r" + std::to_string(step), mbps(bw(rng)), cpu(rng), mib(mem(rng))),
          "end:" + std::to_string(end_pick(rng)));
      if (resp.success) {
        live.push_back(resp.service_id);
        ++allocs;
      }
    } else if (what < 8) {
      std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
      const std::size_t idx = pick(rng);
      require(rig.orch.service_shutdown_request({live[idx]}).ok, "live shutdown failed");
      live.erase(live.begin() + static_cast<long>(idx));
      ++releases;
    } else {
      rig.orch.service_fog_device(
          {"fog:" + std::to_string(fog_pick(rng)), frac(rng), frac(rng), double(step)});
      ++reports;
    }
    ++ops;
    const ReconcileReport rec = rig.orch.reconcile();
    require(rec.ok, "reconciliation broke after op " + std::to_string(step) + ": " + rec.detail);
  }
  require(ops >= 500, "fuzz budget not reached");
  std::ostringstream os;
  os << ops << " ops (" << allocs << " alloc, " << releases << " release, " << reports
     << " reports), exact after every op";
  return os.str();
}

// 4. Concurrent requests complete in lock-acquisition order with
//    non-overlapping critical sections.
std::string check_serialization() {
  Rig rig(fixtures::testbed());
  constexpr int kThreads = 16;
  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (int i = 0; i < kThreads; ++i) {
    workers.emplace_back([&rig, &ok, i] {
      const auto resp = rig.orch.service_end_device(
          make_request("r" + std::to_string(i), mbps(15), 100, mib(64)),
          "end:" + std::to_string(1 + i % 8));
      if (resp.success) ++ok;
    });
  }
  for (auto& w : workers) w.join();
  require(ok == kThreads, "not all concurrent requests succeeded");

  const auto trace = rig.orch.trace();
  require(trace.size() == kThreads, "trace entry per request missing");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    require(trace[i].enter_seq < trace[i].exit_seq, "critical section with inverted bounds");
    if (i > 0)
      require(trace[i - 1].exit_seq < trace[i].enter_seq,
              "overlapping critical sections at trace index " + std::to_string(i));
  }
  require(rig.orch.reconcile().ok, "ledgers broke under concurrency");
  return std::to_string(kThreads) + " concurrent requests, disjoint ordered sections";
}

// 5. Stream reservations at 100/200/300 Mbps: no sample above the
//    allocation, storm-window median == quiet-window median exactly.
std::string check_bandwidth_guarantee() {
  nlohmann::json events = nlohmann::json::array();
  const std::map<std::string, double> alloc{{"end:1", 100.0}, {"end:4", 200.0}, {"end:6", 300.0}};
  for (const auto& [node, rate] : alloc)
    events.push_back({{"at", 0.0}, {"node", node}, {"action", "stream"},
                      {"rate", static_cast<Bps>(rate * 1e6)}, {"duration", 90},
                      {"cpu", 0.25}, {"mem", mib(128)}});
  for (double at : {30.0, 60.0})
    for (int i = 0; i < 15; ++i)
      events.push_back({{"at", at}, {"node", "end:8"}, {"action", "request"},
                        {"bw", mbps(5)}, {"cpu", 0.05}, {"mem", mib(32)}, {"hold", 1.0}});

  const simnet::Scenario sc = simnet::scenario_from_json({{"events", events}});
  const simnet::MetricSet m = simnet::run_scenario(fixtures::testbed(), sc, {});
  require(m.successes == 3 + 30, "storm scenario allocations failed");
  require(m.reconciliation_ok, "scenario did not reconcile");

  std::map<std::string, std::vector<std::pair<double, double>>> streams;
  for (const auto& s : m.samples)
    if (s.series.rfind("throughput_mbps:", 0) == 0) streams[s.series].push_back({s.time, s.value});
  require(streams.size() == 3, "expected three stream series");

  for (const auto& [series, samples] : streams) {
    const std::string node = series.substr(16, 5);
    const double limit = alloc.at(node);
    std::vector<double> storm_window, quiet_window;
    require(samples.size() == 90, "expected 90 one-second samples for " + node);
    for (const auto& [time, value] : samples) {
      require(value <= limit, node + " sample exceeds its allocation");
      const bool storm = (time >= 30 && time < 45) || (time >= 60 && time < 75);
      (storm ? storm_window : quiet_window).push_back(value);
    }
    const double diff = simnet::quartiles(storm_window).median -
                        simnet::quartiles(quiet_window).median;
    require(diff == 0.0, node + " storm/quiet median difference " + std::to_string(diff));
  }
  return "3 streams x 90 samples, storm dip = 0 exactly";
}

// 6. Allocation timing trends: more fogs per switch is slower at fixed
//    topology; the tree fabric is no slower than leaf-spine at matched
//    (25,12)-class configurations. Direction only, < 5 min.
std::string check_scalability_trends() {
  const auto started = Clock::now();
  const int reps = 40;
  const int ends = 20;

  auto median_time = [&](simnet::TopologyGenSpec g) {
    const Topology t = simnet::generate_topology(g);
    return simnet::quartiles(simnet::raa_time_per_device(t, reps)).median;
  };

  std::map<int, double> leafspine, tree;
  for (int fogs : {5, 10, 20}) {
    simnet::TopologyGenSpec a;
    a.kind = simnet::TopologyGenSpec::Kind::LeafSpine;
    a.l1 = 25;
    a.l2 = 12;
    a.fogs_per_top_switch = fogs;
    a.end_devices = ends;
    leafspine[fogs] = median_time(a);

    simnet::TopologyGenSpec b;
    b.kind = simnet::TopologyGenSpec::Kind::Tree;
    b.l1 = 25;
    b.l2 = 12;
    b.l3 = 6;
    b.fogs_per_top_switch = fogs;
    b.end_devices = ends;
    tree[fogs] = median_time(b);
  }

  require(leafspine[5] < leafspine[10] && leafspine[10] < leafspine[20],
          "leaf-spine timing not monotone in fogs per switch");
  require(tree[5] < tree[10] && tree[10] < tree[20],
          "tree timing not monotone in fogs per switch");
  for (int fogs : {5, 10, 20})
    require(tree[fogs] <= leafspine[fogs],
            "tree slower than leaf-spine at fogs=" + std::to_string(fogs));

  const double secs = std::chrono::duration<double>(Clock::now() - started).count();
  require(secs < 300.0, "trend sweep exceeded five minutes");
  std::ostringstream os;
  os << std::scientific;
  os.precision(2);
  os << "a: " << leafspine[5] << "/" << leafspine[10] << "/" << leafspine[20] << " s, b: "
     << tree[5] << "/" << tree[10] << "/" << tree[20] << " s (fogs 5/10/20), "
     << std::fixed << secs << " s total";
  return os.str();
}

// 7. Doubling the switch-path length doubles configuration
//    communication delay at zero background load, within 5%.
std::string check_hop_doubling() {
  simnet::DelayModelConfig cfg;
  raa::ResourceRequest r;
  r.end_device = "end:1";
  r.bw = mbps(50);
  r.processing = 400;
  r.memory = mib(256);
  r.image = "svc/echo";

  std::ostringstream detail;
  for (int h : {2, 3, 4}) {
    const double once = simnet::simulate_request(hub_chain(h), r, cfg).config_comm;
    const double twice = simnet::simulate_request(hub_chain(2 * h), r, cfg).config_comm;
    const double ratio = twice / once;
    require(std::abs(ratio - 2.0) <= 0.05 * 2.0,
            "hop doubling ratio " + std::to_string(ratio) + " at h=" + std::to_string(h));
    detail << "h=" << h << ": " << ratio << "x  ";
  }
  return detail.str();
}

// 8. Exactly 55 bytes up and 1000 bytes down per queue creation in the
//    fabric accounting.
std::string check_ovsdb_byte_accounting() {
  southbound::SimulatedFabric fabric;
  fabric.register_switch("openflow:1", {1, 2});
  const auto before = fabric.accounting("openflow:1");
  require(fabric.create_queue({"openflow:1", 1, 1, mbps(10)}).ok, "queue creation failed");
  const auto after = fabric.accounting("openflow:1");
  require(after.queue_up - before.queue_up == 55, "queue creation up bytes != 55");
  require(after.queue_down - before.queue_down == 1000, "queue creation down bytes != 1000");

  // through the whole allocation pipeline: 2h creations on h switches
  for (int h : {1, 3}) {
    Rig rig(hub_chain(h));
    std::uint64_t up0 = 0, down0 = 0;
    for (int i = 1; i <= h; ++i) {
      up0 += rig.fabric.accounting("openflow:" + std::to_string(i)).queue_up;
      down0 += rig.fabric.accounting("openflow:" + std::to_string(i)).queue_down;
    }
    const auto resp =
        rig.orch.service_end_device(make_request("r", mbps(40), 300, mib(128)), "end:1");
    require(resp.success, "allocation failed");
    std::uint64_t up = 0, down = 0;
    for (int i = 1; i <= h; ++i) {
      up += rig.fabric.accounting("openflow:" + std::to_string(i)).queue_up;
      down += rig.fabric.accounting("openflow:" + std::to_string(i)).queue_down;
    }
    require(up - up0 == 2ull * static_cast<std::uint64_t>(h) * 55,
            "allocation queue up bytes != 2h x 55");
    require(down - down0 == 2ull * static_cast<std::uint64_t>(h) * 1000,
            "allocation queue down bytes != 2h x 1000");
  }
  return "55/1000 per creation, 2h x 55/1000 per h-switch allocation";
}

// 9. Codec round-trip identity on 10^4 fuzzed messages per type;
//    truncated frames never consume input.
std::string check_protocol_codec() {
  std::mt19937 rng(424242);
  for (int type = 0; type < 6; ++type) {
    for (int i = 0; i < 10000; ++i) {
      const protocol::Message m = msggen::random_message(rng, type);
      const auto bytes = protocol::encode(m);
      const protocol::DecodeResult r = protocol::decode(bytes);
      require(r.status == protocol::DecodeStatus::Ok, "decode failed: " + r.error);
      require(r.consumed == bytes.size(), "frame not fully consumed");
      require(msggen::equal(m, *r.message), "round trip mismatch on type " +
                                                std::to_string(type));
    }
  }
  // truncation sweep on one frame of each type
  for (int type = 0; type < 6; ++type) {
    const auto bytes = protocol::encode(msggen::random_message(rng, type));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
      const protocol::DecodeResult r =
          protocol::decode(std::span<const std::uint8_t>(bytes.data(), cut));
      require(r.status == protocol::DecodeStatus::NeedMoreData,
              "truncated frame not recognized");
      require(r.consumed == 0, "truncated frame consumed bytes");
    }
  }
  return "60000 round trips, full truncation sweeps clean";
}

// 10. Fault injection at every southbound step leaves topology and
//     fabric byte-identical to the pre-request snapshot.
std::string check_rollback_atomicity() {
  int injected = 0;
  for (int h : {1, 2}) {
    const int steps = 6 * h + 1;  // per switch: 2x(create+place) + 2 flows; then container
    for (int fail_at = 0; fail_at < steps; ++fail_at) {
      Rig rig(hub_chain(h));
      const Topology before = rig.orch.topology_snapshot();
      const auto before_fabric = rig.fabric.dump();

      rig.fabric.arm_fault(static_cast<std::uint64_t>(fail_at));
      const auto resp =
          rig.orch.service_end_device(make_request("r", mbps(25), 200, mib(64)), "end:1");
      rig.fabric.disarm_fault();

      require(!resp.success, "injected fault did not fail the request");
      require(resp.reason == protocol::FailureReason::BackendError, "unexpected failure reason");
      require(rig.fabric.dump() == before_fabric,
              "fabric residue after fault at step " + std::to_string(fail_at));
      const Topology after = rig.orch.topology_snapshot();
      for (const auto& [key, link] : after.links())
        require(link.alloc_bw == before.links().at(key).alloc_bw,
                "ledger residue after fault at step " + std::to_string(fail_at));
      require(after.node("fog:1").compute->alloc_processing == 0, "compute residue");
      require(rig.orch.reconcile().ok, "reconciliation broke after rollback");
      ++injected;

      const auto retry =
          rig.orch.service_end_device(make_request("r2", mbps(25), 200, mib(64)), "end:1");
      require(retry.success, "pipeline dead after rollback");
    }
  }
  return std::to_string(injected) + " injection points, state byte-identical each time";
}

struct Criterion {
  int id;
  const char* name;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "raa-optimality-oracle", check_raa_optimality},
      {2, "reservation-footprint", check_reservation_footprint},
      {3, "ledger-reconciliation", check_ledger_reconciliation},
      {4, "request-serialization", check_serialization},
      {5, "bandwidth-guarantee", check_bandwidth_guarantee},
      {6, "scalability-trends", check_scalability_trends},
      {7, "hop-doubling", check_hop_doubling},
      {8, "ovsdb-byte-accounting", check_ovsdb_byte_accounting},
      {9, "protocol-codec", check_protocol_codec},
      {10, "rollback-atomicity", check_rollback_atomicity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    try {
      const std::string detail = c.run();
      std::printf("PASS %2d %-24s %s\n", c.id, c.name, detail.c_str());
    } catch (const CheckFailure& f) {
      ++failures;
      std::printf("FAIL %2d %-24s %s\n", c.id, c.name, f.what.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL %2d %-24s unexpected error: %s\n", c.id, c.name, e.what());
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criteria failed\n", failures);
  else std::printf("all %zu criteria passed\n", criteria.size());
  return failures == 0 ? 0 : 1;
}
