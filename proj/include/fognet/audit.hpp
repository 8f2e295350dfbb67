// Independent cross-checks for the allocation engine: an exhaustive
// path/servicer enumerator (no heap, no incremental relaxation) and a
// randomized operation fuzz that replays the ledger from first
// principles after every step. Deliberately shares no code with the
// shortest-path implementation it audits.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fognet/raa.hpp"
#include "fognet/topology.hpp"

namespace fognet::audit {

struct ExhaustiveChoice {
  NodeId fog;
  std::vector<NodeId> path;  // end-device first
  double cost = 0.0;
};

namespace detail {

inline void walk(const Topology& t, const NodeId& at, const NodeId& to, Bps rate,
                 std::vector<NodeId>& stack, std::set<NodeId>& seen, double cost,
                 std::optional<ExhaustiveChoice>& best, const NodeId& fog) {
  if (at == to) {
    if (!best || cost < best->cost) best = ExhaustiveChoice{fog, stack, cost};
    return;
  }
  for (const NodeId& next : t.out_neighbors(at)) {
    if (seen.count(next)) continue;
    if (next != to && t.node(next).kind != NodeKind::Switch) continue;
    const Link& fwd = t.link(at, next);
    const Link* rev = t.find_link(next, at);
    if (fwd.available_bw() < rate || !rev || rev->available_bw() < rate) continue;
    seen.insert(next);
    stack.push_back(next);
    walk(t, next, to, rate, stack, seen,
         cost + 1.0 / (static_cast<double>(fwd.available_bw()) / 1e6), best, fog);
    stack.pop_back();
    seen.erase(next);
  }
}

}  // namespace detail

// Minimum-cost (servicer, simple path) pair by brute force, or nullopt
// when no eligible fog is reachable with the requested rate.
inline std::optional<ExhaustiveChoice> exhaustive_best_allocation(const Topology& t,
                                                                  const raa::ResourceRequest& r) {
  std::optional<ExhaustiveChoice> best;
  for (const auto& [id, node] : t.nodes()) {
    if (node.kind != NodeKind::FogDevice || !node.compute) continue;
    if (!(node.compute->available_processing() > r.processing &&
          node.compute->available_memory() > r.memory))
      continue;
    std::vector<NodeId> stack{r.end_device};
    std::set<NodeId> seen{r.end_device};
    detail::walk(t, r.end_device, id, r.bw, stack, seen, 0.0, best, id);
  }
  return best;
}

struct AuditReport {
  bool ok = true;
  std::uint64_t operations = 0;
  std::uint64_t allocations = 0;
  std::uint64_t releases = 0;
  std::string counterexample;
};

namespace detail {

inline bool ledgers_match(const Topology& t, const std::vector<raa::Reservation>& live,
                          std::string& why) {
  std::map<LinkKey, Bps> expect_bw;
  std::map<NodeId, std::pair<Millicores, MemBytes>> expect_compute;
  for (const auto& res : live) {
    for (const Link& l : res.plan.path) {
      expect_bw[{l.src, l.dst}] += res.plan.request.bw;
      expect_bw[{l.dst, l.src}] += res.plan.request.bw;
    }
    auto& c = expect_compute[res.plan.fog];
    c.first += res.plan.request.processing;
    c.second += res.plan.request.memory;
  }
  for (const auto& [key, link] : t.links()) {
    const Bps want = expect_bw.count(key) ? expect_bw.at(key) : 0;
    if (link.alloc_bw != want) {
      std::ostringstream os;
      os << "ledger mismatch on link " << key.first << " -> " << key.second << ": charged "
         << link.alloc_bw << ", live reservations sum to " << want;
      why = os.str();
      return false;
    }
  }
  for (const auto& [id, node] : t.nodes()) {
    if (!node.compute) continue;
    const auto want = expect_compute.count(id) ? expect_compute.at(id)
                                               : std::pair<Millicores, MemBytes>{0, 0};
    if (node.compute->alloc_processing != want.first ||
        node.compute->alloc_memory != want.second) {
      why = "compute ledger mismatch on " + id;
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Random allocate/deallocate fuzz against a copy of `base`. After every
// operation the ledgers are recomputed from the live reservation set;
// on graphs small enough to enumerate, every allocation decision is
// also compared against the exhaustive oracle. `corrupt_ledger` plants
// one unbacked charge mid-run as a negative control.
inline AuditReport fuzz_audit(const Topology& base, std::uint64_t budget, unsigned seed,
                              bool corrupt_ledger = false) {
  AuditReport report;
  Topology t = base;
  std::mt19937 rng(seed);

  std::vector<NodeId> ends;
  for (const auto& [id, n] : t.nodes())
    if (n.kind == NodeKind::EndDevice) ends.push_back(id);
  if (ends.empty()) {
    report.ok = false;
    report.counterexample = "topology has no end-devices to fuzz with";
    return report;
  }
  const bool enumerable = t.nodes().size() <= 12;

  std::vector<raa::Reservation> live;
  std::uniform_int_distribution<int> coin(0, 9);
  std::uniform_int_distribution<std::size_t> pick_end(0, ends.size() - 1);
  std::uniform_int_distribution<Bps> bw_mbps(1, 300);
  std::uniform_int_distribution<Millicores> cpu(50, 3000);
  std::uniform_int_distribution<MemBytes> mem_mib(32, 4096);
  std::uint64_t next_id = 0;

  for (std::uint64_t op = 0; op < budget; ++op) {
    ++report.operations;
    if (corrupt_ledger && op == budget / 2 && !t.links().empty()) {
      auto it = t.links().begin();
      t.charge_bw(it->first.first, it->first.second, 1);  // unbacked charge
    }
    if (coin(rng) < 6 || live.empty()) {
      raa::ResourceRequest r;
      r.end_device = ends[pick_end(rng)];
      r.bw = mbps(bw_mbps(rng));
      r.processing = cpu(rng);
      r.memory = mib(mem_mib(rng));
      r.image = "fuzz/probe";

      std::optional<ExhaustiveChoice> expect;
      if (enumerable) expect = exhaustive_best_allocation(t, r);

      ++next_id;
      const auto result =
          raa::allocate(t, r, {"fuzz-" + std::to_string(next_id),
                               static_cast<TransportPort>(1024 + next_id % 60000), next_id});
      if (enumerable) {
        if (result.ok() != expect.has_value()) {
          report.ok = false;
          report.counterexample =
              "feasibility disagreement on op " + std::to_string(op) + " from " + r.end_device;
          return report;
        }
        if (result.ok()) {
          const double got = result.reservation->plan.total_cost;
          const double want = expect->cost;
          if (std::abs(got - want) > 1e-12 * std::max(1.0, std::abs(want))) {
            std::ostringstream os;
            os << "suboptimal path on op " << op << ": cost " << got << " vs exhaustive "
               << want;
            report.ok = false;
            report.counterexample = os.str();
            return report;
          }
        }
      }
      if (result.ok()) {
        live.push_back(*result.reservation);
        ++report.allocations;
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
      const std::size_t idx = pick(rng);
      raa::deallocate(t, live[idx]);
      live.erase(live.begin() + static_cast<long>(idx));
      ++report.releases;
    }

    std::string why;
    if (!detail::ledgers_match(t, live, why)) {
      report.ok = false;
      report.counterexample = "after op " + std::to_string(op) + ": " + why;
      return report;
    }
  }
  return report;
}

}  // namespace fognet::audit
