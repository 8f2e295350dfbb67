// fognet: fog resource orchestration at desk scale.
//
//   gen    generate an evaluation topology file
//   run    replay a scenario and emit metrics
//   sweep  scalability sweeps (allocation timing, communication delay)
//   check  randomized ledger/optimality audit
//   serve  run the controller endpoints over TCP
//
// Exit codes: 0 success, 1 invariant/audit failure, 2 usage or input error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fognet/audit.hpp"
#include "fognet/orchestrator.hpp"
#include "fognet/server.hpp"
#include "fognet/simnet.hpp"
#include "fognet/southbound.hpp"
#include "fognet/topology.hpp"

namespace {

using namespace fognet;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

// --gen "kind=b,l1=25,l2=12,l3=6,fogs=5,ends=20[,bw=1000000000]"
simnet::TopologyGenSpec parse_gen_spec(const std::string& text) {
  simnet::TopologyGenSpec g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("bad generator term: " + item);
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "kind") {
      if (value == "a" || value == "leafspine") g.kind = simnet::TopologyGenSpec::Kind::LeafSpine;
      else if (value == "b" || value == "tree") g.kind = simnet::TopologyGenSpec::Kind::Tree;
      else throw Error("unknown topology kind: " + value);
    } else if (key == "l1") g.l1 = std::stoi(value);
    else if (key == "l2") g.l2 = std::stoi(value);
    else if (key == "l3") g.l3 = std::stoi(value);
    else if (key == "fogs") g.fogs_per_top_switch = std::stoi(value);
    else if (key == "ends") g.end_devices = std::stoi(value);
    else if (key == "bw") g.switch_link_bw = g.host_link_bw = std::stoull(value);
    else throw Error("unknown generator key: " + key);
  }
  return g;
}

Topology load_topology(const std::string& file, const std::string& gen) {
  if (!file.empty() && !gen.empty()) throw Error("give either --topology or --gen, not both");
  if (!file.empty()) return topology_from_file(file);
  if (!gen.empty()) return simnet::generate_topology(parse_gen_spec(gen));
  throw Error("a topology source is required (--topology or --gen)");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

int cmd_gen(const std::string& gen, const std::string& out) {
  const Topology t = simnet::generate_topology(parse_gen_spec(gen));
  const std::string doc = topology_to_json(t).dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << doc;
  } else {
    write_file(out, doc);
    std::size_t switches = 0, fogs = 0, ends = 0;
    for (const auto& [id, n] : t.nodes()) {
      if (n.kind == NodeKind::Switch) ++switches;
      if (n.kind == NodeKind::FogDevice) ++fogs;
      if (n.kind == NodeKind::EndDevice) ++ends;
    }
    std::cout << "wrote " << out << ": " << switches << " switches, " << fogs << " fogs, "
              << ends << " end-devices, " << t.links().size() << " directed links\n";
  }
  return 0;
}

int cmd_run(const std::string& topo_file, const std::string& gen, const std::string& scenario_file,
            const std::string& out_dir, unsigned seed, Bps control_bw, Bps data_bw,
            Bps control_alloc_bw) {
  const Topology t = load_topology(topo_file, gen);
  const simnet::Scenario sc = simnet::scenario_from_file(scenario_file);

  simnet::ScenarioConfig cfg;
  cfg.orch.control_reservation_bw = control_bw;
  cfg.delay.data_bw_used = data_bw;
  cfg.delay.control_bw = control_alloc_bw;
  const simnet::MetricSet m = simnet::run_scenario(t, sc, cfg);

  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  simnet::write_metrics_csv(csv, m);
  write_file(std::filesystem::path(out_dir) / "metrics.csv", csv.str());

  nlohmann::json summary = simnet::summary_json(m);
  summary["seed"] = seed;
  write_file(std::filesystem::path(out_dir) / "summary.json", summary.dump(2) + "\n");

  std::cout << summary.dump(2) << "\n";
  return m.reconciliation_ok ? 0 : 1;
}

nlohmann::json load_grid(const std::string& grid) {
  if (!grid.empty() && grid[0] == '@') {
    std::ifstream in(grid.substr(1));
    if (!in) throw Error("cannot open grid file: " + grid.substr(1));
    nlohmann::json j;
    in >> j;
    return j;
  }
  return nlohmann::json::parse(grid);
}

simnet::TopologyGenSpec grid_topology(const nlohmann::json& spec, int fogs, int ends) {
  simnet::TopologyGenSpec g;
  const std::string kind = spec.value("kind", std::string("a"));
  g.kind = (kind == "b" || kind == "tree") ? simnet::TopologyGenSpec::Kind::Tree
                                           : simnet::TopologyGenSpec::Kind::LeafSpine;
  g.l1 = spec.value("l1", 3);
  g.l2 = spec.value("l2", 3);
  g.l3 = spec.value("l3", g.kind == simnet::TopologyGenSpec::Kind::Tree ? 3 : 0);
  g.fogs_per_top_switch = fogs;
  g.end_devices = ends;
  return g;
}

std::string topology_label(const nlohmann::json& spec) {
  std::string label = spec.value("kind", std::string("a"));
  label += ":" + std::to_string(spec.value("l1", 3)) + "," + std::to_string(spec.value("l2", 3));
  if (spec.contains("l3")) label += "," + std::to_string(spec.value("l3", 0));
  return label;
}

int cmd_sweep(const std::string& kind, const std::string& grid_text, const std::string& out_dir) {
  const nlohmann::json grid = load_grid(grid_text);
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;

  if (kind == "raa_time") {
    const int reps = grid.value("reps", 30);
    const int ends = grid.value("end_devices", 20);
    csv << "topology,fogs_per_switch,metric,median,q1,q3\n";
    for (const auto& topo_spec : grid.at("topologies")) {
      for (const auto& fogs : grid.at("fogs_per_switch")) {
        const Topology t =
            simnet::generate_topology(grid_topology(topo_spec, fogs.get<int>(), ends));
        const auto medians = simnet::raa_time_per_device(t, reps);
        const auto q = simnet::quartiles(medians);
        csv << topology_label(topo_spec) << ',' << fogs.get<int>() << ",raa_time_s,"
            << simnet::format_value(q.median) << ',' << simnet::format_value(q.q1) << ','
            << simnet::format_value(q.q3) << '\n';
      }
    }
  } else if (kind == "alloc_delay") {
    const int ends = grid.value("end_devices", 20);
    const int fogs = grid.value("fogs_per_switch", 5);
    const Bps request_bw = grid.value("request_bw", mbps(10));
    const Topology t = simnet::generate_topology(grid_topology(grid.at("topology"), fogs, ends));
    csv << "data_bw_used,control_bw,hops,metric,median,q1,q3,pairs\n";
    for (const auto& tuple : grid.at("tuples")) {
      simnet::DelayModelConfig cfg;
      cfg.data_bw_used = tuple.at(0).get<Bps>();
      cfg.control_bw = tuple.at(1).get<Bps>();
      for (const auto& row : simnet::alloc_delay_by_hops(t, cfg, request_bw)) {
        csv << cfg.data_bw_used << ',' << cfg.control_bw << ',' << row.hops << ",alloc_comm_s,"
            << simnet::format_value(row.comm.median) << ',' << simnet::format_value(row.comm.q1)
            << ',' << simnet::format_value(row.comm.q3) << ',' << row.pairs << '\n';
      }
    }
  } else {
    throw Error("unknown sweep kind: " + kind + " (raa_time | alloc_delay)");
  }

  write_file(std::filesystem::path(out_dir) / "sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_check(const std::string& topo_file, const std::string& gen, std::uint64_t budget,
              unsigned seed, bool corrupt) {
  const Topology t = load_topology(topo_file, gen);
  const audit::AuditReport report = audit::fuzz_audit(t, budget, seed, corrupt);
  std::cout << "ops=" << report.operations << " allocations=" << report.allocations
            << " releases=" << report.releases << "\n";
  if (!report.ok) {
    std::cout << "AUDIT FAILED: " << report.counterexample << "\n";
    return 1;
  }
  std::cout << "audit passed\n";
  return 0;
}

int cmd_serve(const std::string& topo_file, const std::string& gen,
              const std::string& config_file) {
  ServeConfig cfg;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw Error("cannot open config file: " + config_file);
    nlohmann::json j;
    in >> j;
    cfg = serve_config_from_json(j);
  }

  southbound::SimulatedFabric fabric;
  Orchestrator orch(load_topology(topo_file, gen), fabric, cfg.orch);
  orch.set_device_seeder(
      [&fabric](const Topology& t, const NodeId& id) { seed_fabric_device(fabric, t, id); });
  orch.bootstrap();

  OrchestratorServer server(orch, cfg);
  server.start();
  std::cout << "greeting=" << server.greeting_port() << " service=" << server.service_port()
            << " shutdown=" << server.shutdown_port() << "\n"
            << std::flush;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  // background topology refresh: re-read the file and apply the diff
  auto last_write = std::filesystem::file_time_type::min();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.refresh_period_s));
    if (topo_file.empty()) continue;
    std::error_code ec;
    const auto stamp = std::filesystem::last_write_time(topo_file, ec);
    if (ec || stamp == last_write) continue;
    last_write = stamp;
    try {
      const ChangeSet diff =
          orch.apply_topology_update(snapshot_of(topology_from_file(topo_file)));
      if (!diff.empty())
        std::cout << "topology refreshed: +" << diff.added_nodes.size() << "/-"
                  << diff.removed_nodes.size() << " nodes, +" << diff.added_links.size() << "/-"
                  << diff.removed_links.size() << " links\n";
    } catch (const std::exception& e) {
      std::cerr << "refresh skipped: " << e.what() << "\n";
    }
  }
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fog resource orchestration: allocation engine, simulator, and controller"};
  app.require_subcommand(1);

  std::string topo_file, gen_spec, scenario_file, out_dir = "out", grid, sweep_kind, config_file;
  unsigned seed = 1;
  std::uint64_t budget = 500;
  bool corrupt = false;
  Bps control_bw = mbps(50);
  Bps data_bw = 0;
  Bps control_alloc_bw = mbps(50);

  auto* gen = app.add_subcommand("gen", "generate an evaluation topology file");
  gen->add_option("--gen", gen_spec, "generator spec, e.g. kind=b,l1=25,l2=12,l3=6,fogs=5,ends=20")
      ->required()
      ->envname("FOGNET_GEN");
  std::string gen_out;
  gen->add_option("--out", gen_out, "output file (default stdout)")->envname("FOGNET_OUT");

  auto* run = app.add_subcommand("run", "replay a scenario and emit metrics");
  run->add_option("--topology", topo_file, "topology file")->envname("FOGNET_TOPOLOGY");
  run->add_option("--gen", gen_spec, "generator spec")->envname("FOGNET_GEN");
  run->add_option("--scenario", scenario_file, "scenario file")
      ->required()
      ->envname("FOGNET_SCENARIO");
  run->add_option("--out", out_dir, "output directory")->envname("FOGNET_OUT");
  run->add_option("--seed", seed, "workload seed (recorded in the summary)")
      ->envname("FOGNET_SEED");
  run->add_option("--control-bw", control_bw, "startup control reservation per link, bits/s")
      ->envname("FOGNET_CONTROL_BW");
  run->add_option("--data-load", data_bw, "background data load per link, bits/s")
      ->envname("FOGNET_DATA_LOAD");
  run->add_option("--control-alloc", control_alloc_bw,
                  "bandwidth allocated to control flows, bits/s")
      ->envname("FOGNET_CONTROL_ALLOC");

  auto* sweep = app.add_subcommand("sweep", "run a scalability sweep");
  sweep->add_option("--sweep", sweep_kind, "raa_time | alloc_delay")
      ->required()
      ->envname("FOGNET_SWEEP");
  sweep->add_option("--grid", grid, "grid JSON (inline or @file)")
      ->required()
      ->envname("FOGNET_GRID");
  sweep->add_option("--out", out_dir, "output directory")->envname("FOGNET_OUT");

  auto* check = app.add_subcommand("check", "randomized ledger and optimality audit");
  check->add_option("--topology", topo_file, "topology file")->envname("FOGNET_TOPOLOGY");
  check->add_option("--gen", gen_spec, "generator spec")->envname("FOGNET_GEN");
  check->add_option("--budget", budget, "operation count")->envname("FOGNET_BUDGET");
  check->add_option("--seed", seed, "rng seed")->envname("FOGNET_SEED");
  check->add_flag("--corrupt", corrupt, "inject an unbacked ledger charge (negative control)");

  auto* serve = app.add_subcommand("serve", "run the controller endpoints over TCP");
  serve->add_option("--topology", topo_file, "topology file")->envname("FOGNET_TOPOLOGY");
  serve->add_option("--gen", gen_spec, "generator spec")->envname("FOGNET_GEN");
  serve->add_option("--config", config_file, "endpoint/config file")->envname("FOGNET_CONFIG");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
    if (run->parsed())
      return cmd_run(topo_file, gen_spec, scenario_file, out_dir, seed, control_bw, data_bw,
                     control_alloc_bw);
    if (sweep->parsed()) return cmd_sweep(sweep_kind, grid, out_dir);
    if (check->parsed()) return cmd_check(topo_file, gen_spec, budget, seed, corrupt);
    if (serve->parsed()) return cmd_serve(topo_file, gen_spec, config_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
