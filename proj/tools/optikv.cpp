// optikv: quorum key-value store with runtime predicate detection.
//
// Subcommands host the individual node roles over TCP (server, client,
// monitor, coordinator) or drive whole experiments (run) in the
// deterministic simulator or in-process over loopback TCP.

#include <atomic>
#include <csignal>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "optikv/client.hpp"
#include "optikv/config.hpp"
#include "optikv/errors.hpp"
#include "optikv/monitor.hpp"
#include "optikv/net_tcp.hpp"
#include "optikv/oracle.hpp"
#include "optikv/rollback.hpp"
#include "optikv/store.hpp"
#include "optikv/workload.hpp"

using namespace optikv;

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

Millis parse_epsilon(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "infinity") return kEpsilonInfinity;
  return std::stoll(text);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_server(const std::string& config_path, int id) {
  ClusterConfig cfg = load_cluster_config(config_path);
  const ServerInfo* me = nullptr;
  for (const auto& s : cfg.meta.servers)
    if (s.id == id) me = &s;
  if (!me) throw ConfigError("server id " + std::to_string(id) + " not in config");

  TcpHost host("server-" + std::to_string(id), me->address);
  StoreServer server(&host, id, cfg.meta, cfg.epsilon);
  if (!cfg.predicates.empty())
    server.install_detector(cfg.predicates, cfg.variable_owners, cfg.heartbeat_ms);
  host.set_handler(
      [&](const std::string& f, const Message& m) { server.on_message(f, m); });
  host.start();
  std::cout << "server " << id << " listening on " << host.bound_address() << "\n";
  wait_for_signal();
  host.stop();
  return 0;
}

int cmd_monitor(const std::string& predicate_file, const std::string& listen,
                const std::string& eps_text, const std::string& config_path,
                int predicate_id, const std::string& coordinator) {
  ClusterConfig cfg = load_cluster_config(config_path);
  PredicateConfig pc;
  pc.id = predicate_id;
  pc.spec = parse_predicate(slurp(predicate_file));
  pc.monitor = listen;

  TcpHost host("monitor-" + std::to_string(predicate_id), listen);
  Monitor monitor(&host, pc, cfg.variable_owners, parse_epsilon(eps_text), coordinator);
  std::ofstream csv("violations.csv", std::ios::trunc);
  csv << Monitor::csv_header() << "\n";
  monitor.set_on_violation([&](const Violation& v) {
    csv << Monitor::csv_row(v) << std::endl;
    std::cout << "violation predicate=" << v.predicate_id << " clause=" << v.clause_id
              << " t_violate=" << v.t_violate << "\n";
  });
  host.set_handler(
      [&](const std::string& f, const Message& m) { monitor.on_message(f, m); });
  host.start();
  std::cout << "monitor " << predicate_id << " listening on " << host.bound_address()
            << "\n";
  wait_for_signal();
  host.stop();
  return 0;
}

int cmd_coordinator(const std::string& policy_text, const std::string& threshold_text,
                    const std::string& config_path, const std::string& listen) {
  ClusterConfig cfg = load_cluster_config(config_path);
  nlohmann::json raw = nlohmann::json::parse(slurp(config_path));
  Coordinator::Peers peers;
  for (const auto& s : cfg.meta.servers) peers.servers.push_back(s.address);
  for (const auto& pc : cfg.predicates) peers.monitors.push_back(pc.monitor);
  if (raw.contains("clients"))
    for (const auto& c : raw["clients"]) peers.clients.push_back(c.get<std::string>());

  RollbackPolicy policy = RollbackPolicy::parse(policy_text);
  policy.threshold_per_min = RollbackPolicy::parse_threshold(threshold_text);

  TcpHost host("coordinator", listen);
  Coordinator coord(&host, peers, policy);
  host.set_handler(
      [&](const std::string& f, const Message& m) { coord.on_message(f, m); });
  host.start();
  coord.start();
  std::cout << "coordinator listening on " << host.bound_address() << "\n";
  std::ofstream csv("rollback.csv", std::ios::trunc);
  csv << Coordinator::csv_header() << "\n";
  size_t written = 0;
  while (!g_stop) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    while (written < coord.reports().size()) {
      csv << Coordinator::csv_row(coord.reports()[written++]) << std::endl;
    }
    if (coord.advice() == ConsistencyAdvice::UpgradeToSequential)
      std::cout << "advice: upgrade-to-sequential\n";
  }
  host.stop();
  return 0;
}

int cmd_client(const std::string& preset_name, const std::string& workload_file,
               const std::string& config_path, const std::string& client_id) {
  ClusterConfig cfg = load_cluster_config(config_path);
  ConsistencyConfig cons = preset(preset_name);
  cons.timeout_ms = cfg.meta.timeout_ms;

  TcpHost host(client_id, "");
  QuorumClient qc(&host, client_id, cfg.meta, cons);
  host.set_handler([&](const std::string& f, const Message& m) { qc.on_message(f, m); });
  host.start();

  auto put_sync = [&](const std::string& key, const std::string& value) {
    auto p = std::make_shared<std::promise<PutResult>>();
    auto f = p->get_future();
    host.post([&, key, value, p] {
      qc.start_put(key, value, [p](PutResult r) { p->set_value(r); });
    });
    return f.get();
  };
  auto get_sync = [&](const std::string& key) {
    auto p = std::make_shared<std::promise<GetResult>>();
    auto f = p->get_future();
    host.post([&, key, p] { qc.start_get(key, [p](GetResult r) { p->set_value(r); }); });
    return f.get();
  };

  nlohmann::json script = nlohmann::json::parse(slurp(workload_file));
  for (const auto& op : script.at("ops")) {
    std::string kind = op.at("op").get<std::string>();
    std::string key = op.at("key").get<std::string>();
    if (kind == "put") {
      auto r = put_sync(key, op.at("value").get<std::string>());
      std::cout << "PUT " << key << " -> " << (r.ok ? "ok" : r.error)
                << " acks=" << r.acks << "\n";
    } else if (kind == "get") {
      auto r = get_sync(key);
      std::cout << "GET " << key << " -> "
                << (r.ok ? (r.found ? r.value : "<absent>") : r.error) << "\n";
    } else {
      throw ConfigError("unknown op in workload script: " + kind);
    }
  }
  host.stop();
  return 0;
}

// ---------------------------------------------------------------------------
// run --mode tcp: an in-process loopback deployment with blocking clients

struct TcpRunStats {
  std::atomic<std::int64_t> ops_ok{0}, ops_failed{0}, puts{0}, gets{0};
  std::atomic<std::int64_t> violations{0};
};

int run_tcp(const std::string& workload, const ConsistencyConfig& cons, bool monitored,
            std::uint64_t seed, const std::string& out_dir, int duration_sec) {
  int n = cons.n;
  std::vector<std::unique_ptr<TcpHost>> server_hosts;
  for (int i = 0; i < n; ++i) {
    server_hosts.push_back(
        std::make_unique<TcpHost>("server-" + std::to_string(i), "127.0.0.1:0"));
  }
  StoreMetadata meta;
  for (int i = 0; i < n; ++i)
    meta.servers.push_back({i, server_hosts[static_cast<size_t>(i)]->bound_address()});
  meta.n = cons.n;
  meta.r = cons.r;
  meta.w = cons.w;
  meta.timeout_ms = 1000;

  // one linear predicate over per-server variables, as in the synthetic
  // conjunctive experiments
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(i);
  Ring ring(ids);
  std::vector<std::string> vars;
  std::map<std::string, int> owners;
  PredicateConfig pc;
  pc.id = 1;
  pc.spec.cls = DetectionClass::Linear;
  Clause cl;
  cl.id = 0;
  for (int i = 0; i < n; ++i) {
    for (int salt = 0;; ++salt) {
      std::string key = "p" + std::to_string(i) +
                        (salt == 0 ? "" : "_" + std::to_string(salt));
      if (ring.preference_list(key, n)[0] == i) {
        vars.push_back(key);
        owners[key] = i;
        cl.terms.push_back({key, "1"});
        break;
      }
    }
  }
  pc.spec.clauses.push_back(std::move(cl));

  std::unique_ptr<TcpHost> mon_host;
  std::unique_ptr<Monitor> monitor;
  TcpRunStats stats;
  if (monitored) {
    mon_host = std::make_unique<TcpHost>("monitor-1", "127.0.0.1:0");
    pc.monitor = mon_host->bound_address();
    monitor = std::make_unique<Monitor>(mon_host.get(), pc, owners, 100);
    monitor->set_on_violation([&](const Violation&) { ++stats.violations; });
    auto* mp = monitor.get();
    mon_host->set_handler(
        [mp](const std::string& f, const Message& m) { mp->on_message(f, m); });
    mon_host->start();
  }

  std::vector<std::unique_ptr<StoreServer>> servers;
  for (int i = 0; i < n; ++i) {
    auto srv = std::make_unique<StoreServer>(server_hosts[static_cast<size_t>(i)].get(),
                                             i, meta, kEpsilonInfinity);
    if (monitored) srv->install_detector({pc}, owners, 200);
    auto* sp = srv.get();
    server_hosts[static_cast<size_t>(i)]->set_handler(
        [sp](const std::string& f, const Message& m) { sp->on_message(f, m); });
    server_hosts[static_cast<size_t>(i)]->start();
    servers.push_back(std::move(srv));
  }

  // blocking clients on threads
  int n_clients = 2 * n;
  std::atomic<bool> stop{false};
  std::vector<std::thread> threads;
  std::vector<std::unique_ptr<TcpHost>> client_hosts;
  std::vector<std::unique_ptr<QuorumClient>> clients;
  for (int i = 0; i < n_clients; ++i) {
    auto host = std::make_unique<TcpHost>("client-" + std::to_string(i), "");
    auto qc = std::make_unique<QuorumClient>(host.get(), "client-" + std::to_string(i),
                                             meta, cons);
    auto* qp = qc.get();
    host->set_handler(
        [qp](const std::string& f, const Message& m) { qp->on_message(f, m); });
    host->start();
    client_hosts.push_back(std::move(host));
    clients.push_back(std::move(qc));
  }
  for (int i = 0; i < n_clients; ++i) {
    threads.emplace_back([&, i] {
      TcpHost& host = *client_hosts[static_cast<size_t>(i)];
      QuorumClient& qc = *clients[static_cast<size_t>(i)];
      LaneRng rng(seed, "client-" + std::to_string(i) + ":tcp");
      const std::string home = vars[static_cast<size_t>(i) % vars.size()];
      while (!stop) {
        bool is_put = rng.unit() < 0.5;
        if (is_put) {
          std::string value = rng.unit() < 0.05 ? "1" : "0";
          auto p = std::make_shared<std::promise<PutResult>>();
          auto f = p->get_future();
          host.post([&, p, value] {
            qc.start_put(home, value, [p](PutResult r) { p->set_value(r); });
          });
          auto r = f.get();
          ++stats.puts;
          r.ok ? ++stats.ops_ok : ++stats.ops_failed;
        } else {
          auto p = std::make_shared<std::promise<GetResult>>();
          auto f = p->get_future();
          std::string key = vars[rng.next() % vars.size()];
          host.post([&, p, key] {
            qc.start_get(key, [p](GetResult r) { p->set_value(r); });
          });
          auto r = f.get();
          ++stats.gets;
          r.ok ? ++stats.ops_ok : ++stats.ops_failed;
        }
      }
    });
  }

  std::this_thread::sleep_for(std::chrono::seconds(duration_sec));
  stop = true;
  for (auto& t : threads) t.join();
  for (auto& h : client_hosts) h->stop();
  if (mon_host) mon_host->stop();
  for (auto& h : server_hosts) h->stop();

  nlohmann::json report{{"workload", workload},
                        {"mode", "tcp"},
                        {"preset", cons.name},
                        {"monitored", monitored},
                        {"duration-ms", duration_sec * 1000},
                        {"ops-ok", stats.ops_ok.load()},
                        {"ops-failed", stats.ops_failed.load()},
                        {"puts", stats.puts.load()},
                        {"gets", stats.gets.load()},
                        {"violations", stats.violations.load()},
                        {"throughput-ops-per-sec",
                         static_cast<double>(stats.ops_ok.load()) / duration_sec}};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/report.json");
    f << report.dump(2) << "\n";
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quorum key-value store with runtime predicate detection"};
  app.require_subcommand(1);

  // server
  auto* server = app.add_subcommand("server", "run one storage server");
  int server_id = 0;
  std::string server_config;
  server->add_option("--id", server_id, "server id")->required();
  server->add_option("--config", server_config, "cluster config json")->required();

  // client
  auto* client = app.add_subcommand("client", "run a scripted client");
  std::string client_preset = "N3R1W1", client_workload, client_config,
              client_name = "client-cli";
  client->add_option("--preset", client_preset, "consistency preset");
  client->add_option("--workload", client_workload, "workload script json")->required();
  client->add_option("--config", client_config, "cluster config json")->required();
  client->add_option("--id", client_name, "client id");

  // monitor
  auto* monitor = app.add_subcommand("monitor", "run one predicate monitor");
  std::string mon_predicate, mon_listen, mon_eps = "inf", mon_config, mon_coord;
  int mon_pid = 1;
  monitor->add_option("--predicate", mon_predicate, "predicate xml file")->required();
  monitor->add_option("--listen", mon_listen, "host:port to listen on")->required();
  monitor->add_option("--epsilon", mon_eps, "clock bound in ms, or 'inf'");
  monitor->add_option("--config", mon_config, "cluster config json")->required();
  monitor->add_option("--predicate-id", mon_pid, "predicate id");
  monitor->add_option("--coordinator", mon_coord, "coordinator address");

  // coordinator
  auto* coord = app.add_subcommand("coordinator", "run the rollback coordinator");
  std::string coord_policy = "restart", coord_threshold = "10/min", coord_config,
              coord_listen = "127.0.0.1:0";
  coord->add_option("--policy", coord_policy, "restart | periodic:<ms>");
  coord->add_option("--threshold", coord_threshold, "violations per minute, e.g. 10/min");
  coord->add_option("--config", coord_config, "cluster config json")->required();
  coord->add_option("--listen", coord_listen, "host:port to listen on");

  // run
  auto* run = app.add_subcommand("run", "drive a workload experiment");
  std::string run_mode = "sim", run_workload = "conj", run_preset = "N3R1W1",
              run_out, run_record;
  bool run_monitored = true, run_coordinator = false;
  std::uint64_t run_seed = 1;
  int run_iterations = 30, run_width = 3, run_height = 2, run_clients = 2;
  int run_locals = 10, run_duration = 10000, run_tcp_seconds = 3;
  double run_beta = 0.01, run_put_ratio = 0.5;
  std::string run_eps = "2";
  Millis run_repl_delay = 0;
  run->add_option("--mode", run_mode, "sim | tcp");
  run->add_option("--workload", run_workload, "graph | conj");
  run->add_option("--preset", run_preset, "consistency preset");
  run->add_option("--monitored", run_monitored, "install detectors and monitors");
  run->add_option("--coordinated", run_coordinator, "run the rollback coordinator");
  run->add_option("--seed", run_seed, "rng seed");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--record", run_record, "record candidate logs here");
  run->add_option("--iterations", run_iterations, "graph iterations per client");
  run->add_option("--width", run_width, "graph grid width");
  run->add_option("--height", run_height, "graph grid height");
  run->add_option("--clients", run_clients, "graph client count");
  run->add_option("--locals", run_locals, "conjunctive local predicate count");
  run->add_option("--beta", run_beta, "conjunctive truth probability");
  run->add_option("--put-ratio", run_put_ratio, "PUT fraction of operations");
  run->add_option("--duration", run_duration, "conjunctive virtual duration (ms)");
  run->add_option("--epsilon", run_eps, "monitor clock bound in ms, or 'inf'");
  run->add_option("--replication-delay", run_repl_delay,
                  "graph adversarial replication delay (ms)");
  run->add_option("--tcp-seconds", run_tcp_seconds, "tcp mode run length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*server) return cmd_server(server_config, server_id);
    if (*client)
      return cmd_client(client_preset, client_workload, client_config, client_name);
    if (*monitor)
      return cmd_monitor(mon_predicate, mon_listen, mon_eps, mon_config, mon_pid,
                         mon_coord);
    if (*coord)
      return cmd_coordinator(coord_policy, coord_threshold, coord_config, coord_listen);
    if (*run) {
      ConsistencyConfig cons = preset(run_preset);
      if (run_mode == "tcp")
        return run_tcp(run_workload, cons, run_monitored, run_seed, run_out,
                       run_tcp_seconds);
      RunOptions opt;
      opt.consistency = cons;
      opt.monitored = run_monitored;
      opt.with_coordinator = run_coordinator;
      opt.seed = run_seed;
      opt.monitor_epsilon = parse_epsilon(run_eps);
      opt.out_dir = run_out;
      opt.record_dir = run_record;
      opt.replication_delay_ms = run_repl_delay;
      opt.client_timeout_ms = 50;
      RunResult r;
      if (run_workload == "graph") {
        GraphWorkloadConfig gw;
        gw.width = run_width;
        gw.height = run_height;
        gw.clients = run_clients;
        gw.iterations = run_iterations;
        gw.seed = run_seed;
        r = run_graph(gw, opt);
      } else if (run_workload == "conj") {
        ConjunctiveWorkloadConfig cw;
        cw.num_locals = run_locals;
        cw.beta = run_beta;
        cw.put_ratio = run_put_ratio;
        cw.duration_ms = run_duration;
        cw.seed = run_seed;
        r = run_conjunctive(cw, opt);
      } else {
        throw ConfigError("unknown workload: " + run_workload);
      }
      std::cout << r.report.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
