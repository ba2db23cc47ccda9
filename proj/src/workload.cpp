#include "optikv/workload.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "optikv/errors.hpp"
#include "optikv/ring.hpp"

namespace optikv {

void LatencyHistogram::add(Millis latency_ms) {
  if (latency_ms < 100)
    ++counts[0];
  else if (latency_ms < 1000)
    ++counts[1];
  else if (latency_ms < 2000)
    ++counts[2];
  else
    ++counts[3];
}

std::int64_t LatencyHistogram::total() const {
  return counts[0] + counts[1] + counts[2] + counts[3];
}

nlohmann::json LatencyHistogram::to_json() const {
  return {{"lt_100", counts[0]},
          {"100_1000", counts[1]},
          {"1000_2000", counts[2]},
          {"2000_14000", counts[3]}};
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j{{"workload", workload},
                   {"preset", preset},
                   {"monitored", monitored},
                   {"seed", seed},
                   {"duration-ms", duration_ms},
                   {"ops-ok", ops_ok},
                   {"ops-failed", ops_failed},
                   {"puts", puts},
                   {"gets", gets},
                   {"iterations-skipped", iterations_skipped},
                   {"throughput-ops-per-sec", throughput_ops_per_sec},
                   {"throughput-series", throughput_series},
                   {"violations", violation_count},
                   {"latency-histogram", latency_hist.to_json()},
                   {"overhead-pct", overhead_pct}};
  if (true_episodes >= 0) {
    j["true-episodes"] = true_episodes;
    j["recall"] = recall;
    j["max-detection-latency-ms"] = max_detection_latency_ms;
  }
  return j;
}

namespace {

// ---------------------------------------------------------------------------
// shared deployment scaffolding

struct RunState {
  std::vector<std::string> log_lines;
  std::int64_t ops_ok = 0, ops_failed = 0, puts = 0, gets = 0, skipped = 0;
  std::map<Millis, std::int64_t> per_second;  // completed ok ops
  bool mixed_epoch = false;
  Millis hard_cap = 10L * 60 * 1000;  // virtual runaway guard
};

struct WorkloadClient {
  std::unique_ptr<SimEnv> env;
  std::unique_ptr<QuorumClient> qc;
  int index = 0;
  std::string id;
  std::string coordinator;
  bool paused = false;
  std::int64_t progress = 0;
  std::int64_t restart_from = -1;
  bool done = false;
  std::int64_t op_index = 0;
  RunState* state = nullptr;

  void handle(const std::string& from, const Message& m) {
    if (m.type == msg::kPutAck || m.type == msg::kGetResp) {
      qc->on_message(from, m);
    } else if (m.type == msg::kPause) {
      paused = true;
      env->send(coordinator, {msg::kPauseAck, m.request_id,
                              {{"node", id}, {"progress", progress}}});
    } else if (m.type == msg::kResume) {
      paused = false;
      qc->set_epoch(m.payload.at("epoch").get<std::uint64_t>());
      const auto& prog = m.payload.at("progress");
      if (prog.is_object())
        restart_from = prog.contains(id) ? prog.at(id).get<std::int64_t>() : 0;
      env->send(coordinator, {msg::kResumeAck, m.request_id, {{"node", id}}});
    }
  }

  void record(const std::string& op, const std::string& key, bool ok,
              const std::string& detail) {
    state->log_lines.push_back(id + "|" + std::to_string(op_index++) + "|" + op +
                               "|" + key + "|" + (ok ? "ok" : "fail") + "|" + detail);
  }

  void count(bool ok, bool is_put, Millis now) {
    if (ok) {
      ++state->ops_ok;
      ++state->per_second[now / 1000];
    } else {
      ++state->ops_failed;
    }
    if (is_put)
      ++state->puts;
    else
      ++state->gets;
  }

  std::string describe(const GetResult& g) {
    std::string d = g.found ? "hit:" + g.value : "miss";
    d += "|resp=" + std::to_string(g.responses);
    for (const auto& s : g.siblings) d += "|" + s.version.to_json().dump();
    return d;
  }
};

Task put_retry(WorkloadClient& wc, std::string key, std::string value,
               Future<PutResult> out) {
  PutResult r = co_await wc.qc->put(key, value);
  if (!r.ok && !wc.paused) r = co_await wc.qc->put(key, value);
  if (r.ok && r.epoch_min != r.epoch_max) wc.state->mixed_epoch = true;
  wc.record("PUT", key, r.ok, value + "|acks=" + std::to_string(r.acks));
  wc.count(r.ok, true, wc.env->now_ms());
  out.set(r);
}

Task get_retry(WorkloadClient& wc, std::string key, Future<GetResult> out) {
  GetResult r = co_await wc.qc->get(key);
  if (!r.ok && !wc.paused) r = co_await wc.qc->get(key);
  if (r.ok && r.epoch_min != r.epoch_max) wc.state->mixed_epoch = true;
  wc.record("GET", key, r.ok, wc.describe(r));
  wc.count(r.ok, false, wc.env->now_ms());
  out.set(r);
}

Future<PutResult> do_put(WorkloadClient& wc, const std::string& key,
                         const std::string& value) {
  Future<PutResult> f;
  put_retry(wc, key, value, f);
  return f;
}

Future<GetResult> do_get(WorkloadClient& wc, const std::string& key) {
  Future<GetResult> f;
  get_retry(wc, key, f);
  return f;
}

struct Deployment {
  Simulation sim;
  std::unique_ptr<SimNet> net;
  StoreMetadata meta;
  std::vector<std::unique_ptr<SimEnv>> server_envs;
  std::vector<std::unique_ptr<StoreServer>> servers;
  std::vector<std::unique_ptr<SimEnv>> monitor_envs;
  std::vector<std::unique_ptr<Monitor>> monitors;
  std::unique_ptr<SimEnv> coord_env;
  std::unique_ptr<Coordinator> coordinator;
  std::vector<std::unique_ptr<WorkloadClient>> clients;
  RunState state;
  std::vector<Violation> violations;
  std::map<int, CandidateLog> recorded;
  std::int64_t rollback_scans_checked = 0;
  bool rollback_scans_clean = true;
};

std::unique_ptr<Deployment> make_deployment(int n_servers, int n_clients,
                                            const RunOptions& opt,
                                            const std::vector<PredicateConfig>& preds,
                                            const std::map<std::string, int>& owners) {
  auto d = std::make_unique<Deployment>();
  d->net = std::make_unique<SimNet>(&d->sim, opt.seed, opt.min_net_delay,
                                    opt.max_net_delay);
  for (int i = 0; i < n_servers; ++i)
    d->meta.servers.push_back({i, server_node_name(i)});
  d->meta.n = opt.consistency.n;
  d->meta.r = opt.consistency.r;
  d->meta.w = opt.consistency.w;
  d->meta.timeout_ms = opt.client_timeout_ms;

  for (const auto& s : d->meta.servers) {
    auto env = std::make_unique<SimEnv>(&d->sim, d->net.get(), s.address);
    auto srv =
        std::make_unique<StoreServer>(env.get(), s.id, d->meta, opt.server_epsilon);
    if (opt.monitored && !preds.empty())
      srv->install_detector(preds, owners, opt.heartbeat_ms, opt.detector_cost_ms);
    auto* sp = srv.get();
    env->set_handler(
        [sp](const std::string& f, const Message& m) { sp->on_message(f, m); });
    d->server_envs.push_back(std::move(env));
    d->servers.push_back(std::move(srv));
  }

  Coordinator::Peers peers;
  for (const auto& s : d->meta.servers) peers.servers.push_back(s.address);

  if (opt.monitored) {
    for (const auto& pc : preds) {
      auto env = std::make_unique<SimEnv>(&d->sim, d->net.get(), pc.monitor);
      auto mon = std::make_unique<Monitor>(
          env.get(), pc, owners, opt.monitor_epsilon,
          opt.with_coordinator ? "coordinator" : std::string());
      auto* dp = d.get();
      mon->set_on_violation([dp](const Violation& v) { dp->violations.push_back(v); });
      if (!opt.record_dir.empty()) {
        int pid = pc.id;
        Millis eps = opt.monitor_epsilon;
        mon->set_on_candidate([dp, pid, eps](const Candidate& c) {
          dp->recorded[pid].epsilon = eps;
          dp->recorded[pid].add(c);
        });
      }
      auto* mp = mon.get();
      env->set_handler(
          [mp](const std::string& f, const Message& m) { mp->on_message(f, m); });
      peers.monitors.push_back(pc.monitor);
      d->monitor_envs.push_back(std::move(env));
      d->monitors.push_back(std::move(mon));
      if (opt.blackhole_monitors) d->net->blackhole(pc.monitor);
    }
  }

  for (int i = 0; i < n_clients; ++i) {
    auto wc = std::make_unique<WorkloadClient>();
    wc->index = i;
    wc->id = "client-" + std::to_string(i);
    wc->coordinator = "coordinator";
    wc->state = &d->state;
    wc->env = std::make_unique<SimEnv>(&d->sim, d->net.get(), wc->id);
    wc->qc = std::make_unique<QuorumClient>(wc->env.get(), wc->id, d->meta,
                                            opt.consistency);
    auto* wp = wc.get();
    wc->env->set_handler(
        [wp](const std::string& f, const Message& m) { wp->handle(f, m); });
    peers.clients.push_back(wc->id);
    d->clients.push_back(std::move(wc));
  }

  if (opt.with_coordinator) {
    d->coord_env = std::make_unique<SimEnv>(&d->sim, d->net.get(), "coordinator");
    RollbackPolicy pol = RollbackPolicy::parse(opt.rollback_policy);
    pol.threshold_per_min = opt.threshold_per_min;
    d->coordinator = std::make_unique<Coordinator>(d->coord_env.get(), peers, pol);
    auto* cp = d->coordinator.get();
    d->coord_env->set_handler(
        [cp](const std::string& f, const Message& m) { cp->on_message(f, m); });
    d->coordinator->start();
  }
  return d;
}

void finalize_report(Deployment& d, MetricsReport& rep, Millis duration) {
  rep.duration_ms = duration;
  rep.ops_ok = d.state.ops_ok;
  rep.ops_failed = d.state.ops_failed;
  rep.puts = d.state.puts;
  rep.gets = d.state.gets;
  rep.iterations_skipped = d.state.skipped;
  Millis seconds = std::max<Millis>(1, (duration + 999) / 1000);
  rep.throughput_series.assign(static_cast<size_t>(seconds), 0);
  for (const auto& [sec, n] : d.state.per_second)
    if (sec < seconds) rep.throughput_series[static_cast<size_t>(sec)] = n;
  rep.throughput_ops_per_sec =
      static_cast<double>(d.state.ops_ok) * 1000.0 / static_cast<double>(duration);
  rep.violation_count = static_cast<std::int64_t>(d.violations.size());
  for (const auto& v : d.violations) rep.latency_hist.add(v.latency_ms);
}

void install_rollback_scan_check(Deployment& d) {
  if (!d.coordinator) return;
  auto* dp = &d;
  d.coordinator->set_on_rollback_complete([dp](const Checkpoint* target) {
    ++dp->rollback_scans_checked;
    for (size_t sid = 0; sid < dp->servers.size(); ++sid) {
      const std::string scan = dp->servers[sid]->snapshot_state();
      if (target != nullptr) {
        if (scan != target->images.at(static_cast<int>(sid)))
          dp->rollback_scans_clean = false;
      } else {
        auto j = nlohmann::json::parse(scan);
        if (!j.at("table").empty()) dp->rollback_scans_clean = false;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// graph mutual-exclusion workload

struct GraphPlan {
  int width = 0, height = 0, clients = 0;
  std::vector<int> owner_client;                    // vertex -> client
  std::vector<std::pair<int, int>> edges;           // (a, b)
  std::vector<PredicateConfig> predicates;          // one per cross-client edge
  std::map<std::string, int> variable_owners;       // lock key -> server
  std::map<int, std::pair<int, int>> edge_of_pred;  // predicate -> edge
};

std::string intent_key(int v) { return "intent:v" + std::to_string(v); }
std::string lock_key(int v) { return "lock:v" + std::to_string(v); }
std::string state_key(int v) { return "state:v" + std::to_string(v); }

GraphPlan plan_graph(const GraphWorkloadConfig& gw, int n_servers, int n_repl) {
  GraphPlan plan;
  plan.width = gw.width;
  plan.height = gw.height;
  plan.clients = gw.clients;
  int total = gw.width * gw.height;
  if (gw.clients < 1 || gw.clients > total)
    throw ConfigError("graph client count out of range");
  plan.owner_client.resize(static_cast<size_t>(total));
  for (int v = 0; v < total; ++v)
    plan.owner_client[static_cast<size_t>(v)] =
        static_cast<int>(static_cast<long>(v) * gw.clients / total);

  for (int y = 0; y < gw.height; ++y) {
    for (int x = 0; x < gw.width; ++x) {
      int v = y * gw.width + x;
      if (x + 1 < gw.width) plan.edges.emplace_back(v, v + 1);
      if (y + 1 < gw.height) plan.edges.emplace_back(v, v + gw.width);
    }
  }

  std::vector<int> ids;
  for (int i = 0; i < n_servers; ++i) ids.push_back(i);
  Ring ring(ids);
  int next_pid = 1;
  for (const auto& [a, b] : plan.edges) {
    int ca = plan.owner_client[static_cast<size_t>(a)];
    int cb = plan.owner_client[static_cast<size_t>(b)];
    if (ca == cb) continue;  // same client: no monitoring needed
    PredicateConfig pc;
    pc.id = next_pid++;
    pc.spec.cls = DetectionClass::Semilinear;
    Clause cl;
    cl.id = 0;
    cl.terms.push_back({lock_key(a), "client-" + std::to_string(ca)});
    cl.terms.push_back({lock_key(b), "client-" + std::to_string(cb)});
    pc.spec.clauses.push_back(std::move(cl));
    pc.monitor = monitor_node_name(pc.id);
    plan.edge_of_pred[pc.id] = {a, b};
    plan.predicates.push_back(std::move(pc));
  }
  for (int v = 0; v < total; ++v) {
    plan.variable_owners[lock_key(v)] = ring.preference_list(lock_key(v), n_repl)[0];
  }
  return plan;
}

// ground truth: value timelines of lock variables at their owner servers
struct LockTracker {
  std::map<std::string, std::vector<std::pair<Millis, std::string>>> events;
  void observe(const std::string& key, const std::string& value, Millis now) {
    events[key].emplace_back(now, value);
  }
  // maximal half-open windows during which key held exactly `value`
  std::vector<std::pair<Millis, Millis>> windows(const std::string& key,
                                                 const std::string& value,
                                                 Millis end_time) const {
    std::vector<std::pair<Millis, Millis>> out;
    auto it = events.find(key);
    if (it == events.end()) return out;
    bool holding = false;
    Millis since = 0;
    for (const auto& [t, v] : it->second) {
      if (!holding && v == value) {
        holding = true;
        since = t;
      } else if (holding && v != value) {
        out.emplace_back(since, t);
        holding = false;
      }
    }
    if (holding) out.emplace_back(since, end_time);
    return out;
  }
};

struct GraphCtx {
  const GraphWorkloadConfig* cfg = nullptr;
  const GraphPlan* plan = nullptr;
};

Task graph_client_loop(GraphCtx ctx, WorkloadClient* wcp) {
  WorkloadClient& wc = *wcp;
  const GraphWorkloadConfig& cfg = *ctx.cfg;
  const GraphPlan& plan = *ctx.plan;
  LaneRng rng(cfg.seed, wc.id + ":workload");

  std::vector<int> mine;
  int total = plan.width * plan.height;
  for (int v = 0; v < total; ++v)
    if (plan.owner_client[static_cast<size_t>(v)] == wc.index) mine.push_back(v);

  auto neighbors = [&](int v) {
    std::vector<int> out;
    int x = v % plan.width, y = v / plan.width;
    if (x > 0) out.push_back(v - 1);
    if (x + 1 < plan.width) out.push_back(v + 1);
    if (y > 0) out.push_back(v - plan.width);
    if (y + 1 < plan.height) out.push_back(v + plan.width);
    return out;
  };

  std::int64_t iter = 0;
  for (;;) {
    if (wc.restart_from >= 0) {
      iter = wc.restart_from;
      wc.restart_from = -1;
    }
    if (wc.paused) {
      co_await sleep_on(*wc.env, 5);
      continue;
    }
    if (iter >= cfg.iterations) break;
    wc.progress = iter;

    for (int v : mine) {
      if (wc.paused || wc.restart_from >= 0) break;

      // acquisition: declare intent, check the neighbours' intents, back off
      // on conflict; the monitored lock is touched only inside the critical
      // section
      bool entered = false;
      for (int attempt = 0; attempt < cfg.acquire_retry_limit; ++attempt) {
        if (wc.paused || wc.restart_from >= 0) break;
        PutResult ip = co_await do_put(wc, intent_key(v), wc.id);
        if (!ip.ok) break;
        bool conflict = false;
        bool failed = false;
        for (int u : neighbors(v)) {
          GetResult g = co_await do_get(wc, intent_key(u));
          if (!g.ok) {
            failed = true;
            break;
          }
          if (g.found && g.value != "FREE" && g.value != wc.id) conflict = true;
        }
        if (failed) {
          co_await do_put(wc, intent_key(v), "FREE");
          break;
        }
        if (conflict) {
          co_await do_put(wc, intent_key(v), "FREE");
          co_await sleep_on(*wc.env, 1 + rng.uniform(0, 7));
          continue;
        }
        entered = true;
        break;
      }
      if (!entered) {
        ++wc.state->skipped;
        continue;
      }

      // critical section: the monitored variable says we are working on v
      PutResult lp = co_await do_put(wc, lock_key(v), wc.id);
      if (lp.ok) {
        for (int u : neighbors(v)) co_await do_get(wc, state_key(u));
        if (cfg.busy_work_ms > 0) co_await sleep_on(*wc.env, cfg.busy_work_ms);
        co_await do_put(wc, state_key(v), std::to_string(iter));
      } else {
        ++wc.state->skipped;
      }
      co_await do_put(wc, lock_key(v), "FREE");
      co_await do_put(wc, intent_key(v), "FREE");
    }
    if (wc.paused || wc.restart_from >= 0) continue;
    ++iter;
    wc.progress = iter;
  }
  wc.done = true;
}

std::string joined_log(const RunState& st) {
  std::string s;
  for (const auto& l : st.log_lines) {
    s += l;
    s += '\n';
  }
  return s;
}

}  // namespace

RunResult run_graph(const GraphWorkloadConfig& gw, const RunOptions& opt) {
  int n_servers = opt.consistency.n;
  GraphPlan plan = plan_graph(gw, n_servers, opt.consistency.n);
  auto d = make_deployment(n_servers, gw.clients, opt, plan.predicates,
                           plan.variable_owners);
  install_rollback_scan_check(*d);

  // ground truth at the lock owners
  LockTracker tracker;
  for (size_t sid = 0; sid < d->servers.size(); ++sid) {
    int server_id = static_cast<int>(sid);
    d->servers[sid]->set_apply_observer(
        [&tracker, &plan, server_id](const std::string& key, const std::string& value,
                                     Millis now) {
          auto it = plan.variable_owners.find(key);
          if (it != plan.variable_owners.end() && it->second == server_id)
            tracker.observe(key, value, now);
        });
  }

  // adversarial replication schedule: guard/lock writes reach only the owner
  // replica promptly, and guard reads are steered to the laggards
  if (opt.replication_delay_ms > 0) {
    std::vector<int> ids;
    for (int i = 0; i < n_servers; ++i) ids.push_back(i);
    Ring ring(ids);
    std::map<std::string, int> key_owner = plan.variable_owners;
    int total = gw.width * gw.height;
    for (int v = 0; v < total; ++v)
      key_owner[intent_key(v)] =
          ring.preference_list(intent_key(v), opt.consistency.n)[0];
    Millis delay = opt.replication_delay_ms;
    d->net->set_delay_rule(
        [key_owner, delay](const std::string&, const std::string& to,
                           const Message& m) -> std::optional<Millis> {
          if (m.type != msg::kPut && m.type != msg::kGet) return std::nullopt;
          if (!m.payload.contains("key")) return std::nullopt;
          auto it = key_owner.find(m.payload["key"].get<std::string>());
          if (it == key_owner.end()) return std::nullopt;
          std::string owner_addr = server_node_name(it->second);
          if (m.type == msg::kPut && to != owner_addr) return delay;
          if (m.type == msg::kGet && to == owner_addr) return delay;
          return std::nullopt;
        });
  }

  GraphCtx ctx{&gw, &plan};
  for (auto& wc : d->clients) graph_client_loop(ctx, wc.get());

  auto all_done = [&] {
    for (const auto& wc : d->clients)
      if (!wc->done) return false;
    return true;
  };
  while (!all_done() && d->sim.step()) {
    if (d->sim.now() > d->state.hard_cap) break;
  }
  Millis run_end = std::max<Millis>(1, d->sim.now());
  // drain candidate flushes and in-flight reports
  d->sim.run_until(run_end + 2 * opt.heartbeat_ms + 4 * opt.max_net_delay + 50);

  RunResult out;
  out.report.workload = "graph";
  out.report.preset = opt.consistency.name;
  out.report.monitored = opt.monitored;
  out.report.seed = opt.seed;
  out.violations = d->violations;
  if (d->coordinator) out.rollbacks = d->coordinator->reports();
  out.mixed_epoch_observed = d->state.mixed_epoch;
  out.rollback_scans_checked = d->rollback_scans_checked;
  out.rollback_scans_clean = d->rollback_scans_clean;
  out.recorded = std::move(d->recorded);
  for (const auto& pc : plan.predicates) out.predicate_specs[pc.id] = pc.spec;
  out.variable_owners = plan.variable_owners;

  // ground-truth episodes per cross-client edge
  for (const auto& pc : plan.predicates) {
    auto [a, b] = plan.edge_of_pred.at(pc.id);
    std::string ca =
        "client-" + std::to_string(plan.owner_client[static_cast<size_t>(a)]);
    std::string cb =
        "client-" + std::to_string(plan.owner_client[static_cast<size_t>(b)]);
    auto wa = tracker.windows(lock_key(a), ca, run_end);
    auto wb = tracker.windows(lock_key(b), cb, run_end);
    for (const auto& [s1, e1] : wa) {
      for (const auto& [s2, e2] : wb) {
        Millis s = std::max(s1, s2), e = std::min(e1, e2);
        if (s < e) out.episodes.push_back({pc.id, s, e});
      }
    }
  }
  out.report.true_episodes = static_cast<std::int64_t>(out.episodes.size());

  // recall and detection latency against the ground truth
  Millis slack = epsilon_finite(opt.monitor_epsilon) ? opt.monitor_epsilon + 1 : 1;
  std::int64_t matched = 0;
  Millis worst_latency = -1;
  for (const auto& ep : out.episodes) {
    Millis best = -1;
    for (const auto& v : out.violations) {
      if (v.predicate_id != ep.predicate_id) continue;
      bool all_touch = true;
      for (const auto& c : v.cut) {
        Millis cs = c.start.own_entry(), ce = c.end.own_entry();
        if (ce < ep.start - slack || cs > ep.end + slack) all_touch = false;
      }
      if (!all_touch) continue;
      Millis lat = v.detected_at - ep.start;
      if (best < 0 || lat < best) best = lat;
    }
    if (best >= 0) {
      ++matched;
      worst_latency = std::max(worst_latency, best);
    }
  }
  out.report.recall = out.episodes.empty()
                          ? 1.0
                          : static_cast<double>(matched) /
                                static_cast<double>(out.episodes.size());
  out.report.max_detection_latency_ms = worst_latency;

  finalize_report(*d, out.report, run_end);
  out.results_log = joined_log(d->state);
  if (!opt.out_dir.empty()) write_run_outputs(out, opt.out_dir);
  if (!opt.record_dir.empty()) {
    std::filesystem::create_directories(opt.record_dir);
    for (const auto& [pid, log] : out.recorded)
      log.save(opt.record_dir + "/predicate-" + std::to_string(pid) + ".log");
  }
  return out;
}

// ---------------------------------------------------------------------------
// synthetic conjunctive workload

namespace {

// pick a key name whose first preference server is the wanted one, so the
// predicate variables land round-robin across servers
std::string key_owned_by(const Ring& ring, int n_repl, int want,
                         const std::string& base) {
  for (int salt = 0;; ++salt) {
    std::string key = base + (salt == 0 ? "" : "_" + std::to_string(salt));
    if (ring.preference_list(key, n_repl)[0] == want) return key;
  }
}

struct ConjCtx {
  const ConjunctiveWorkloadConfig* cfg = nullptr;
  const std::vector<std::string>* vars = nullptr;
  Millis end = 0;
};

Task conj_client_loop(ConjCtx ctx, WorkloadClient* wcp) {
  WorkloadClient& wc = *wcp;
  const auto& cfg = *ctx.cfg;
  LaneRng rng(cfg.seed, wc.id + ":workload");
  const auto& vars = *ctx.vars;
  const std::string home = vars[static_cast<size_t>(wc.index) % vars.size()];

  for (;;) {
    if (wc.restart_from >= 0) wc.restart_from = -1;  // synthetic: keep looping
    if (wc.paused) {
      co_await sleep_on(*wc.env, 5);
      continue;
    }
    if (wc.env->now_ms() >= ctx.end) break;
    if (rng.unit() < cfg.put_ratio) {
      std::string value = rng.unit() < cfg.beta ? "1" : "0";
      co_await do_put(wc, home, value);
    } else {
      co_await do_get(wc, vars[rng.next() % vars.size()]);
    }
    wc.progress = wc.op_index;
  }
  wc.done = true;
}

}  // namespace

RunResult run_conjunctive(const ConjunctiveWorkloadConfig& cw, const RunOptions& opt) {
  int n_servers = opt.consistency.n;
  std::vector<int> ids;
  for (int i = 0; i < n_servers; ++i) ids.push_back(i);
  Ring ring(ids);

  std::vector<std::string> vars;
  std::map<std::string, int> owners;
  PredicateConfig pc;
  pc.id = 1;
  pc.spec.cls = DetectionClass::Linear;
  Clause cl;
  cl.id = 0;
  for (int i = 0; i < cw.num_locals; ++i) {
    int server = i % n_servers;
    std::string key =
        key_owned_by(ring, opt.consistency.n, server, "p" + std::to_string(i));
    vars.push_back(key);
    owners[key] = server;
    cl.terms.push_back({key, "1"});
  }
  pc.spec.clauses.push_back(std::move(cl));
  pc.monitor = monitor_node_name(pc.id);

  int n_clients = 2 * n_servers;
  auto d = make_deployment(n_servers, n_clients, opt, {pc}, owners);
  install_rollback_scan_check(*d);

  ConjCtx ctx{&cw, &vars, cw.duration_ms};
  for (auto& wc : d->clients) conj_client_loop(ctx, wc.get());

  d->sim.run_until(cw.duration_ms);
  // let clients notice the deadline and the pipeline drain
  d->sim.run_until(cw.duration_ms + 2 * opt.heartbeat_ms + 4 * opt.max_net_delay +
                   4 * opt.client_timeout_ms);

  RunResult out;
  out.report.workload = "conjunctive";
  out.report.preset = opt.consistency.name;
  out.report.monitored = opt.monitored;
  out.report.seed = opt.seed;
  out.violations = d->violations;
  if (d->coordinator) out.rollbacks = d->coordinator->reports();
  out.mixed_epoch_observed = d->state.mixed_epoch;
  out.rollback_scans_checked = d->rollback_scans_checked;
  out.rollback_scans_clean = d->rollback_scans_clean;
  out.recorded = std::move(d->recorded);
  out.predicate_specs[pc.id] = pc.spec;
  out.variable_owners = owners;
  finalize_report(*d, out.report, cw.duration_ms);
  out.results_log = joined_log(d->state);
  if (!opt.out_dir.empty()) write_run_outputs(out, opt.out_dir);
  if (!opt.record_dir.empty()) {
    std::filesystem::create_directories(opt.record_dir);
    for (const auto& [pid, log] : out.recorded)
      log.save(opt.record_dir + "/predicate-" + std::to_string(pid) + ".log");
  }
  return out;
}

ThroughputComparison compare_throughput(const ConjunctiveWorkloadConfig& cw,
                                                    const RunOptions& opt_a,
                                                    const RunOptions& opt_b) {
  ThroughputComparison cmp;
  cmp.a = run_conjunctive(cw, opt_a).report;
  cmp.b = run_conjunctive(cw, opt_b).report;
  cmp.ratio = cmp.b.throughput_ops_per_sec > 0
                  ? cmp.a.throughput_ops_per_sec / cmp.b.throughput_ops_per_sec
                  : 0;
  return cmp;
}

void write_run_outputs(const RunResult& r, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream f(out_dir + "/report.json");
    f << r.report.to_json().dump(2) << "\n";
  }
  {
    std::ofstream f(out_dir + "/throughput.csv");
    f << "second,ops\n";
    for (size_t i = 0; i < r.report.throughput_series.size(); ++i)
      f << i << "," << r.report.throughput_series[i] << "\n";
  }
  {
    std::ofstream f(out_dir + "/violations.csv");
    f << Monitor::csv_header() << "\n";
    for (const auto& v : r.violations) f << Monitor::csv_row(v) << "\n";
  }
  if (!r.rollbacks.empty()) {
    std::ofstream f(out_dir + "/rollback.csv");
    f << Coordinator::csv_header() << "\n";
    for (const auto& rb : r.rollbacks) f << Coordinator::csv_row(rb) << "\n";
  }
}

}  // namespace optikv
