#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "optikv/client.hpp"
#include "optikv/config.hpp"
#include "optikv/monitor.hpp"
#include "optikv/oracle.hpp"
#include "optikv/rollback.hpp"
#include "optikv/sim.hpp"
#include "optikv/store.hpp"

namespace optikv {

/// Detection-latency buckets (milliseconds): <100, 100-1000, 1000-2000,
/// 2000-14000; the last bucket absorbs anything slower.
struct LatencyHistogram {
  std::array<std::int64_t, 4> counts{0, 0, 0, 0};
  void add(Millis latency_ms);
  std::int64_t total() const;
  nlohmann::json to_json() const;
};

struct MetricsReport {
  std::string workload;
  std::string preset;
  bool monitored = false;
  std::uint64_t seed = 0;
  Millis duration_ms = 0;  // virtual
  std::int64_t ops_ok = 0, ops_failed = 0, puts = 0, gets = 0;
  std::int64_t iterations_skipped = 0;
  std::vector<std::int64_t> throughput_series;  // completed ops per second
  double throughput_ops_per_sec = 0;
  std::int64_t violation_count = 0;
  LatencyHistogram latency_hist;
  // graph-workload ground truth (simulation only)
  std::int64_t true_episodes = -1;
  double recall = -1;
  Millis max_detection_latency_ms = -1;
  double overhead_pct = 0;

  nlohmann::json to_json() const;
};

struct GraphWorkloadConfig {
  int width = 3, height = 2;  // 2-D grid
  int clients = 2;            // vertices split into contiguous row bands
  int iterations = 30;        // per client, over its vertices
  Millis busy_work_ms = 1;
  int acquire_retry_limit = 25;
  std::uint64_t seed = 1;
};

struct ConjunctiveWorkloadConfig {
  int num_locals = 10;  // l
  double beta = 0.01;   // chance a PUT writes its local predicate true
  double put_ratio = 0.5;
  Millis duration_ms = 10000;
  std::uint64_t seed = 1;
};

struct RunOptions {
  ConsistencyConfig consistency;
  bool monitored = true;
  bool with_coordinator = false;
  std::string rollback_policy = "periodic:1000";
  double threshold_per_min = 10;
  Millis monitor_epsilon = 2;
  Millis server_epsilon = kEpsilonInfinity;
  Millis heartbeat_ms = 200;
  Millis detector_cost_ms = 0;
  Millis client_timeout_ms = 50;
  Millis min_net_delay = 2, max_net_delay = 8;
  std::uint64_t seed = 1;
  bool blackhole_monitors = false;  // differential runs
  // graph eventual-mode fault schedule: replication writes to non-owner
  // replicas of intent/lock keys are delayed by this much (0 = off)
  Millis replication_delay_ms = 0;
  std::string record_dir;  // write per-predicate candidate logs here
  std::string out_dir;     // write throughput.csv / violations.csv / report.json
};

/// One mutual-exclusion overlap in ground truth: two adjacent vertices held
/// by different clients at once, measured at the owner servers.
struct Episode {
  int predicate_id = 0;
  Millis start = 0, end = 0;  // half-open overlap window
};

struct RunResult {
  MetricsReport report;
  std::string results_log;  // canonical per-op record, for differential runs
  std::vector<Violation> violations;
  std::vector<RollbackReport> rollbacks;
  std::vector<Episode> episodes;  // graph runs only
  bool mixed_epoch_observed = false;
  std::int64_t rollback_scans_checked = 0;  // scans run at RESUME time
  bool rollback_scans_clean = true;         // every scan matched its image
  std::map<int, CandidateLog> recorded;  // per predicate, when recording
  std::map<int, PredicateSpec> predicate_specs;
  std::map<std::string, int> variable_owners;
};

RunResult run_graph(const GraphWorkloadConfig& gw, const RunOptions& opt);
RunResult run_conjunctive(const ConjunctiveWorkloadConfig& cw, const RunOptions& opt);

struct ThroughputComparison {
  MetricsReport a, b;
  double ratio = 0;  // a over b
};

// identical seeds/schedules; reports throughput ratio a/b
ThroughputComparison compare_throughput(const ConjunctiveWorkloadConfig& cw,
                                                    const RunOptions& opt_a,
                                                    const RunOptions& opt_b);

void write_run_outputs(const RunResult& r, const std::string& out_dir);

}  // namespace optikv
