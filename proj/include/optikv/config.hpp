#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "optikv/predicate.hpp"
#include "optikv/time.hpp"

namespace optikv {

struct ServerInfo {
  int id = 0;
  std::string address;  // host:port in tcp mode, node name in sim mode
};

struct StoreMetadata {
  std::vector<ServerInfo> servers;
  int n = 1, r = 1, w = 1;
  Millis timeout_ms = 500;

  std::vector<int> server_ids() const;
  void validate() const;  // 1 <= R <= N, 1 <= W <= N, N <= #servers

  nlohmann::json to_json() const;
  static StoreMetadata from_json(const nlohmann::json& j);
};

struct PredicateConfig {
  int id = 0;
  PredicateSpec spec;
  std::string monitor;  // monitor node/address for this predicate
};

/// Full deployment description: cluster metadata, monitored predicates, and
/// the static variable->server ownership the detectors and monitors share.
struct ClusterConfig {
  StoreMetadata meta;
  std::vector<PredicateConfig> predicates;
  std::map<std::string, int> variable_owners;
  Millis epsilon = kEpsilonInfinity;  // server clock bound
  Millis monitor_epsilon = kEpsilonInfinity;
  Millis heartbeat_ms = 200;
  Millis detector_cost_ms = 0;  // simulated per-relevant-PUT detector work
};

// JSON form used by the CLI: {servers:[{id,address}], n, r, w, timeout-ms,
// predicates:[{file, monitor-address}], variable-owners:{var: server-id},
// epsilon-ms, heartbeat-ms}. Predicate files are loaded relative to the
// config file's directory.
ClusterConfig load_cluster_config(const std::string& path);

std::string server_node_name(int id);
std::string monitor_node_name(int predicate_id);

}  // namespace optikv
