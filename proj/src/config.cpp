#include "optikv/config.hpp"

#include <fstream>
#include <sstream>

#include "optikv/errors.hpp"

namespace optikv {

std::vector<int> StoreMetadata::server_ids() const {
  std::vector<int> ids;
  ids.reserve(servers.size());
  for (const auto& s : servers) ids.push_back(s.id);
  return ids;
}

void StoreMetadata::validate() const {
  if (servers.empty()) throw ConfigError("no servers configured");
  if (n < 1 || n > static_cast<int>(servers.size()))
    throw ConfigError("replication factor N out of range");
  if (r < 1 || r > n) throw ConfigError("read quorum R out of range");
  if (w < 1 || w > n) throw ConfigError("write quorum W out of range");
  if (timeout_ms <= 0) throw ConfigError("timeout must be positive");
}

nlohmann::json StoreMetadata::to_json() const {
  nlohmann::json servers_j = nlohmann::json::array();
  for (const auto& s : servers)
    servers_j.push_back({{"id", s.id}, {"address", s.address}});
  return {{"servers", servers_j},
          {"n", n},
          {"r", r},
          {"w", w},
          {"timeout-ms", timeout_ms}};
}

StoreMetadata StoreMetadata::from_json(const nlohmann::json& j) {
  StoreMetadata m;
  for (const auto& s : j.at("servers"))
    m.servers.push_back({s.at("id").get<int>(), s.value("address", std::string())});
  m.n = j.at("n").get<int>();
  m.r = j.at("r").get<int>();
  m.w = j.at("w").get<int>();
  m.timeout_ms = j.value("timeout-ms", Millis{500});
  m.validate();
  return m;
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dir_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

}  // namespace

ClusterConfig load_cluster_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config json in " + path + ": " + e.what());
  }
  ClusterConfig c;
  c.meta = StoreMetadata::from_json(j);
  c.epsilon = j.value("epsilon-ms", kEpsilonInfinity);
  c.monitor_epsilon = j.value("monitor-epsilon-ms", c.epsilon);
  c.heartbeat_ms = j.value("heartbeat-ms", Millis{200});
  if (j.contains("variable-owners")) {
    for (auto it = j["variable-owners"].begin(); it != j["variable-owners"].end(); ++it)
      c.variable_owners[it.key()] = it.value().get<int>();
  }
  int next_id = 0;
  if (j.contains("predicates")) {
    for (const auto& p : j["predicates"]) {
      PredicateConfig pc;
      pc.id = p.value("id", next_id);
      std::string file = p.at("file").get<std::string>();
      if (!file.empty() && file[0] != '/') file = dir_of(path) + "/" + file;
      pc.spec = parse_predicate(slurp(file));
      pc.monitor = p.at("monitor-address").get<std::string>();
      c.predicates.push_back(std::move(pc));
      ++next_id;
    }
  }
  return c;
}

std::string server_node_name(int id) { return "server-" + std::to_string(id); }
std::string monitor_node_name(int predicate_id) {
  return "monitor-" + std::to_string(predicate_id);
}

}  // namespace optikv
