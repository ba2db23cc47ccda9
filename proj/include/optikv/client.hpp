#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "optikv/config.hpp"
#include "optikv/env.hpp"
#include "optikv/ring.hpp"
#include "optikv/sim.hpp"
#include "optikv/version.hpp"

namespace optikv {

struct ConsistencyConfig {
  int n = 1, r = 1, w = 1;
  Millis timeout_ms = 500;
  std::string name;
};

// W+R>N and W>N/2 gives sequential consistency; otherwise the store is
// eventually consistent.
bool is_sequential(int n, int r, int w);

// Built-in presets: N2R1W2, N2R1W1, N3R1W3, N3R1W1, N5R1W5, N5R1W1.
ConsistencyConfig preset(const std::string& name);

struct PutResult {
  bool ok = false;
  int acks = 0;
  int rounds = 1;
  bool retry_after_restore = false;
  std::uint64_t epoch_min = 0, epoch_max = 0;  // epochs across the ok acks
  std::string error;
};

struct GetResult {
  bool ok = false;
  bool found = false;
  std::string value;  // resolver output
  std::vector<Sibling> siblings;
  VersionVector context;
  int responses = 0;
  bool retry_after_restore = false;
  std::uint64_t epoch_min = 0, epoch_max = 0;
  std::string error;
};

/// Client-side replication: fans each operation out to the key's N
/// preference servers, succeeds on W (R) acknowledgements within the
/// timeout, and runs one more round against the remaining ring servers for
/// the shortfall. Maintains per-key version contexts and carries merged
/// server clocks so causality survives client-mediated chains.
class QuorumClient {
 public:
  QuorumClient(NodeEnv* env, std::string client_id, StoreMetadata meta,
               ConsistencyConfig cfg);

  void start_put(const std::string& key, const std::string& value,
                 std::function<void(PutResult)> cb);
  void start_get(const std::string& key, std::function<void(GetResult)> cb);

  // awaitable wrappers for simulation coroutines
  Future<PutResult> put(const std::string& key, const std::string& value);
  Future<GetResult> get(const std::string& key);

  // routes PUT-ACK / GET-RESP by request id; ignores the rest
  void on_message(const std::string& from, const Message& m);

  std::uint64_t epoch() const { return epoch_; }
  void set_epoch(std::uint64_t e) { epoch_ = std::max(epoch_, e); }

  const std::string& client_id() const { return client_id_; }
  const ConsistencyConfig& config() const { return cfg_; }
  // seed the next put's version for a key (normally fed by get())
  void set_context(const std::string& key, const VersionVector& v) {
    context_[key] = v;
  }

 private:
  struct Op {
    bool is_put = false;
    std::string key, value;
    VersionVector version;
    int round = 1;
    std::vector<int> pref, standby;
    std::vector<std::pair<int, Message>> responses;  // ok responses by server
    std::map<int, bool> seen;
    std::uint64_t epoch_min = 0, epoch_max = 0;
    int ok_count = 0;
    bool retry_after_restore = false;
    std::uint64_t timer = 0;
    std::function<void(PutResult)> put_cb;
    std::function<void(GetResult)> get_cb;
  };

  void send_round(std::uint64_t rid, Op& op, const std::vector<int>& targets);
  void on_timeout(std::uint64_t rid);
  void finish_put(std::uint64_t rid, Op& op);
  void finish_get(std::uint64_t rid, Op& op);
  Message make_request(const Op& op) const;

  NodeEnv* env_;
  std::string client_id_;
  StoreMetadata meta_;
  ConsistencyConfig cfg_;
  Ring ring_;
  std::uint64_t epoch_ = 0;
  std::uint64_t next_rid_ = 1;
  std::vector<Millis> hvc_ctx_;  // merged server clocks
  std::map<std::string, VersionVector> context_;
  std::map<std::uint64_t, Op> ops_;
};

}  // namespace optikv
