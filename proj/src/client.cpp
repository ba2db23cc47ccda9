#include "optikv/client.hpp"

#include <algorithm>

#include "optikv/errors.hpp"

namespace optikv {

bool is_sequential(int n, int r, int w) { return w + r > n && 2 * w > n; }

ConsistencyConfig preset(const std::string& name) {
  static const std::map<std::string, std::tuple<int, int, int>> kTable = {
      {"N2R1W2", {2, 1, 2}}, {"N2R1W1", {2, 1, 1}}, {"N3R1W3", {3, 1, 3}},
      {"N3R1W1", {3, 1, 1}}, {"N5R1W5", {5, 1, 5}}, {"N5R1W1", {5, 1, 1}},
  };
  auto it = kTable.find(name);
  if (it == kTable.end()) throw ConfigError("unknown consistency preset: " + name);
  ConsistencyConfig c;
  std::tie(c.n, c.r, c.w) = it->second;
  c.name = name;
  return c;
}

QuorumClient::QuorumClient(NodeEnv* env, std::string client_id, StoreMetadata meta,
                           ConsistencyConfig cfg)
    : env_(env),
      client_id_(std::move(client_id)),
      meta_(std::move(meta)),
      cfg_(cfg),
      ring_(meta_.server_ids()) {
  if (cfg_.n > static_cast<int>(meta_.servers.size()))
    throw ConfigError("preset N exceeds cluster size");
}

Message QuorumClient::make_request(const Op& op) const {
  Message m;
  if (op.is_put) {
    m.type = msg::kPut;
    m.payload = {{"key", op.key},
                 {"value", base64_encode(op.value)},
                 {"version", op.version.to_json()},
                 {"client-id", client_id_},
                 {"epoch", epoch_}};
    if (!hvc_ctx_.empty()) {
      Hvc ctx(0, hvc_ctx_, kEpsilonInfinity);
      m.payload["hvc"] = hvc_to_json(ctx);
    }
  } else {
    m.type = msg::kGet;
    m.payload = {{"key", op.key}, {"client-id", client_id_}, {"epoch", epoch_}};
  }
  return m;
}

void QuorumClient::send_round(std::uint64_t rid, Op& op,
                              const std::vector<int>& targets) {
  Message m = make_request(op);
  m.request_id = rid;
  for (int sid : targets)
    env_->send(meta_.servers[static_cast<size_t>(sid)].address, m);
  op.timer = env_->set_timer(cfg_.timeout_ms, [this, rid] { on_timeout(rid); });
}

void QuorumClient::start_put(const std::string& key, const std::string& value,
                             std::function<void(PutResult)> cb) {
  std::uint64_t rid = next_rid_++;
  Op& op = ops_[rid];
  op.is_put = true;
  op.key = key;
  op.value = value;
  op.version = context_[key];
  op.version.increment(client_id_);
  op.put_cb = std::move(cb);
  auto all = ring_.ordered(key);
  op.pref.assign(all.begin(), all.begin() + cfg_.n);
  op.standby.assign(all.begin() + cfg_.n, all.end());
  send_round(rid, op, op.pref);
}

void QuorumClient::start_get(const std::string& key,
                             std::function<void(GetResult)> cb) {
  std::uint64_t rid = next_rid_++;
  Op& op = ops_[rid];
  op.is_put = false;
  op.key = key;
  op.get_cb = std::move(cb);
  auto all = ring_.ordered(key);
  op.pref.assign(all.begin(), all.begin() + cfg_.n);
  op.standby.assign(all.begin() + cfg_.n, all.end());
  send_round(rid, op, op.pref);
}

Future<PutResult> QuorumClient::put(const std::string& key, const std::string& value) {
  Future<PutResult> f;
  start_put(key, value, f.setter());
  return f;
}

Future<GetResult> QuorumClient::get(const std::string& key) {
  Future<GetResult> f;
  start_get(key, f.setter());
  return f;
}

void QuorumClient::on_message(const std::string&, const Message& m) {
  if (m.type != msg::kPutAck && m.type != msg::kGetResp) return;
  auto it = ops_.find(m.request_id);
  if (it == ops_.end()) return;  // late reply for a completed operation
  Op& op = it->second;
  int sid = m.payload.value("server-id", -1);
  if (sid < 0 || op.seen[sid]) return;
  op.seen[sid] = true;

  std::string st = m.payload.value("status", std::string(status::kError));
  std::uint64_t server_epoch = m.payload.value("epoch", 0ull);
  if (st == status::kRetryAfterRestore) {
    op.retry_after_restore = true;
    set_epoch(server_epoch);
    return;
  }
  if (st != status::kOk) return;

  if (m.payload.contains("hvc"))
    merge_entries(hvc_ctx_,
                  hvc_from_json(m.payload["hvc"], sid >= 0 ? sid : 0).entries());

  if (op.ok_count == 0) {
    op.epoch_min = op.epoch_max = server_epoch;
  } else {
    op.epoch_min = std::min(op.epoch_min, server_epoch);
    op.epoch_max = std::max(op.epoch_max, server_epoch);
  }
  ++op.ok_count;
  op.responses.emplace_back(sid, m);
  int quorum = op.is_put ? cfg_.w : cfg_.r;
  if (op.ok_count >= quorum) {
    env_->cancel_timer(op.timer);
    if (op.is_put)
      finish_put(m.request_id, op);
    else
      finish_get(m.request_id, op);
  }
}

void QuorumClient::on_timeout(std::uint64_t rid) {
  auto it = ops_.find(rid);
  if (it == ops_.end()) return;
  Op& op = it->second;
  int quorum = op.is_put ? cfg_.w : cfg_.r;
  if (op.ok_count >= quorum) {  // completed concurrently; defensive
    return;
  }
  if (op.round == 1 && !op.standby.empty()) {
    // one more round toward the remaining servers, asking only for the
    // shortfall
    op.round = 2;
    int need = quorum - op.ok_count;
    std::vector<int> targets;
    for (int sid : op.standby) {
      if (static_cast<int>(targets.size()) >= need) break;
      targets.push_back(sid);
    }
    send_round(rid, op, targets);
    return;
  }
  // failed
  if (op.is_put) {
    PutResult r;
    r.ok = false;
    r.acks = op.ok_count;
    r.rounds = op.round;
    r.retry_after_restore = op.retry_after_restore;
    r.error = "PUT-FAILED";
    auto cb = std::move(op.put_cb);
    ops_.erase(rid);
    cb(r);
  } else {
    GetResult r;
    r.ok = false;
    r.responses = op.ok_count;
    r.retry_after_restore = op.retry_after_restore;
    r.error = "GET-FAILED";
    auto cb = std::move(op.get_cb);
    ops_.erase(rid);
    cb(r);
  }
}

void QuorumClient::finish_put(std::uint64_t rid, Op& op) {
  PutResult r;
  r.ok = true;
  r.acks = op.ok_count;
  r.rounds = op.round;
  r.epoch_min = op.epoch_min;
  r.epoch_max = op.epoch_max;
  context_[op.key] = op.version;  // successful writes advance the context
  auto cb = std::move(op.put_cb);
  ops_.erase(rid);
  cb(r);
}

void QuorumClient::finish_get(std::uint64_t rid, Op& op) {
  GetResult r;
  r.ok = true;
  r.responses = op.ok_count;
  r.epoch_min = op.epoch_min;
  r.epoch_max = op.epoch_max;

  // union the sibling sets across replicas, dropping dominated versions
  VersionedValue merged;
  VersionVector ctx;
  for (const auto& [sid, m] : op.responses) {
    for (const auto& sj : m.payload.at("siblings")) {
      VersionVector v = VersionVector::from_json(sj.at("version"));
      merged.put(v, base64_decode(sj.at("value").get<std::string>()));
      ctx.merge(v);
    }
  }
  r.siblings = merged.siblings();
  r.found = !r.siblings.empty();
  if (r.found) r.value = resolve_default(r.siblings).value;
  r.context = ctx;
  context_[op.key] = ctx;  // seed the next put from the merged context
  auto cb = std::move(op.get_cb);
  ops_.erase(rid);
  cb(r);
}

}  // namespace optikv
