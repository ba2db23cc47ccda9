#include "optikv/store.hpp"

#include <algorithm>

#include "optikv/errors.hpp"

namespace optikv {

StoreServer::StoreServer(NodeEnv* env, int id, StoreMetadata meta, Millis epsilon)
    : env_(env), id_(id), meta_(std::move(meta)) {
  meta_.validate();
  int n = static_cast<int>(meta_.servers.size());
  int index = -1;
  for (int i = 0; i < n; ++i)
    if (meta_.servers[static_cast<size_t>(i)].id == id) index = i;
  if (index != id)
    throw ConfigError("server ids must be dense 0..n-1 and match positions");
  clock_ = Hvc(id, n, epsilon);
}

void StoreServer::install_detector(const std::vector<PredicateConfig>& predicates,
                                   const std::map<std::string, int>& variable_owners,
                                   Millis heartbeat_ms, Millis detector_cost_ms) {
  detector_.emplace(id_);
  heartbeat_ms_ = heartbeat_ms;
  detector_cost_ms_ = detector_cost_ms;
  for (const auto& pc : predicates) {
    monitor_of_predicate_[pc.id] = pc.monitor;
    RelevantVariables rel = relevant_variables(pc.spec, variable_owners);
    for (const auto& lc : rel.local) {
      if (lc.server_id != id_) continue;
      detector_->add_clause(pc.id, pc.spec.cls, lc, clock_);
    }
  }
  if (heartbeat_ms_ > 0)
    env_->set_timer(heartbeat_ms_, [this] { heartbeat(); });
}

Millis StoreServer::monotonic_now() const {
  return std::max(env_->now_ms(), clock_.own_entry());
}

void StoreServer::heartbeat() {
  if (!paused_) {
    clock_ = clock_.tick(monotonic_now());
    try {
      emit_candidates(detector_->flush(clock_));
    } catch (const std::exception&) {
      ++detector_faults_;
    }
  }
  env_->set_timer(heartbeat_ms_, [this] { heartbeat(); });
}

void StoreServer::emit_candidates(std::vector<Candidate> cands) {
  for (auto& c : cands) {
    auto mon = monitor_of_predicate_.find(c.predicate_id);
    if (mon == monitor_of_predicate_.end()) continue;
    Message m;
    m.type = msg::kCandidate;
    m.request_id = c.seq;
    m.payload = c.to_json();
    env_->send(mon->second, std::move(m));
  }
}

StoreServer::PutOutcome StoreServer::handle_put(
    const std::string& key, const std::string& value, const VersionVector& version,
    const std::vector<Millis>* ctx_entries, std::uint64_t req_epoch) {
  if (paused_ || req_epoch < epoch_)
    return {status::kRetryAfterRestore, "", clock_};

  // the PUT is the clock event; one stamp covers before/after the write
  Millis now = monotonic_now();
  Hvc stamped = (ctx_entries && !ctx_entries->empty())
                    ? clock_.on_receive(*ctx_entries, now)
                    : clock_.tick(now);
  clock_ = stamped;

  table_[key].put(version, value);
  const auto& sibs = table_[key].siblings();
  const std::string& resolved = resolve_default(sibs).value;

  if (apply_observer_) apply_observer_(key, resolved, now);

  if (detector_ && detector_->relevant(key)) {
    // the hook must never fail the PUT
    try {
      emit_candidates(detector_->on_put(key, resolved, stamped, stamped));
    } catch (const std::exception&) {
      ++detector_faults_;
    }
  }
  return {status::kOk, "", clock_};
}

std::vector<Sibling> StoreServer::handle_get(const std::string& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) return {};
  return it->second.siblings();
}

std::string StoreServer::snapshot_state() const {
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [k, v] : table_) table[k] = v.to_json();
  nlohmann::json j{{"server-id", id_},
                   {"clock",
                    {{"epsilon", clock_.epsilon()}, {"entries", clock_.entries()}}},
                   {"table", table}};
  return j.dump();
}

void StoreServer::restore_state(const std::string& image) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(image);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("bad snapshot image: ") + e.what());
  }
  if (j.at("server-id").get<int>() != id_)
    throw ConfigError("snapshot image belongs to server " +
                      std::to_string(j.at("server-id").get<int>()));
  std::map<std::string, VersionedValue> table;
  for (auto it = j.at("table").begin(); it != j.at("table").end(); ++it)
    table[it.key()] = VersionedValue::from_json(it.value());
  table_ = std::move(table);
  clock_ = Hvc(id_, j.at("clock").at("entries").get<std::vector<Millis>>(),
               j.at("clock").at("epsilon").get<Millis>());
  if (detector_) {
    std::map<std::string, std::string> values;
    for (const auto& [k, v] : table_)
      if (!v.empty()) values[k] = resolve_default(v.siblings()).value;
    detector_->reset(values, clock_);
  }
}

void StoreServer::reset_to_empty() {
  table_.clear();
  if (detector_) detector_->reset({}, clock_);
}

void StoreServer::resume(std::uint64_t new_epoch) {
  epoch_ = new_epoch;
  paused_ = false;
  if (detector_) detector_->set_epoch(new_epoch);
}

void StoreServer::on_message(const std::string& from, const Message& m) {
  Message reply;
  reply.request_id = m.request_id;
  try {
    if (m.type == msg::kPut) {
      const auto& p = m.payload;
      VersionVector version = VersionVector::from_json(p.at("version"));
      std::string value = base64_decode(p.at("value").get<std::string>());
      std::vector<Millis> ctx;
      if (p.contains("hvc") && p["hvc"].is_string())
        ctx = decode_hvc(base64_decode(p["hvc"].get<std::string>()), id_).entries();
      auto out = handle_put(p.at("key").get<std::string>(), value, version,
                            ctx.empty() ? nullptr : &ctx,
                            p.value("epoch", 0ull));
      reply.type = msg::kPutAck;
      reply.payload = {{"status", out.status},
                       {"server-id", id_},
                       {"epoch", epoch_},
                       {"hvc", hvc_to_json(clock_)}};
      Millis extra = (out.status == status::kOk && detector_ &&
                      detector_->relevant(p.at("key").get<std::string>()))
                         ? detector_cost_ms_
                         : 0;
      if (extra > 0) {
        auto env = env_;
        auto to = from;
        env_->set_timer(extra, [env, to, reply] { env->send(to, reply); });
        return;
      }
    } else if (m.type == msg::kGet) {
      reply.type = msg::kGetResp;
      if (paused_ || m.payload.value("epoch", 0ull) < epoch_) {
        reply.payload = {{"status", status::kRetryAfterRestore},
                         {"server-id", id_},
                         {"epoch", epoch_}};
      } else {
        VersionedValue vv;
        nlohmann::json sibs = nlohmann::json::array();
        for (const auto& s : handle_get(m.payload.at("key").get<std::string>()))
          sibs.push_back({{"version", s.version.to_json()},
                          {"value", base64_encode(s.value)}});
        reply.payload = {{"status", status::kOk},
                         {"server-id", id_},
                         {"epoch", epoch_},
                         {"hvc", hvc_to_json(clock_)},
                         {"siblings", sibs}};
      }
    } else if (m.type == msg::kMetadata) {
      reply.type = msg::kMetadataResp;
      reply.payload = meta_.to_json();
      reply.payload["epoch"] = epoch_;
    } else if (m.type == msg::kSnapshot) {
      reply.type = msg::kSnapshotResp;
      reply.payload = {{"server-id", id_},
                       {"epoch", epoch_},
                       {"image", base64_encode(snapshot_state())}};
    } else if (m.type == msg::kPause) {
      pause();
      reply.type = msg::kPauseAck;
      reply.payload = {{"server-id", id_}};
    } else if (m.type == msg::kRestore) {
      reply.type = msg::kRestoreAck;
      if (m.payload.contains("image"))
        restore_state(base64_decode(m.payload.at("image").get<std::string>()));
      else
        reset_to_empty();
      reply.payload = {{"server-id", id_}, {"status", status::kOk}};
    } else if (m.type == msg::kResume) {
      resume(m.payload.at("epoch").get<std::uint64_t>());
      reply.type = msg::kResumeAck;
      reply.payload = {{"server-id", id_}, {"epoch", epoch_}};
    } else {
      return;  // not addressed to a store server
    }
  } catch (const std::exception& e) {
    reply.type = reply.type.empty() ? std::string(msg::kPutAck) : reply.type;
    reply.payload = {{"status", status::kError},
                     {"server-id", id_},
                     {"epoch", epoch_},
                     {"error", e.what()}};
  }
  env_->send(from, std::move(reply));
}

}  // namespace optikv
