#include "optikv/version.hpp"

#include <algorithm>

#include "optikv/errors.hpp"
#include "optikv/wire.hpp"

namespace optikv {

std::int64_t VersionVector::get(const std::string& writer) const {
  auto it = counts_.find(writer);
  return it == counts_.end() ? 0 : it->second;
}

void VersionVector::increment(const std::string& writer) { ++counts_[writer]; }

void VersionVector::merge(const VersionVector& other) {
  for (const auto& [w, c] : other.counts_) {
    auto& mine = counts_[w];
    mine = std::max(mine, c);
  }
}

bool VersionVector::tie_break_less(const VersionVector& other) const {
  // maps iterate ascending; compare as descending sequences
  std::vector<std::pair<std::string, std::int64_t>> a(counts_.rbegin(), counts_.rend());
  std::vector<std::pair<std::string, std::int64_t>> b(other.counts_.rbegin(),
                                                      other.counts_.rend());
  return a < b;
}

nlohmann::json VersionVector::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [w, c] : counts_) j[w] = c;
  return j;
}

VersionVector VersionVector::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ProtocolError("version must be an object");
  VersionVector v;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer()) throw ProtocolError("version counter must be integer");
    v.counts_[it.key()] = it.value().get<std::int64_t>();
  }
  return v;
}

CausalOrder compare(const VersionVector& a, const VersionVector& b) {
  bool al = false, bl = false;
  for (const auto& [w, c] : a.counts())
    if (c > b.get(w)) bl = true;  // b smaller at w
  for (const auto& [w, c] : b.counts())
    if (c > a.get(w)) al = true;  // a smaller at w
  if (!al && !bl) return CausalOrder::Equal;
  if (al && !bl) return CausalOrder::Before;
  if (bl && !al) return CausalOrder::After;
  return CausalOrder::Concurrent;
}

bool VersionedValue::put(const VersionVector& version, std::string value) {
  for (const auto& s : siblings_) {
    auto o = compare(s.version, version);
    if (o == CausalOrder::After) return false;  // incoming is obsolete
  }
  std::vector<Sibling> kept;
  kept.reserve(siblings_.size() + 1);
  for (auto& s : siblings_) {
    auto o = compare(s.version, version);
    if (o == CausalOrder::Before || o == CausalOrder::Equal) continue;
    kept.push_back(std::move(s));
  }
  kept.push_back(Sibling{version, std::move(value)});
  std::sort(kept.begin(), kept.end(), [](const Sibling& a, const Sibling& b) {
    return a.version.tie_break_less(b.version);
  });
  siblings_ = std::move(kept);
  return true;
}

nlohmann::json VersionedValue::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : siblings_) {
    arr.push_back({{"version", s.version.to_json()},
                   {"value", base64_encode(s.value)}});
  }
  return arr;
}

VersionedValue VersionedValue::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ProtocolError("siblings must be an array");
  VersionedValue v;
  for (const auto& e : j) {
    v.siblings_.push_back(Sibling{VersionVector::from_json(e.at("version")),
                                  base64_decode(e.at("value").get<std::string>())});
  }
  return v;
}

const Sibling& resolve_default(const std::vector<Sibling>& siblings) {
  if (siblings.empty()) throw ConfigError("resolver requires a non-empty sibling list");
  const Sibling* best = &siblings[0];
  for (const auto& s : siblings) {
    if (compare(best->version, s.version) == CausalOrder::Before ||
        best->version.tie_break_less(s.version))
      best = &s;
  }
  return *best;
}

}  // namespace optikv
