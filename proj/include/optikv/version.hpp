#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "optikv/hvc.hpp"

namespace optikv {

/// Per-writer logical counters describing the origin of a stored value.
/// Absent writers count as zero.
class VersionVector {
 public:
  VersionVector() = default;

  std::int64_t get(const std::string& writer) const;
  void increment(const std::string& writer);
  void merge(const VersionVector& other);  // elementwise max

  const std::map<std::string, std::int64_t>& counts() const { return counts_; }
  bool operator==(const VersionVector& other) const {
    return counts_ == other.counts_;
  }
  // total order used for deterministic sibling ordering/resolution:
  // descending-sorted (writer,count) pairs compared lexicographically, so
  // the first comparison is between the greatest pairs
  bool tie_break_less(const VersionVector& other) const;

  nlohmann::json to_json() const;
  static VersionVector from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::int64_t> counts_;
};

CausalOrder compare(const VersionVector& a, const VersionVector& b);

struct Sibling {
  VersionVector version;
  std::string value;  // opaque bytes
};

/// All live versions of one key; pairwise concurrent by construction.
class VersionedValue {
 public:
  // Reconcile an incoming write: drops stored versions dominated by (or
  // equal to) the incoming one; an incoming version dominated by a stored
  // one is obsolete and is itself dropped. Returns whether stored.
  bool put(const VersionVector& version, std::string value);

  const std::vector<Sibling>& siblings() const { return siblings_; }
  bool empty() const { return siblings_.empty(); }

  nlohmann::json to_json() const;
  static VersionedValue from_json(const nlohmann::json& j);

 private:
  std::vector<Sibling> siblings_;  // kept sorted by tie_break_less
};

// Default resolver: the sibling with the greatest (writer-id, counter)
// pair under the deterministic tie-break. Dominated siblings never reach
// the stored set, so among stored values this picks from concurrent ones.
const Sibling& resolve_default(const std::vector<Sibling>& siblings);

using Resolver = std::string (*)(const std::vector<Sibling>&);

}  // namespace optikv
