#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optikv/time.hpp"

namespace optikv {

enum class CausalOrder { Before, After, Concurrent, Equal };

const char* to_string(CausalOrder o);

/// Hybrid vector clock: one physical timestamp per server, owned by one
/// server, with synchronization bound epsilon (kEpsilonInfinity for pure
/// vector-clock behaviour). Values are immutable; event rules return the
/// updated clock.
class Hvc {
 public:
  Hvc() = default;
  Hvc(int owner, int n, Millis epsilon);
  Hvc(int owner, std::vector<Millis> entries, Millis epsilon);

  int owner() const { return owner_; }
  int size() const { return static_cast<int>(entries_.size()); }
  Millis epsilon() const { return epsilon_; }
  Millis entry(int i) const { return entries_[static_cast<size_t>(i)]; }
  Millis own_entry() const { return entries_[static_cast<size_t>(owner_)]; }
  const std::vector<Millis>& entries() const { return entries_; }

  // Local event (e.g. serving a PUT). Requires now >= own entry.
  Hvc tick(Millis now) const;
  // Stamp for an outgoing message; same update rule as tick.
  Hvc on_send(Millis now) const;
  // Merge a piggy-backed clock on message receipt. The receiver's prior
  // knowledge participates in the max so entries never regress.
  Hvc on_receive(const Hvc& msg, Millis now) const;
  Hvc on_receive(const std::vector<Millis>& msg_entries, Millis now) const;

  bool operator==(const Hvc& other) const {
    return entries_ == other.entries_;
  }

 private:
  int owner_ = 0;
  Millis epsilon_ = kEpsilonInfinity;
  std::vector<Millis> entries_;
};

CausalOrder compare(const Hvc& a, const Hvc& b);
// Elementwise comparison on raw vectors (shared by the version-vector and
// test oracles).
CausalOrder compare_vectors(const std::vector<Millis>& a,
                            const std::vector<Millis>& b);

/// Sparse form of an Hvc with finite epsilon: entries equal to the default
/// base - epsilon are omitted. present has one bit per server; the number of
/// set bits equals values.size().
struct CompactHvc {
  int owner = 0;
  int n = 0;
  Millis epsilon = 0;
  Millis base = 0;  // the owner's physical time
  std::vector<bool> present;
  std::vector<Millis> values;
};

CompactHvc compress(const Hvc& h);
Hvc decompress(const CompactHvc& c, int n);

// Binary wire encodings (little-endian): full form is n, epsilon, then n
// entries; compact form is n, epsilon, base, the bit mask padded to whole
// bytes, then the retained values. The owner index travels outside, in the
// enclosing message.
std::string encode_hvc(const Hvc& h);
Hvc decode_hvc(const std::string& bytes, int owner);
std::string encode_compact_hvc(const CompactHvc& c);
CompactHvc decode_compact_hvc(const std::string& bytes, int owner);

// Client-side context merge: elementwise max, no owner slot.
void merge_entries(std::vector<Millis>& into, const std::vector<Millis>& from);

}  // namespace optikv
