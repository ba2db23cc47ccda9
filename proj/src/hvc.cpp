#include "optikv/hvc.hpp"

#include <algorithm>
#include <cstring>

#include "optikv/errors.hpp"

namespace optikv {

const char* to_string(CausalOrder o) {
  switch (o) {
    case CausalOrder::Before:
      return "before";
    case CausalOrder::After:
      return "after";
    case CausalOrder::Concurrent:
      return "concurrent";
    case CausalOrder::Equal:
      return "equal";
  }
  return "?";
}

Hvc::Hvc(int owner, int n, Millis epsilon)
    : owner_(owner), epsilon_(epsilon), entries_(static_cast<size_t>(n), 0) {
  if (owner < 0 || owner >= n)
    throw ConfigError("hvc owner " + std::to_string(owner) +
                      " out of range for n=" + std::to_string(n));
}

Hvc::Hvc(int owner, std::vector<Millis> entries, Millis epsilon)
    : owner_(owner), epsilon_(epsilon), entries_(std::move(entries)) {
  if (owner < 0 || owner >= static_cast<int>(entries_.size()))
    throw ConfigError("hvc owner out of range");
}

Hvc Hvc::tick(Millis now) const {
  if (now < own_entry())
    throw ClockError("clock regression at server " + std::to_string(owner_) +
                     ": now=" + std::to_string(now) +
                     " own=" + std::to_string(own_entry()));
  Hvc r(*this);
  for (size_t j = 0; j < r.entries_.size(); ++j) {
    if (static_cast<int>(j) == owner_) {
      r.entries_[j] = now;
    } else if (epsilon_finite(epsilon_)) {
      r.entries_[j] = std::max(r.entries_[j], now - epsilon_);
    }
  }
  return r;
}

Hvc Hvc::on_send(Millis now) const { return tick(now); }

Hvc Hvc::on_receive(const Hvc& msg, Millis now) const {
  if (msg.size() != size())
    throw ConfigError("hvc size mismatch on receive: " +
                      std::to_string(msg.size()) + " vs " +
                      std::to_string(size()));
  return on_receive(msg.entries_, now);
}

Hvc Hvc::on_receive(const std::vector<Millis>& msg_entries, Millis now) const {
  if (msg_entries.size() != entries_.size())
    throw ConfigError("hvc size mismatch on receive");
  if (now < own_entry())
    throw ClockError("clock regression at server " + std::to_string(owner_));
  Hvc r(*this);
  for (size_t j = 0; j < r.entries_.size(); ++j) {
    if (static_cast<int>(j) == owner_) {
      r.entries_[j] = now;
    } else {
      Millis v = std::max(r.entries_[j], msg_entries[j]);
      if (epsilon_finite(epsilon_)) v = std::max(v, now - epsilon_);
      r.entries_[j] = v;
    }
  }
  return r;
}

CausalOrder compare_vectors(const std::vector<Millis>& a,
                            const std::vector<Millis>& b) {
  if (a.size() != b.size()) throw ConfigError("comparing clocks of unequal n");
  bool a_less = false, b_less = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) a_less = true;
    if (b[i] < a[i]) b_less = true;
  }
  if (!a_less && !b_less) return CausalOrder::Equal;
  if (a_less && !b_less) return CausalOrder::Before;
  if (b_less && !a_less) return CausalOrder::After;
  return CausalOrder::Concurrent;
}

CausalOrder compare(const Hvc& a, const Hvc& b) {
  return compare_vectors(a.entries(), b.entries());
}

CompactHvc compress(const Hvc& h) {
  if (!epsilon_finite(h.epsilon()))
    throw ConfigError("compression requires finite epsilon");
  CompactHvc c;
  c.owner = h.owner();
  c.n = h.size();
  c.epsilon = h.epsilon();
  c.base = h.own_entry();
  c.present.assign(static_cast<size_t>(c.n), false);
  const Millis dflt = c.base - c.epsilon;
  for (int i = 0; i < c.n; ++i) {
    if (h.entry(i) != dflt) {
      c.present[static_cast<size_t>(i)] = true;
      c.values.push_back(h.entry(i));
    }
  }
  return c;
}

Hvc decompress(const CompactHvc& c, int n) {
  if (c.n != n) throw ProtocolError("compact hvc n mismatch");
  if (static_cast<int>(c.present.size()) != n)
    throw ProtocolError("compact hvc mask length mismatch");
  size_t set_bits = 0;
  for (bool b : c.present)
    if (b) ++set_bits;
  if (set_bits != c.values.size())
    throw ProtocolError("compact hvc mask/values length mismatch");
  std::vector<Millis> entries(static_cast<size_t>(n), c.base - c.epsilon);
  size_t vi = 0;
  for (int i = 0; i < n; ++i) {
    if (c.present[static_cast<size_t>(i)]) entries[static_cast<size_t>(i)] = c.values[vi++];
  }
  return Hvc(c.owner, std::move(entries), c.epsilon);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i64(std::string& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s_[pos_ + static_cast<size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int64_t i64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + static_cast<size_t>(i)])) << (8 * i);
    pos_ += 8;
    return static_cast<std::int64_t>(v);
  }
  std::string bytes(size_t k) {
    need(k);
    std::string r = s_.substr(pos_, k);
    pos_ += k;
    return r;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(size_t k) {
    if (pos_ + k > s_.size()) throw ProtocolError("truncated hvc encoding");
  }
  const std::string& s_;
  size_t pos_ = 0;
};

}  // namespace

std::string encode_hvc(const Hvc& h) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  put_i64(out, h.epsilon());
  for (int i = 0; i < h.size(); ++i) put_i64(out, h.entry(i));
  return out;
}

Hvc decode_hvc(const std::string& bytes, int owner) {
  Reader r(bytes);
  int n = static_cast<int>(r.u32());
  if (n <= 0 || n > 1 << 20) throw ProtocolError("bad hvc n");
  Millis eps = r.i64();
  std::vector<Millis> entries;
  entries.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) entries.push_back(r.i64());
  if (!r.done()) throw ProtocolError("trailing bytes in hvc encoding");
  return Hvc(owner, std::move(entries), eps);
}

std::string encode_compact_hvc(const CompactHvc& c) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(c.n));
  put_i64(out, c.epsilon);
  put_i64(out, c.base);
  size_t mask_bytes = (static_cast<size_t>(c.n) + 7) / 8;
  std::string mask(mask_bytes, '\0');
  for (int i = 0; i < c.n; ++i) {
    if (c.present[static_cast<size_t>(i)])
      mask[static_cast<size_t>(i) / 8] = static_cast<char>(
          static_cast<unsigned char>(mask[static_cast<size_t>(i) / 8]) | (1u << (i % 8)));
  }
  out += mask;
  for (Millis v : c.values) put_i64(out, v);
  return out;
}

CompactHvc decode_compact_hvc(const std::string& bytes, int owner) {
  Reader r(bytes);
  CompactHvc c;
  c.owner = owner;
  c.n = static_cast<int>(r.u32());
  if (c.n <= 0 || c.n > 1 << 20) throw ProtocolError("bad compact hvc n");
  c.epsilon = r.i64();
  if (!epsilon_finite(c.epsilon))
    throw ProtocolError("compact hvc requires finite epsilon");
  c.base = r.i64();
  size_t mask_bytes = (static_cast<size_t>(c.n) + 7) / 8;
  std::string mask = r.bytes(mask_bytes);
  c.present.assign(static_cast<size_t>(c.n), false);
  size_t set_bits = 0;
  for (int i = 0; i < c.n; ++i) {
    bool bit = (static_cast<unsigned char>(mask[static_cast<size_t>(i) / 8]) >> (i % 8)) & 1u;
    c.present[static_cast<size_t>(i)] = bit;
    if (bit) ++set_bits;
  }
  for (size_t i = 0; i < set_bits; ++i) c.values.push_back(r.i64());
  if (!r.done()) throw ProtocolError("trailing bytes in compact hvc encoding");
  return c;
}

void merge_entries(std::vector<Millis>& into, const std::vector<Millis>& from) {
  if (into.empty()) {
    into = from;
    return;
  }
  if (into.size() != from.size()) throw ConfigError("merging clocks of unequal n");
  for (size_t i = 0; i < into.size(); ++i) into[i] = std::max(into[i], from[i]);
}

}  // namespace optikv
