#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "optikv/errors.hpp"
#include "optikv/hvc.hpp"

using namespace optikv;

namespace {

// Classic Fidge-Mattern vector clock, kept independent of the Hvc code path.
struct FmClock {
  std::vector<int> c;
  explicit FmClock(int n) : c(static_cast<size_t>(n), 0) {}
  void local(int me) { ++c[static_cast<size_t>(me)]; }
  void receive(int me, const std::vector<int>& msg) {
    for (size_t i = 0; i < c.size(); ++i) c[i] = std::max(c[i], msg[i]);
    ++c[static_cast<size_t>(me)];
  }
};

CausalOrder fm_compare(const std::vector<int>& a, const std::vector<int>& b) {
  bool al = false, bl = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) al = true;
    if (b[i] < a[i]) bl = true;
  }
  if (!al && !bl) return CausalOrder::Equal;
  if (al && !bl) return CausalOrder::Before;
  if (bl && !al) return CausalOrder::After;
  return CausalOrder::Concurrent;
}

struct Trace {
  std::vector<std::vector<int>> fm_stamps;
  std::vector<Hvc> hvc_stamps;
};

// Random event trace over n processes: local events, sends, receives
// (FIFO per channel). Applies the same schedule to both clock kinds with
// a shared, strictly increasing physical time.
Trace run_trace(int n, int events, std::mt19937_64& rng) {
  Trace t;
  std::vector<FmClock> fm(static_cast<size_t>(n), FmClock(n));
  std::vector<Hvc> hv;
  for (int i = 0; i < n; ++i) hv.emplace_back(i, n, kEpsilonInfinity);
  struct Msg {
    std::vector<int> fm;
    Hvc hvc;
    int to;
  };
  std::vector<Msg> inflight;
  Millis now = 0;
  std::uniform_int_distribution<int> proc(0, n - 1);
  std::uniform_int_distribution<int> kind(0, 2);
  for (int e = 0; e < events; ++e) {
    ++now;
    int p = proc(rng);
    int k = kind(rng);
    if (k == 2 && !inflight.empty()) {
      std::uniform_int_distribution<size_t> pick(0, inflight.size() - 1);
      size_t mi = pick(rng);
      Msg m = inflight[mi];
      inflight.erase(inflight.begin() + static_cast<long>(mi));
      p = m.to;
      fm[static_cast<size_t>(p)].receive(p, m.fm);
      hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].on_receive(m.hvc, now);
    } else if (k == 1 && n > 1) {
      fm[static_cast<size_t>(p)].local(p);
      hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].on_send(now);
      int dest = proc(rng);
      while (dest == p) dest = proc(rng);
      inflight.push_back({fm[static_cast<size_t>(p)].c, hv[static_cast<size_t>(p)], dest});
    } else {
      fm[static_cast<size_t>(p)].local(p);
      hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].tick(now);
    }
    t.fm_stamps.push_back(fm[static_cast<size_t>(p)].c);
    t.hvc_stamps.push_back(hv[static_cast<size_t>(p)]);
  }
  return t;
}

}  // namespace

TEST_CASE("tick examples") {
  Hvc h(0, {5, 3}, kEpsilonInfinity);
  Hvc r = h.tick(9);
  CHECK(r.entries() == std::vector<Millis>{9, 3});

  Hvc h2(0, {100, 80}, 20);
  Hvc r2 = h2.tick(110);
  CHECK(r2.entries() == std::vector<Millis>{110, 90});

  // idempotent at the same instant
  Hvc r3 = r2.tick(110);
  CHECK(r3.entries() == r2.entries());

  CHECK_THROWS_AS(h.tick(4), ClockError);
}

TEST_CASE("on_send examples") {
  Hvc h(1, {4, 7, 2}, kEpsilonInfinity);
  CHECK(h.on_send(8).entries() == std::vector<Millis>{4, 8, 2});

  Hvc h2(1, {4, 7, 2}, 3);
  CHECK(h2.on_send(10).entries() == std::vector<Millis>{7, 10, 7});

  CHECK(h.on_send(8).entries() == h.on_send(8).entries());
}

TEST_CASE("on_receive examples") {
  Hvc h(0, {9, 3}, kEpsilonInfinity);
  Hvc msg(1, {2, 8}, kEpsilonInfinity);
  CHECK(h.on_receive(msg, 12).entries() == std::vector<Millis>{12, 8});

  // msg == h at own entry time: unchanged
  Hvc same = h.on_receive(h, 9);
  CHECK(same.entries() == h.entries());

  Hvc h2(0, {100, 80}, 20);
  Hvc msg2(1, {90, 95}, 20);
  CHECK(h2.on_receive(msg2, 105).entries() == std::vector<Millis>{105, 95});

  Hvc wrong_n(1, {1, 2, 3}, kEpsilonInfinity);
  CHECK_THROWS_AS(h.on_receive(wrong_n, 13), ConfigError);
}

TEST_CASE("compare basics") {
  Hvc a(0, {1, 2}, kEpsilonInfinity), b(1, {1, 2}, kEpsilonInfinity);
  CHECK(compare(a, b) == CausalOrder::Equal);
  Hvc c(1, {2, 2}, kEpsilonInfinity);
  CHECK(compare(a, c) == CausalOrder::Before);
  CHECK(compare(c, a) == CausalOrder::After);
  Hvc d(0, {3, 1}, kEpsilonInfinity), e(1, {1, 3}, kEpsilonInfinity);
  CHECK(compare(d, e) == CausalOrder::Concurrent);
}

TEST_CASE("compare is a strict partial order on vectors of length <= 3") {
  // exhaustive over entries in {0,1,2}
  std::vector<std::vector<Millis>> vs;
  for (Millis a = 0; a < 3; ++a)
    for (Millis b = 0; b < 3; ++b)
      for (Millis c = 0; c < 3; ++c) vs.push_back({a, b, c});
  for (const auto& a : vs) {
    CHECK(compare_vectors(a, a) == CausalOrder::Equal);
    for (const auto& b : vs) {
      auto ab = compare_vectors(a, b);
      auto ba = compare_vectors(b, a);
      if (ab == CausalOrder::Before) CHECK(ba == CausalOrder::After);
      if (ab == CausalOrder::Concurrent) CHECK(ba == CausalOrder::Concurrent);
      for (const auto& c : vs) {
        if (ab == CausalOrder::Before &&
            compare_vectors(b, c) == CausalOrder::Before)
          CHECK(compare_vectors(a, c) == CausalOrder::Before);
      }
    }
  }
}

TEST_CASE("hvc with infinite epsilon matches Fidge-Mattern on random traces") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 50; ++iter) {
    int n = 2 + static_cast<int>(rng() % 4);
    Trace t = run_trace(n, 40, rng);
    for (size_t i = 0; i < t.fm_stamps.size(); ++i) {
      for (size_t j = 0; j < t.fm_stamps.size(); ++j) {
        CHECK(fm_compare(t.fm_stamps[i], t.fm_stamps[j]) ==
              compare(t.hvc_stamps[i], t.hvc_stamps[j]));
      }
    }
  }
}

TEST_CASE("per-owner monotonicity across a trace") {
  std::mt19937_64 rng(11);
  Trace t = run_trace(3, 60, rng);
  for (size_t i = 0; i < t.hvc_stamps.size(); ++i)
    for (size_t j = i + 1; j < t.hvc_stamps.size(); ++j) {
      if (t.hvc_stamps[i].owner() != t.hvc_stamps[j].owner()) continue;
      auto o = compare(t.hvc_stamps[i], t.hvc_stamps[j]);
      CHECK((o == CausalOrder::Before || o == CausalOrder::Equal));
    }
}

TEST_CASE("compression of a mostly-default clock") {
  Hvc h(0, {100, 80, 80, 95, 80, 80, 100, 80, 80, 80}, 20);
  CompactHvc c = compress(h);
  CHECK(c.base == 100);
  CHECK(c.values == std::vector<Millis>{100, 95, 100});
  std::vector<bool> want(10, false);
  want[0] = want[3] = want[6] = true;
  CHECK(c.present == want);
  CHECK(decompress(c, 10) == h);
}

TEST_CASE("compression corner cases") {
  // all entries equal base - eps (eps = 0): nothing retained
  Hvc h(0, {50, 50, 50}, 0);
  CompactHvc c = compress(h);
  CHECK(c.values.empty());
  CHECK(decompress(c, 3) == h);

  // epsilon so large no entry matches the default: everything retained
  Hvc h2(1, {3, 9, 4}, 1000);
  CompactHvc c2 = compress(h2);
  CHECK(c2.values.size() == 3);
  CHECK(decompress(c2, 3) == h2);

  CHECK_THROWS_AS(compress(Hvc(0, {1, 2}, kEpsilonInfinity)), ConfigError);

  CompactHvc bad = c2;
  bad.values.pop_back();
  CHECK_THROWS_AS(decompress(bad, 3), ProtocolError);
}

TEST_CASE("compression round-trip on random compressible clocks") {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 2000; ++iter) {
    int n = 1 + static_cast<int>(rng() % 12);
    Millis eps = static_cast<Millis>(rng() % 50);
    Millis base = 100 + static_cast<Millis>(rng() % 1000);
    int owner = static_cast<int>(rng() % static_cast<unsigned>(n));
    std::vector<Millis> entries(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      // mix of default (base - eps) and arbitrary recent values
      entries[static_cast<size_t>(i)] =
          (rng() % 2) ? base - eps : base - static_cast<Millis>(rng() % 60);
    }
    entries[static_cast<size_t>(owner)] = base;
    Hvc h(owner, entries, eps);
    CHECK(decompress(compress(h), n) == h);
  }
}

TEST_CASE("binary encodings round-trip") {
  Hvc h(2, {10, -5, 99}, kEpsilonInfinity);
  CHECK(decode_hvc(encode_hvc(h), 2) == h);

  Hvc h2(0, {100, 80, 95}, 20);
  CompactHvc c = compress(h2);
  CompactHvc c2 = decode_compact_hvc(encode_compact_hvc(c), 0);
  CHECK(decompress(c2, 3) == h2);

  CHECK_THROWS_AS(decode_hvc("abc", 0), ProtocolError);
}
