// Acceptance suite: drives every gate criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any fail. Actual measured
// numbers land in acceptance_report.json next to the binary.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "log_gen.hpp"
#include "optikv/errors.hpp"
#include "optikv/hvc.hpp"
#include "optikv/oracle.hpp"
#include "optikv/predicate.hpp"
#include "optikv/workload.hpp"

using namespace optikv;

namespace {

struct Outcome {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Outcome> g_outcomes;
nlohmann::json g_report;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back({id, name, pass, detail});
  std::cout << "CRITERION " << id << " [" << (pass ? "PASS" : "FAIL") << "] " << name
            << ": " << detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string data_path(const std::string& name) {
  return std::string(OPTIKV_SOURCE_DIR) + "/tests/data/" + name;
}

// --------------------------------------------------------------------------
// 1. HVC with infinite epsilon behaves exactly like Fidge-Mattern clocks

struct FmClock {
  std::vector<int> c;
  explicit FmClock(int n) : c(static_cast<size_t>(n), 0) {}
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

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260810);
  long long mismatches = 0;
  long long pairs = 0;
  for (int trace = 0; trace < 1000; ++trace) {
    int n = 2 + static_cast<int>(rng() % 4);  // <= 5 processes
    int events = 10 + static_cast<int>(rng() % 41);  // <= 50 events
    std::vector<FmClock> fm(static_cast<size_t>(n), FmClock(n));
    std::vector<Hvc> hv;
    for (int i = 0; i < n; ++i) hv.emplace_back(i, n, kEpsilonInfinity);
    struct Msg {
      std::vector<int> fm;
      Hvc hvc;
      int to;
    };
    std::vector<Msg> inflight;
    std::vector<std::vector<int>> fm_stamps;
    std::vector<Hvc> hvc_stamps;
    Millis now = 0;
    for (int e = 0; e < events; ++e) {
      ++now;
      int p = static_cast<int>(rng() % static_cast<unsigned>(n));
      int kind = static_cast<int>(rng() % 3);
      if (kind == 2 && !inflight.empty()) {
        size_t mi = rng() % inflight.size();
        Msg m = inflight[mi];
        inflight.erase(inflight.begin() + static_cast<long>(mi));
        p = m.to;
        auto& f = fm[static_cast<size_t>(p)];
        for (size_t i = 0; i < f.c.size(); ++i) f.c[i] = std::max(f.c[i], m.fm[i]);
        ++f.c[static_cast<size_t>(p)];
        hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].on_receive(m.hvc, now);
      } else if (kind == 1 && n > 1) {
        ++fm[static_cast<size_t>(p)].c[static_cast<size_t>(p)];
        hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].on_send(now);
        int dest = static_cast<int>(rng() % static_cast<unsigned>(n));
        while (dest == p) dest = static_cast<int>(rng() % static_cast<unsigned>(n));
        inflight.push_back({fm[static_cast<size_t>(p)].c, hv[static_cast<size_t>(p)], dest});
      } else {
        ++fm[static_cast<size_t>(p)].c[static_cast<size_t>(p)];
        hv[static_cast<size_t>(p)] = hv[static_cast<size_t>(p)].tick(now);
      }
      fm_stamps.push_back(fm[static_cast<size_t>(p)].c);
      hvc_stamps.push_back(hv[static_cast<size_t>(p)]);
    }
    for (size_t i = 0; i < fm_stamps.size(); ++i)
      for (size_t j = 0; j < fm_stamps.size(); ++j) {
        ++pairs;
        if (fm_compare(fm_stamps[i], fm_stamps[j]) !=
            compare(hvc_stamps[i], hvc_stamps[j]))
          ++mismatches;
      }
  }
  double secs = seconds_since(t0);
  g_report["criterion-1"] = {{"traces", 1000}, {"pairs", pairs},
                             {"mismatches", mismatches}, {"seconds", secs}};
  report(1, "hvc equals vector clocks under infinite epsilon",
         mismatches == 0 && secs < 10.0,
         std::to_string(pairs) + " comparisons, " + std::to_string(mismatches) +
             " mismatches, " + std::to_string(secs) + "s");
}

// --------------------------------------------------------------------------
// 2. monitor/oracle equivalence on random candidate logs

void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(424242);
  int logs = 0, failures = 0;
  long long want_total = 0;
  for (int iter = 0; iter < 500; ++iter) {
    bool semi = iter % 2 == 1;
    auto gen = logtest::generate_case(rng, 4, 8, semi);
    ++logs;
    for (Millis eps : {Millis{0}, Millis{5}, kEpsilonInfinity}) {
      auto want =
          enumerate_violations(gen.log, gen.spec, gen.owners, gen.predicate_id, eps);
      auto got = replay(gen.log, gen.spec, gen.owners, gen.predicate_id, eps);
      want_total += static_cast<long long>(want.size());
      bool ok = got.size() == want.size();
      if (ok) {
        auto sig = [](const std::vector<Violation>& vs) {
          std::vector<std::string> out;
          for (const auto& v : vs) {
            std::string s = std::to_string(v.clause_id) + ":";
            for (const auto& c : v.cut)
              s += std::to_string(c.server_id) + "." + std::to_string(c.seq) + ",";
            out.push_back(std::move(s));
          }
          std::sort(out.begin(), out.end());
          return out;
        };
        ok = sig(got) == sig(want);
      }
      if (ok) {
        // per clause, first reported cut == the oracle's lexicographic first
        for (const auto& cl : gen.spec.clauses) {
          const Violation* w = nullptr;
          const Violation* g = nullptr;
          for (const auto& v : want)
            if (v.clause_id == cl.id) {
              w = &v;
              break;
            }
          for (const auto& v : got)
            if (v.clause_id == cl.id) {
              g = &v;
              break;
            }
          if ((w == nullptr) != (g == nullptr)) ok = false;
          if (w && g) {
            if (w->cut.size() != g->cut.size()) ok = false;
            for (size_t i = 0; ok && i < w->cut.size(); ++i)
              if (w->cut[i].server_id != g->cut[i].server_id ||
                  w->cut[i].seq != g->cut[i].seq)
                ok = false;
          }
        }
      }
      if (!ok) ++failures;
    }
  }
  double secs = seconds_since(t0);
  g_report["criterion-2"] = {{"logs", logs}, {"oracle-violations", want_total},
                             {"failures", failures}, {"seconds", secs}};
  report(2, "monitor reports exactly the oracle's violations",
         failures == 0 && secs < 60.0,
         std::to_string(logs) + " logs x {0,5,inf}, " +
             std::to_string(want_total) + " oracle cuts, " +
             std::to_string(failures) + " mismatching runs, " +
             std::to_string(secs) + "s");
}

// --------------------------------------------------------------------------
// 3. compression round trip + a pinned mostly-default clock

void criterion_3() {
  std::mt19937_64 rng(3);
  int bad = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    int n = 1 + static_cast<int>(rng() % 12);
    Millis eps = static_cast<Millis>(rng() % 50);
    Millis base = 100 + static_cast<Millis>(rng() % 1000);
    int owner = static_cast<int>(rng() % static_cast<unsigned>(n));
    std::vector<Millis> entries(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      entries[static_cast<size_t>(i)] =
          (rng() % 2) ? base - eps : base - static_cast<Millis>(rng() % 60);
    entries[static_cast<size_t>(owner)] = base;
    Hvc h(owner, entries, eps);
    if (!(decompress(compress(h), n) == h)) ++bad;
  }

  Hvc pinned(0, {100, 80, 80, 95, 80, 80, 100, 80, 80, 80}, 20);
  CompactHvc c = compress(pinned);
  std::vector<bool> mask(10, false);
  mask[0] = mask[3] = mask[6] = true;
  bool example_ok = c.values == std::vector<Millis>{100, 95, 100} &&
                    c.present == mask && decompress(c, 10) == pinned;

  g_report["criterion-3"] = {{"round-trips", 10000}, {"failures", bad},
                             {"pinned-example", example_ok}};
  report(3, "compression round-trip and the pinned sparse clock", bad == 0 && example_ok,
         std::to_string(bad) + " round-trip failures; example values [100,95,100] at {0,3,6}: " +
             (example_ok ? "yes" : "no"));
}

// --------------------------------------------------------------------------
// 4. mutual-exclusion soundness and completeness in the graph workload

void criterion_4() {
  auto t0 = std::chrono::steady_clock::now();
  const char* sequential[] = {"N2R1W2", "N3R1W3", "N5R1W5"};
  std::int64_t phantom = 0;
  std::int64_t runs = 0;
  for (const char* preset_name : sequential) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      GraphWorkloadConfig gw;
      // half the schedules on the minimal one-edge graph, half on a wider
      // grid with three clients and several cross-client edges
      if (seed <= 50) {
        gw.width = 2;
        gw.height = 1;
        gw.clients = 2;
      } else {
        gw.width = 3;
        gw.height = 2;
        gw.clients = 3;
      }
      gw.iterations = 4;
      gw.busy_work_ms = 2;
      gw.seed = seed;
      RunOptions opt;
      opt.consistency = preset(preset_name);
      opt.seed = seed;
      opt.monitor_epsilon = 2;
      opt.client_timeout_ms = 150;
      auto r = run_graph(gw, opt);
      ++runs;
      phantom += r.report.violation_count;
      phantom += r.report.true_episodes;  // the protocol itself must hold
    }
  }

  // eventual presets with adversarial replication delays: recall 1.0
  std::int64_t episodes = 0, missed = 0;
  Millis worst_latency = 0;
  Millis bound = 0;
  const char* eventual[] = {"N2R1W1", "N3R1W1"};
  for (const char* preset_name : eventual) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      GraphWorkloadConfig gw;
      gw.width = 2;
      gw.height = 1;
      gw.clients = 2;
      gw.iterations = 10;
      gw.busy_work_ms = 3;
      gw.seed = seed;
      RunOptions opt;
      opt.consistency = preset(preset_name);
      opt.seed = seed;
      opt.monitor_epsilon = 2;
      opt.replication_delay_ms = 400;
      opt.client_timeout_ms = 150;
      auto r = run_graph(gw, opt);
      episodes += r.report.true_episodes;
      bound = opt.heartbeat_ms + 4 * opt.max_net_delay + 10;
      if (r.report.recall < 1.0)
        missed += static_cast<std::int64_t>(
            (1.0 - r.report.recall) * static_cast<double>(r.report.true_episodes) + 0.5);
      worst_latency = std::max(worst_latency, r.report.max_detection_latency_ms);
    }
  }
  double secs = seconds_since(t0);
  bool pass = phantom == 0 && episodes > 0 && missed == 0 && worst_latency <= bound;
  g_report["criterion-4"] = {{"sequential-runs", runs},
                             {"phantoms", phantom},
                             {"true-episodes", episodes},
                             {"missed", missed},
                             {"worst-detection-latency-ms", worst_latency},
                             {"latency-bound-ms", bound},
                             {"seconds", secs}};
  report(4, "mutual exclusion: sound under sequential, complete under eventual", pass,
         std::to_string(runs) + " sequential runs with " + std::to_string(phantom) +
             " violations; " + std::to_string(episodes) + " injected overlaps, " +
             std::to_string(missed) + " missed, worst latency " +
             std::to_string(worst_latency) + "ms <= " + std::to_string(bound) + "ms, " +
             std::to_string(secs) + "s");
}

// --------------------------------------------------------------------------
// 5. non-intrusiveness: byte-identical differential runs

void criterion_5() {
  int diffs = 0;
  for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
    ConjunctiveWorkloadConfig cw;
    cw.num_locals = 4;
    cw.beta = 0.2;
    cw.put_ratio = 0.5;
    cw.duration_ms = 1500;
    cw.seed = seed;
    RunOptions clean;
    clean.consistency = preset("N2R1W1");
    clean.monitored = false;
    clean.seed = seed;
    RunOptions black = clean;
    black.monitored = true;
    black.blackhole_monitors = true;
    if (run_conjunctive(cw, clean).results_log != run_conjunctive(cw, black).results_log)
      ++diffs;

    GraphWorkloadConfig gw;
    gw.width = 2;
    gw.height = 2;
    gw.clients = 2;
    gw.iterations = 5;
    gw.seed = seed;
    RunOptions gclean;
    gclean.consistency = preset("N2R1W1");
    gclean.monitored = false;
    gclean.seed = seed;
    RunOptions gblack = gclean;
    gblack.monitored = true;
    gblack.blackhole_monitors = true;
    if (run_graph(gw, gclean).results_log != run_graph(gw, gblack).results_log) ++diffs;
  }
  g_report["criterion-5"] = {{"differential-pairs", 6}, {"mismatches", diffs}};
  report(5, "detector with blackholed monitors is invisible to clients", diffs == 0,
         "6 differential pairs, " + std::to_string(diffs) + " result mismatches");
}

// --------------------------------------------------------------------------
// 6. rollback integrity over randomized violation/restore schedules

void criterion_6() {
  auto t0 = std::chrono::steady_clock::now();
  std::int64_t scans = 0;
  std::int64_t dirty = 0;
  std::int64_t mixed = 0;
  std::int64_t rollbacks = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    ConjunctiveWorkloadConfig cw;
    cw.num_locals = 2;
    cw.beta = 0.25;
    cw.put_ratio = 0.8;
    cw.duration_ms = 2500;
    cw.seed = seed;
    RunOptions opt;
    opt.consistency = preset("N2R1W1");
    opt.seed = seed;
    opt.with_coordinator = true;
    // randomized pause timing: vary the checkpoint period per seed
    opt.rollback_policy = "periodic:" + std::to_string(300 + (seed * 97) % 500);
    auto r = run_conjunctive(cw, opt);
    scans += r.rollback_scans_checked;
    rollbacks += static_cast<std::int64_t>(r.rollbacks.size());
    if (!r.rollback_scans_clean) ++dirty;
    if (r.mixed_epoch_observed) ++mixed;
  }
  double secs = seconds_since(t0);
  bool pass = scans >= 50 && dirty == 0 && mixed == 0;
  g_report["criterion-6"] = {{"simulations", 50}, {"restores-scanned", scans},
                             {"dirty-scans", dirty}, {"mixed-epoch-runs", mixed},
                             {"rollback-reports", rollbacks}, {"seconds", secs}};
  report(6, "restores leave exactly the checkpoint image and one epoch", pass,
         "50 simulations, " + std::to_string(scans) + " restores scanned, " +
             std::to_string(dirty) + " dirty, " + std::to_string(mixed) +
             " mixed-epoch runs, " + std::to_string(secs) + "s");
}

// --------------------------------------------------------------------------
// 7. directional throughput, overhead, and latency distribution

void criterion_7() {
  auto t0 = std::chrono::steady_clock::now();
  bool ratios_ok = true;
  nlohmann::json ratios = nlohmann::json::array();
  for (int n : {2, 3}) {
    ConjunctiveWorkloadConfig cw;
    cw.num_locals = 2 * n;
    cw.beta = 0.01;
    cw.put_ratio = 0.5;
    cw.duration_ms = 4000;
    cw.seed = 77;
    RunOptions eventual;
    eventual.consistency = preset("N" + std::to_string(n) + "R1W1");
    eventual.seed = 77;
    RunOptions sequential;
    sequential.consistency = preset("N" + std::to_string(n) + "R1W" + std::to_string(n));
    sequential.seed = 77;
    sequential.monitored = false;
    auto cmp = compare_throughput(cw, eventual, sequential);
    ratios.push_back({{"n", n},
                      {"eventual-monitored", cmp.a.throughput_ops_per_sec},
                      {"sequential", cmp.b.throughput_ops_per_sec},
                      {"ratio", cmp.ratio}});
    if (cmp.ratio <= 1.0) ratios_ok = false;
  }

  // overhead: same preset and seed, detector costed vs absent
  ConjunctiveWorkloadConfig cw;
  cw.num_locals = 4;
  cw.beta = 0.05;
  cw.put_ratio = 0.5;
  cw.duration_ms = 4000;
  cw.seed = 78;
  RunOptions plain;
  plain.consistency = preset("N2R1W1");
  plain.seed = 78;
  plain.monitored = false;
  RunOptions monitored = plain;
  monitored.monitored = true;
  monitored.detector_cost_ms = 1;
  auto oc = compare_throughput(cw, plain, monitored);
  double overhead = 100.0 *
                    (oc.a.throughput_ops_per_sec - oc.b.throughput_ops_per_sec) /
                    oc.a.throughput_ops_per_sec;
  bool overhead_ok = overhead >= 0.0 && overhead < 25.0;

  // latency distribution under the default heartbeat
  ConjunctiveWorkloadConfig lw;
  lw.num_locals = 2;
  lw.beta = 0.4;
  lw.put_ratio = 0.5;
  lw.duration_ms = 8000;
  lw.seed = 79;
  RunOptions lopt;
  lopt.consistency = preset("N2R1W1");
  lopt.seed = 79;
  auto lr = run_conjunctive(lw, lopt);
  double under_100 =
      lr.report.latency_hist.total() == 0
          ? 0.0
          : static_cast<double>(lr.report.latency_hist.counts[0]) /
                static_cast<double>(lr.report.latency_hist.total());
  bool latency_ok = lr.report.latency_hist.total() >= 100 && under_100 >= 0.99;

  double secs = seconds_since(t0);
  g_report["criterion-7"] = {{"ratios", ratios},
                             {"overhead-pct", overhead},
                             {"violations-measured", lr.report.latency_hist.total()},
                             {"fraction-under-100ms", under_100},
                             {"seconds", secs}};
  report(7, "directional throughput, bounded overhead, fast detection",
         ratios_ok && overhead_ok && latency_ok,
         "ratios " + ratios.dump() + "; overhead " + std::to_string(overhead) +
             "%; " + std::to_string(lr.report.latency_hist.total()) +
             " violations with " + std::to_string(under_100 * 100) + "% under 100ms");
}

// --------------------------------------------------------------------------
// 8. the sample predicate document and mutation rejection

std::string mutate_doc(const std::string& doc, std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0: {
      static const char* tags[] = {"type", "conjClause", "var", "name", "value", "id"};
      const char* t = tags[rng() % 6];
      std::string open = "<" + std::string(t) + ">";
      auto pos = doc.find(open);
      std::string out = doc;
      if (pos != std::string::npos) out.replace(pos + 1, strlen(t), "bogus");
      return out;
    }
    case 1: {
      std::string out = doc;
      auto pos = out.find("semilinear");
      if (pos != std::string::npos) out.replace(pos, 10, "cubic");
      return out;
    }
    case 2: {
      std::string out = doc;
      auto pos = out.find("<id>1</id>");
      if (pos != std::string::npos) out.replace(pos, 10, "<id>0</id>");
      return out;
    }
    case 3: {
      std::string out = doc;
      auto b = out.find("<var>");
      auto e = out.find("</conjClause>");
      if (b != std::string::npos && e != std::string::npos && b < e) out.erase(b, e - b);
      return out;
    }
    case 4:
      return doc.substr(0, doc.size() / 2 + rng() % (doc.size() / 4));
    case 5: {
      std::string out = doc;
      auto b = out.find("<type>");
      auto e = out.find("</type>");
      if (b != std::string::npos && e != std::string::npos) out.erase(b, e + 7 - b);
      return out;
    }
    case 6: {
      std::string out = doc;
      auto pos = out.find("</var>");
      if (pos != std::string::npos) out.replace(pos, 6, "</rav>");
      return out;
    }
    default: {
      std::string out = doc;
      auto pos = out.find("</predicate>");
      if (pos != std::string::npos) {
        out.erase(pos, 12);
        out.insert(out.find("</type>") + 7, "</predicate>");
      }
      return out;
    }
  }
}

void criterion_8() {
  std::ifstream in(data_path("fig3.xml"), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  bool parse_ok = false;
  bool serialize_ok = false;
  try {
    PredicateSpec s = parse_predicate(text);
    parse_ok = s.cls == DetectionClass::Semilinear && s.clauses.size() == 2 &&
               s.clauses[0].terms.size() == 2 && s.clauses[1].terms.size() == 1 &&
               s.clauses[0].terms[0].variable == "x2" &&
               s.clauses[1].terms[0].variable == "z2";
    serialize_ok = serialize_predicate(s) == text && parse_predicate(serialize_predicate(s)) == s;
  } catch (const std::exception&) {
  }

  std::mt19937_64 rng(808);
  int rejected = 0, located = 0;
  for (int i = 0; i < 200; ++i) {
    std::string bad = mutate_doc(text, rng);
    try {
      parse_predicate(bad);
    } catch (const ParseError& e) {
      ++rejected;
      if (e.line() >= 1 && e.col() >= 1 && std::string(e.what()).size() > 8) ++located;
    } catch (const std::exception&) {
      ++rejected;  // rejected, but without location info
    }
  }
  bool pass = parse_ok && serialize_ok && rejected == 200 && located == 200;
  g_report["criterion-8"] = {{"parse", parse_ok}, {"lossless", serialize_ok},
                             {"mutants-rejected", rejected}, {"located", located}};
  report(8, "sample predicate parses, round-trips, and mutants are rejected", pass,
         std::string("parse: ") + (parse_ok ? "ok" : "FAIL") + ", lossless: " +
             (serialize_ok ? "ok" : "FAIL") + ", " + std::to_string(rejected) +
             "/200 rejected, " + std::to_string(located) + " with locations");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();

  {
    std::ofstream f("acceptance_report.json");
    f << g_report.dump(2) << "\n";
  }

  int failed = 0;
  for (const auto& o : g_outcomes)
    if (!o.pass) ++failed;
  std::cout << (failed == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failed))
            << std::endl;
  return failed == 0 ? 0 : 1;
}
