#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <future>
#include <thread>

#include "optikv/client.hpp"
#include "optikv/monitor.hpp"
#include "optikv/net_tcp.hpp"
#include "optikv/store.hpp"

using namespace optikv;

namespace {

PutResult put_sync(TcpHost& host, QuorumClient& qc, const std::string& key,
                   const std::string& value) {
  auto p = std::make_shared<std::promise<PutResult>>();
  auto f = p->get_future();
  host.post([&qc, key, value, p] {
    qc.start_put(key, value, [p](PutResult r) { p->set_value(r); });
  });
  return f.get();
}

GetResult get_sync(TcpHost& host, QuorumClient& qc, const std::string& key) {
  auto p = std::make_shared<std::promise<GetResult>>();
  auto f = p->get_future();
  host.post([&qc, key, p] {
    qc.start_get(key, [p](GetResult r) { p->set_value(r); });
  });
  return f.get();
}

}  // namespace

TEST_CASE("framed put/get and candidate flow over real sockets") {
  // two servers, one monitor, one client, ephemeral ports on loopback
  TcpHost s0("server-0", "127.0.0.1:0");
  TcpHost s1("server-1", "127.0.0.1:0");
  TcpHost mon_host("monitor-1", "127.0.0.1:0");
  s0.start();
  s1.start();
  mon_host.start();

  StoreMetadata meta;
  meta.servers = {{0, s0.bound_address()}, {1, s1.bound_address()}};
  meta.n = 2;
  meta.r = 1;
  meta.w = 2;
  meta.timeout_ms = 1000;

  PredicateConfig pc;
  pc.id = 1;
  pc.spec.cls = DetectionClass::Semilinear;
  pc.spec.clauses.push_back(Clause{0, {{"x", "1"}}});
  pc.monitor = mon_host.bound_address();
  std::map<std::string, int> owners{{"x", 0}};

  StoreServer store0(&s0, 0, meta, kEpsilonInfinity);
  store0.install_detector({pc}, owners, 100);
  StoreServer store1(&s1, 1, meta, kEpsilonInfinity);
  store1.install_detector({pc}, owners, 100);
  s0.set_handler([&](const std::string& f, const Message& m) { store0.on_message(f, m); });
  s1.set_handler([&](const std::string& f, const Message& m) { store1.on_message(f, m); });

  Monitor monitor(&mon_host, pc, owners, 0);
  std::atomic<int> seen{0};
  monitor.set_on_violation([&](const Violation&) { ++seen; });
  mon_host.set_handler(
      [&](const std::string& f, const Message& m) { monitor.on_message(f, m); });

  TcpHost cli_host("client-a", "");
  cli_host.start();
  ConsistencyConfig cfg{2, 1, 2, 1000, "N2R1W2"};
  QuorumClient qc(&cli_host, "client-a", meta, cfg);
  cli_host.set_handler(
      [&](const std::string& f, const Message& m) { qc.on_message(f, m); });

  auto pr = put_sync(cli_host, qc, "k", "hello");
  CHECK(pr.ok);
  CHECK(pr.acks == 2);

  auto gr = get_sync(cli_host, qc, "k");
  CHECK(gr.ok);
  CHECK(gr.found);
  CHECK(gr.value == "hello");

  // drive the monitored variable true; the closing window carries x=1 and
  // the single-server clause fires
  CHECK(put_sync(cli_host, qc, "x", "1").ok);
  CHECK(put_sync(cli_host, qc, "x", "0").ok);
  for (int i = 0; i < 200 && seen.load() == 0; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  CHECK(seen.load() >= 1);

  auto gx = get_sync(cli_host, qc, "x");
  CHECK(gx.value == "0");

  cli_host.stop();
  mon_host.stop();
  s0.stop();
  s1.stop();
}

TEST_CASE("absent key and metadata over sockets") {
  TcpHost s0("server-0", "127.0.0.1:0");
  s0.start();
  StoreMetadata meta;
  meta.servers = {{0, s0.bound_address()}};
  meta.n = meta.r = meta.w = 1;
  meta.timeout_ms = 500;
  StoreServer store0(&s0, 0, meta, kEpsilonInfinity);
  s0.set_handler([&](const std::string& f, const Message& m) { store0.on_message(f, m); });

  TcpHost cli("client-z", "");
  cli.start();
  QuorumClient qc(&cli, "client-z", meta, ConsistencyConfig{1, 1, 1, 500, "N1R1W1"});
  cli.set_handler([&](const std::string& f, const Message& m) { qc.on_message(f, m); });

  auto gr = get_sync(cli, qc, "nothing");
  CHECK(gr.ok);
  CHECK_FALSE(gr.found);

  cli.stop();
  s0.stop();
}
