#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "xpar/client.hpp"
#include "xpar/server.hpp"

using namespace xpar;

namespace {

class ServerFixture {
 public:
  explicit ServerFixture(std::vector<std::shared_ptr<const Database>> dbs) {
    Registry r;
    for (auto& d : dbs) r.add(std::move(d));
    server_ = std::make_unique<Server>(std::move(r));
    server_->start();
  }
  Endpoint endpoint() const { return {"127.0.0.1", server_->port()}; }
  Server& server() { return *server_; }

 private:
  std::unique_ptr<Server> server_;
};

ServerFixture& running_server() {
  static ServerFixture f({fixtures::running_example()});
  return f;
}

ServerFixture& generated_server() {
  static ServerFixture f({fixtures::xmark(), fixtures::dblp()});
  return f;
}

std::string sequential_bytes(const Database& db, const QueryAst& q) {
  std::string out;
  append_result_lines(db.table, evaluate(q, db), out);
  return out;
}

ExecutionPlan split_plan(Strategy s, const SplitPlan& split, std::size_t P, const std::string& db) {
  ExecutionPlan p;
  p.strategy = s;
  p.split = split;
  p.P = P;
  p.db_name = db;
  return p;
}

}  // namespace

TEST(Server, TwoSessionsQueryConcurrently) {
  const auto ep = running_server().endpoint();
  std::string a, b;
  std::thread ta([&] {
    auto c = Connection::open(ep);
    c.call_ok("OPEN xmark");
    for (int k = 0; k < 50; ++k) a = c.call_ok("XPATH /site//bidder").body;
  });
  std::thread tb([&] {
    auto c = Connection::open(ep);
    c.call_ok("OPEN xmark");
    for (int k = 0; k < 50; ++k) b = c.call_ok("XPATH /site//open_auction/bidder[1]").body;
  });
  ta.join();
  tb.join();
  const auto db_holder = fixtures::running_example();
  const auto& db = *db_holder;
  EXPECT_EQ(a, sequential_bytes(db, parse_xpath("/site//bidder")));
  EXPECT_EQ(b, sequential_bytes(db, parse_xpath("/site//open_auction/bidder[1]")));
}

TEST(Server, TwelveConcurrentSuffixParts) {
  const auto ep = generated_server().endpoint();
  const auto& db = *fixtures::xmark();
  auto master = Connection::open(ep);
  const auto id = master.call_ok("OPEN xmark").status.fields.at("session");
  master.call_ok("STOREPARTS 12 /site/open_auctions/open_auction");
  const auto prefix = evaluate(parse_xpath("/site/open_auctions/open_auction"), db);
  const auto parts = block_partition(prefix, 12);
  const auto suffix = parse_xpath("bidder[last()]");
  std::vector<std::string> got(12);
  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&, i] {
      auto c = Connection::open(ep);
      c.call_ok("ATTACH " + id);
      for (int r = 0; r < 5; ++r) got[i] = c.call_ok("SUFFIXPART " + std::to_string(i + 1) + " bidder[last()]").body;
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < 12; ++i) {
    PreList res;
    for (Pre p : parts.partitions[i]) evaluate_from(suffix, db.table, p, res);
    std::string expect;
    append_result_lines(db.table, res, expect);
    EXPECT_EQ(got[i], expect) << "partition " << i + 1;
  }
}

TEST(Server, QuitClosesOnlyThatConnection) {
  const auto ep = running_server().endpoint();
  auto a = Connection::open(ep);
  auto b = Connection::open(ep);
  a.call_ok("OPEN xmark");
  b.call_ok("OPEN xmark");
  EXPECT_TRUE(a.call("QUIT").status.ok);
  EXPECT_THROW(a.call("XPATH /site"), ProtocolError);
  EXPECT_EQ(b.call_ok("PREFIX /site//open_auction").status.count, 6u);
}

TEST(Server, SurvivesRawGarbage) {
  const auto ep = running_server().endpoint();
  std::mt19937_64 rng(61);
  for (int k = 0; k < 20; ++k) {
    auto c = Connection::open(ep);
    std::string junk;
    for (int i = 0; i < 4000; ++i) junk += static_cast<char>(rng() % 256);
    junk += '\n';
    // A raw write, then drop the connection without reading.
    const auto reply = c.call(junk.substr(0, junk.size() - 1));
    EXPECT_FALSE(reply.status.ok);
  }
  auto c = Connection::open(ep);
  c.call_ok("OPEN xmark");
  EXPECT_EQ(c.call_ok("PREFIX /site//open_auction").status.count, 6u);
}

TEST(Server, StopsCleanly) {
  Registry r;
  r.add(fixtures::running_example());
  Server s(std::move(r));
  s.start();
  auto c = Connection::open({"127.0.0.1", s.port()});
  c.call_ok("OPEN xmark");
  std::thread waiter([&] { s.wait(); });
  s.stop();
  waiter.join();
  EXPECT_THROW(c.call("XPATH /site"), ProtocolError);
  Server empty{Registry{}};
  EXPECT_THROW(empty.start(), Error);
}

TEST(Client, RunningExampleServerSide) {
  const auto ep = running_server().endpoint();
  const auto plan = variant_plan(*find_variant("XM3(a)"), "xmark");
  const auto r = run(split_plan(Strategy::server_side, plan, 3, "xmark"), ep);
  const auto db_holder = fixtures::running_example();
  const auto& db = *db_holder;
  std::string expect;
  for (Pre p : fixtures::running_example_pres()) {
    PreList res;
    evaluate_from(plan.suffix, db.table, p, res);
    append_result_lines(db.table, res, expect);
  }
  EXPECT_EQ(r.bytes, expect);
  EXPECT_EQ(r.metrics.prefix_count, 6u);
  EXPECT_EQ(r.metrics.merge, MergeRule::concat_in_order);
  EXPECT_EQ(r.metrics.t_suffix_per_worker.size(), 3u);
}

TEST(Client, SingleWorkerMatchesSequential) {
  const auto ep = generated_server().endpoint();
  for (const auto& v : suite_variants()) {
    const auto db = default_db_name(v.dataset);
    ExecutionPlan seq;
    seq.query = parse_xpath(find_query(v.base)->text);
    seq.db_name = db;
    const auto expected = run(seq, ep).bytes;
    const auto split = variant_plan(v, db);
    EXPECT_EQ(run(split_plan(Strategy::client_side, split, 1, db), ep).bytes, expected) << v.key;
  }
}

TEST(Client, ThreeWayEquality) {
  const auto ep = generated_server().endpoint();
  for (const auto& dataset : {Dataset::xmark_like, Dataset::dblp_like}) {
    const auto db = default_db_name(dataset);
    ParallelClient client(ep, db, 4);
    for (const auto& v : suite_variants()) {
      if (v.dataset != dataset) continue;
      ExecutionPlan seq;
      seq.query = parse_xpath(find_query(v.base)->text);
      seq.db_name = db;
      const auto expected = client.run(seq).bytes;
      EXPECT_EQ(expected, sequential_bytes(*fixtures::suite_db(dataset), seq.query));
      const auto split = variant_plan(v, db);
      for (std::size_t P : {1u, 2u, 3u, 4u}) {
        for (auto s : {Strategy::client_side, Strategy::server_side}) {
          const auto r = client.run(split_plan(s, split, P, db));
          EXPECT_EQ(r.bytes, expected) << v.key << " " << strategy_name(s) << " P=" << P;
          const auto& m = r.metrics;
          double slowest = 0;
          for (double t : m.t_suffix_per_worker) slowest = std::max(slowest, t);
          EXPECT_GE(m.t_total + 1e-9, m.t_prefix + slowest);
        }
      }
    }
  }
}

TEST(Client, OptimizedPlansAgree) {
  const auto ep = generated_server().endpoint();
  ParallelClient client(ep, "xmark", 3);
  for (const char* key : {"XM2", "XM3", "XM4"}) {
    ExecutionPlan seq;
    seq.query = parse_xpath(find_query(key)->text);
    seq.db_name = "xmark";
    const auto expected = client.run(seq).bytes;
    seq.optimize = true;
    EXPECT_EQ(client.run(seq).bytes, expected) << key;
    auto split = choose_default_split(seq.query, *fixtures::xmark(), 3);
    auto plan = split_plan(Strategy::server_side, split, 3, "xmark");
    plan.optimize = true;
    EXPECT_EQ(client.run(plan).bytes, expected) << key;
  }
}

TEST(Client, AssignmentPermutationDoesNotMatter) {
  const auto ep = generated_server().endpoint();
  ParallelClient client(ep, "xmark", 4);
  const auto split = variant_plan(*find_variant("XM5(b)"), "xmark");
  const auto base = client.run(split_plan(Strategy::server_side, split, 4, "xmark")).bytes;
  std::vector<std::size_t> perm{0, 1, 2, 3};
  std::mt19937_64 rng(62);
  for (int k = 0; k < 6; ++k) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto s : {Strategy::client_side, Strategy::server_side}) {
      auto plan = split_plan(s, split, 4, "xmark");
      plan.assignment = perm;
      EXPECT_EQ(client.run(plan).bytes, base);
    }
  }
  auto bad = split_plan(Strategy::server_side, split, 4, "xmark");
  bad.assignment = {0, 0, 1, 2};
  EXPECT_THROW(client.run(bad), std::invalid_argument);
}

TEST(Client, DedupMergeOverOverlappingStreams) {
  const auto ep = running_server().endpoint();
  SplitPlan split;
  split.prefix = parse_xpath("/site//bidder");
  split.suffix = parse_xpath("parent::open_auction");
  split.merge = MergeRule::dedup_sort;
  ExecutionPlan seq;
  seq.query = parse_xpath("/site//bidder/parent::open_auction");
  seq.db_name = "xmark";
  const auto expected = run(seq, ep).bytes;
  for (std::size_t P : {1u, 2u, 5u}) {
    for (auto s : {Strategy::client_side, Strategy::server_side}) {
      const auto r = run(split_plan(s, split, P, "xmark"), ep);
      EXPECT_EQ(r.metrics.merge, MergeRule::dedup_sort);
      EXPECT_EQ(r.bytes, expected);
    }
  }
}

TEST(Client, DeterministicAcrossRuns) {
  const auto ep = generated_server().endpoint();
  const auto split = variant_plan(*find_variant("DB3(a)"), "dblp");
  const auto a = run(split_plan(Strategy::server_side, split, 3, "dblp"), ep).bytes;
  const auto b = run(split_plan(Strategy::server_side, split, 3, "dblp"), ep).bytes;
  const auto c = run(split_plan(Strategy::client_side, split, 2, "dblp"), ep).bytes;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Client, WorkerErrorBecomesJobError) {
  const auto ep = running_server().endpoint();
  ParallelClient client(ep, "xmark", 3);
  SplitPlan split;
  split.prefix = parse_xpath("/site//open_auction");
  split.suffix = parse_xpath("bidder[count(1) = 1]");
  EXPECT_THROW(client.run(split_plan(Strategy::server_side, split, 3, "xmark")), JobError);
  split.suffix = parse_xpath("bidder");
  EXPECT_THROW(client.run(split_plan(Strategy::server_side, split, 3, "xmark")), JobError);
  EXPECT_THROW(ParallelClient(ep, "nope", 1), RemoteError);
  EXPECT_THROW(Connection::open({"127.0.0.1", 1}), Error);
}

TEST(Client, EmptyPrefixGivesEmptyResult) {
  const auto ep = running_server().endpoint();
  SplitPlan split;
  split.prefix = parse_xpath("/site/nothing");
  split.suffix = parse_xpath("bidder");
  for (auto s : {Strategy::client_side, Strategy::server_side}) {
    const auto r = run(split_plan(s, split, 4, "xmark"), ep);
    EXPECT_TRUE(r.bytes.empty());
    EXPECT_EQ(r.metrics.prefix_count, 0u);
  }
}

TEST(Client, PlanValidation) {
  ExecutionPlan p;
  p.P = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.P = 1;
  p.split = SplitPlan{};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.strategy = Strategy::client_side;
  EXPECT_NO_THROW(p.validate());
  p.split.reset();
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_EQ(parse_strategy("server"), Strategy::server_side);
  EXPECT_EQ(parse_strategy("client_side"), Strategy::client_side);
  EXPECT_FALSE(parse_strategy("both"));
}

TEST(Merge, ConcatAndDedup) {
  const std::vector<std::string> streams = {"1\t<a/>\n4\t<b/>\n", "2\t<c/>\n", "9\t<d/>\n"};
  EXPECT_EQ(merge_results(streams, MergeRule::concat_in_order), "1\t<a/>\n4\t<b/>\n2\t<c/>\n9\t<d/>\n");
  const std::vector<std::string> overlap = {"3\t<x/>\n5\t<y/>\n", "1\t<w/>\n3\t<x/>\n", "5\t<y/>\n"};
  EXPECT_EQ(merge_results(overlap, MergeRule::dedup_sort), "1\t<w/>\n3\t<x/>\n5\t<y/>\n");
  EXPECT_EQ(merge_results({}, MergeRule::dedup_sort), "");
  EXPECT_THROW(merge_results({"oops\n"}, MergeRule::dedup_sort), ProtocolError);
}

TEST(Client, ByteCountersSeparateStrategies) {
  const auto ep = generated_server().endpoint();
  ParallelClient client(ep, "xmark", 4);
  const auto split = variant_plan(*find_variant("XM5(a)"), "xmark");
  const auto server = client.run(split_plan(Strategy::server_side, split, 4, "xmark")).metrics;
  const auto cl = client.run(split_plan(Strategy::client_side, split, 4, "xmark")).metrics;
  EXPECT_LT(server.request_bytes, 400u);
  EXPECT_GT(cl.suffix_request_bytes, 4 * cl.prefix_count);
  EXPECT_GT(cl.prefix_bytes, server.prefix_bytes);
}
