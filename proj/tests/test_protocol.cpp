#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/fixtures.hpp"
#include "xpar/error.hpp"
#include "xpar/protocol.hpp"
#include "xpar/server.hpp"

using namespace xpar;

namespace {

Registry running_registry() {
  Registry r;
  r.add(fixtures::running_example());
  return r;
}

struct Reply {
  Status status;
  std::vector<std::string> lines;
};

Reply split_reply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Reply r;
  std::getline(in, line);
  r.status = parse_status(line);
  while (std::getline(in, line)) r.lines.push_back(line);
  EXPECT_EQ(r.lines.size(), r.status.ok ? r.status.count : 0u) << text;
  return r;
}

std::vector<std::string> pres_of(const Reply& r) {
  std::vector<std::string> out;
  for (const auto& l : r.lines) out.push_back(std::to_string(result_line_pre(l)));
  return out;
}

}  // namespace

TEST(Request, ParsesEveryCommand) {
  EXPECT_EQ(parse_request("OPEN xmark").argument, "xmark");
  EXPECT_EQ(parse_request("ATTACH 7").command, Command::attach);
  EXPECT_EQ(parse_request("XPATH /a/b").argument, "/a/b");
  EXPECT_EQ(parse_request("PREFIX /site//open_auction").command, Command::prefix);
  EXPECT_EQ(parse_request("EXPLAIN /a").command, Command::explain);
  const auto sp = parse_request("STOREPARTS 3 /site//open_auction");
  EXPECT_EQ(sp.number, 3u);
  EXPECT_EQ(sp.argument, "/site//open_auction");
  const auto part = parse_request("SUFFIXPART 2 bidder[last()]");
  EXPECT_EQ(part.command, Command::suffixpart);
  EXPECT_EQ(part.number, 2u);
  const auto pre = parse_request("SUFFIXPRE 2 5 42 ; bidder[last()]");
  EXPECT_EQ(pre.pres, (PreList{2, 5, 42}));
  EXPECT_EQ(pre.argument, "bidder[last()]");
  EXPECT_TRUE(parse_request("SUFFIXPRE ; x").pres.empty());
  EXPECT_TRUE(parse_request("OPTIMIZE on").flag);
  EXPECT_FALSE(parse_request("OPTIMIZE off").flag);
  EXPECT_EQ(parse_request("QUIT").command, Command::quit);
}

TEST(Request, Malformed) {
  for (const char* bad : {"", "FROB x", "OPEN", "STOREPARTS x /a", "STOREPARTS 3", "SUFFIXPRE 1 2 x", "OPTIMIZE maybe",
                          "SUFFIXPART -1 a"}) {
    EXPECT_THROW(parse_request(bad), Error) << bad;
  }
  EXPECT_THROW(parse_request("SUFFIXPRE 1 x2 ; a"), RangeError);
}

TEST(Request, SuffixPreFormatRoundTrips) {
  const PreList pres{2, 5, 42};
  const auto line = format_suffixpre(pres, "bidder[last()]");
  EXPECT_EQ(line, "SUFFIXPRE 2 5 42 ; bidder[last()]");
  EXPECT_EQ(parse_request(line).pres, pres);
}

TEST(StatusLine, FormatAndParse) {
  const auto ok = parse_status(format_ok(3, {{"disjoint", "1"}, {"count", "9"}}));
  EXPECT_TRUE(ok.ok);
  EXPECT_EQ(ok.count, 3u);
  EXPECT_EQ(ok.fields.at("disjoint"), "1");
  EXPECT_EQ(ok.fields.at("count"), "9");
  const auto err = parse_status(format_err("SYNTAX", "bad\nthing"));
  EXPECT_FALSE(err.ok);
  EXPECT_EQ(err.code, "SYNTAX");
  EXPECT_EQ(err.message.find('\n'), std::string::npos);
  EXPECT_THROW(parse_status("HELLO"), ProtocolError);
  EXPECT_THROW(parse_status("OK x"), ProtocolError);
}

TEST(ResultLines, AttributeAndElementItems) {
  const auto t = parse_document(R"(<a id="x&quot;1"><b>t
u</b></a>)", "t");
  std::string out;
  append_result_lines(t, PreList{2, 3}, out);
  EXPECT_EQ(out, "2\tid=\"x&quot;1\"\n3\t<b>t&#10;u</b>\n");
  EXPECT_EQ(result_line_pre("42\t<x/>"), 42u);
  EXPECT_THROW(result_line_pre("x\t<x/>"), ProtocolError);
}

TEST(TempPartitionDoc, RunningExampleLayout) {
  PartitionSet parts = block_partition(fixtures::running_example_pres(), 3);
  const auto tmp = TempPartitionDoc::build(parts);
  ASSERT_EQ(tmp.part_count(), 3u);
  EXPECT_EQ(tmp.part_text(1), "2 5");
  EXPECT_EQ(tmp.part_text(2), "42 81");
  EXPECT_EQ(tmp.part_text(3), "109 203");
  for (std::size_t i = 1; i <= 3; ++i) {
    EXPECT_EQ(tmp.part_pre(i), 2 * i);
    EXPECT_EQ(tmp.table()[static_cast<Pre>(2 * i + 1)].value, tmp.part_text(i));
  }
  EXPECT_EQ(serialize_node(tmp.table(), 1), "<root><part>2 5</part><part>42 81</part><part>109 203</part></root>");
  EXPECT_EQ(tmp.item_count(), 6u);
  EXPECT_THROW(tmp.part_pre(0), RangeError);
  EXPECT_THROW(tmp.part_pre(4), RangeError);
}

TEST(TempPartitionDoc, EmptyPrefixGivesEmptyParts) {
  const auto tmp = TempPartitionDoc::build(block_partition(PreList{}, 4));
  ASSERT_EQ(tmp.part_count(), 4u);
  for (std::size_t i = 1; i <= 4; ++i) {
    EXPECT_EQ(tmp.part_text(i), "");
    EXPECT_TRUE(tmp.tokenize(i).empty());
  }
}

TEST(TempPartitionDocProperty, TokenizeRoundTrips) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 500; ++k) {
    PreList seq(rng() % 200);
    Pre v = 0;
    for (auto& x : seq) x = v += 1 + static_cast<Pre>(rng() % 1000);
    const auto P = 1 + rng() % 16;
    const auto parts = block_partition(seq, P);
    const auto tmp = TempPartitionDoc::build(parts);
    ASSERT_EQ(tmp.part_count(), P);
    for (std::size_t i = 1; i <= P; ++i) {
      ASSERT_EQ(tmp.tokenize(i), parts.partitions[i - 1]);
      ASSERT_EQ(tmp.table().name(tmp.part_pre(i)), "part");
    }
  }
}

TEST(PreTokens, StreamsAndRejectsGarbage) {
  PreList got;
  for_each_pre_token("  1 22\t333\n", [&](Pre p) { got.push_back(p); });
  EXPECT_EQ(got, (PreList{1, 22, 333}));
  EXPECT_THROW(for_each_pre_token("1 -2", [](Pre) {}), RangeError);
  EXPECT_THROW(for_each_pre_token("99999999999", [](Pre) {}), RangeError);
}

class SessionTest : public ::testing::Test {
 protected:
  Registry registry = running_registry();
  SessionDirectory directory;
};

TEST_F(SessionTest, PrefixOnRunningExample) {
  Session s(registry, directory);
  EXPECT_TRUE(split_reply(s.handle("OPEN xmark")).status.ok);
  const auto r = split_reply(s.handle("PREFIX /site//open_auction"));
  EXPECT_EQ(r.lines, (std::vector<std::string>{"2", "5", "42", "81", "109", "203"}));
  EXPECT_EQ(r.status.fields.at("disjoint"), "1");
  const auto x = split_reply(s.handle("XPATH /site//open_auction"));
  EXPECT_EQ(pres_of(x), r.lines);
  const auto none = split_reply(s.handle("PREFIX /site/nothing"));
  EXPECT_TRUE(none.status.ok);
  EXPECT_EQ(none.status.count, 0u);
}

TEST_F(SessionTest, StorePartsAndSuffixPart) {
  Session s(registry, directory);
  s.handle("OPEN xmark");
  const auto st = split_reply(s.handle("STOREPARTS 3 /site//open_auction"));
  EXPECT_EQ(st.status.fields.at("count"), "6");
  const auto part2 = split_reply(s.handle("SUFFIXPART 2 bidder[last()]"));
  ASSERT_EQ(part2.lines.size(), 2u);
  EXPECT_EQ(part2.lines[0], "47\t<bidder>42.2</bidder>");
  EXPECT_EQ(part2.lines[1], "88\t<bidder>81.3</bidder>");
  const auto via_pre = split_reply(s.handle("SUFFIXPRE 42 81 ; bidder[last()]"));
  EXPECT_EQ(via_pre.lines, part2.lines);

  std::vector<std::string> all;
  for (int i = 1; i <= 3; ++i) {
    const auto r = split_reply(s.handle("SUFFIXPART " + std::to_string(i) + " bidder"));
    all.insert(all.end(), r.lines.begin(), r.lines.end());
  }
  EXPECT_EQ(all, split_reply(s.handle("SUFFIXPRE 2 5 42 81 109 203 ; bidder")).lines);
  EXPECT_EQ(split_reply(s.handle("SUFFIXPART 4 bidder")).status.code, "RANGE");
  EXPECT_EQ(split_reply(s.handle("SUFFIXPART 0 bidder")).status.code, "RANGE");
}

TEST_F(SessionTest, EmptyPartitionsAndLists) {
  Session s(registry, directory);
  s.handle("OPEN xmark");
  const auto st = split_reply(s.handle("STOREPARTS 4 /site/nothing"));
  EXPECT_EQ(st.status.fields.at("count"), "0");
  for (int i = 1; i <= 4; ++i) {
    const auto r = split_reply(s.handle("SUFFIXPART " + std::to_string(i) + " bidder"));
    EXPECT_TRUE(r.status.ok);
    EXPECT_EQ(r.status.count, 0u);
  }
  const auto r = split_reply(s.handle("SUFFIXPRE ; bidder"));
  EXPECT_TRUE(r.status.ok);
  EXPECT_EQ(r.status.count, 0u);
}

TEST_F(SessionTest, ErrorsKeepSessionAlive) {
  Session s(registry, directory);
  EXPECT_FALSE(split_reply(s.handle("XPATH /site")).status.ok);
  EXPECT_EQ(split_reply(s.handle("OPEN nope")).status.code, "NODB");
  s.handle("OPEN xmark");
  EXPECT_EQ(split_reply(s.handle("FROB")).status.code, "PROTOCOL");
  EXPECT_EQ(split_reply(s.handle("XPATH /site[")).status.code, "SYNTAX");
  EXPECT_EQ(split_reply(s.handle("XPATH /a | /b")).status.code, "UNSUPPORTED");
  EXPECT_EQ(split_reply(s.handle("XPATH /site[count(1) = 1]")).status.code, "EVAL");
  EXPECT_EQ(split_reply(s.handle("SUFFIXPART 1 bidder")).status.code, "NOPARTS");
  const auto bad = split_reply(s.handle("SUFFIXPRE 2 99999 ; bidder"));
  EXPECT_EQ(bad.status.code, "RANGE");
  EXPECT_NE(bad.status.message.find("99999"), std::string::npos);
  EXPECT_EQ(split_reply(s.handle("PREFIX site")).status.code, "PROTOCOL");
  EXPECT_EQ(split_reply(s.handle("ATTACH 999")).status.code, "NOSESSION");
  EXPECT_EQ(split_reply(s.handle("XPATH /site//open_auction")).status.count, 6u);
  EXPECT_FALSE(s.closed());
}

TEST_F(SessionTest, AttachSharesPartitions) {
  Session master(registry, directory);
  Session worker(registry, directory);
  master.handle("OPEN xmark");
  const auto att = split_reply(worker.handle("ATTACH " + std::to_string(master.id())));
  EXPECT_EQ(att.status.fields.at("db"), "xmark");
  master.handle("STOREPARTS 2 /site//open_auction");
  EXPECT_EQ(split_reply(worker.handle("SUFFIXPART 2 bidder[1]")).status.count, 3u);
}

TEST_F(SessionTest, OptimizeAndExplain) {
  Registry r;
  r.add(fixtures::xmark());
  Session s(r, directory);
  s.handle("OPEN xmark");
  const auto e = split_reply(s.handle("EXPLAIN /site//open_auction/bidder[last()]"));
  ASSERT_EQ(e.lines.size(), 1u);
  EXPECT_EQ(e.lines[0], "/site/open_auctions/open_auction/bidder[last()]");
  EXPECT_EQ(e.status.fields.at("rules"), "descendant_to_child_chain");
  const auto plain = s.handle("XPATH /site//open_auction/bidder[last()]");
  s.handle("OPTIMIZE on");
  EXPECT_EQ(s.handle("XPATH /site//open_auction/bidder[last()]"), plain);
  EXPECT_EQ(s.handle("PREFIX /site//incategory[@category=\"category52\"]"),
            [&] {
              s.handle("OPTIMIZE off");
              return s.handle("PREFIX /site//incategory[@category=\"category52\"]");
            }());
}

TEST_F(SessionTest, QuitClosesOnlyThatSession) {
  Session a(registry, directory);
  Session b(registry, directory);
  a.handle("OPEN xmark");
  b.handle("OPEN xmark");
  EXPECT_TRUE(split_reply(a.handle("QUIT")).status.ok);
  EXPECT_TRUE(a.closed());
  EXPECT_FALSE(b.closed());
  EXPECT_EQ(split_reply(b.handle("PREFIX /site//open_auction")).status.count, 6u);
}

TEST_F(SessionTest, GarbageNeverThrows) {
  std::mt19937_64 rng(52);
  const std::vector<std::string> words = {"OPEN", "XPATH", "PREFIX", "STOREPARTS", "SUFFIXPART", "SUFFIXPRE", "ATTACH",
                                          "EXPLAIN", "OPTIMIZE", "xmark", ";", "/", "[", "]", "//", "@", "0",
                                          "4294967296", "-1", "on", "\"", "(", "::", "site", "*"};
  Session s(registry, directory);
  for (int k = 0; k < 5000; ++k) {
    std::string line;
    if (k % 2) {
      const auto n = rng() % 80;
      for (std::size_t i = 0; i < n; ++i) {
        char c = static_cast<char>(rng() % 256);
        if (c == '\n') c = ' ';
        line += c;
      }
    } else {
      const auto n = 1 + rng() % 8;
      for (std::size_t i = 0; i < n; ++i) line += words[rng() % words.size()] + (rng() % 3 ? " " : "");
    }
    std::string out;
    ASSERT_NO_THROW(out = s.handle(line)) << line;
    ASSERT_FALSE(out.empty());
    ASSERT_EQ(out.back(), '\n');
    const auto first = out.substr(0, out.find('\n'));
    ASSERT_NO_THROW(parse_status(first)) << first;
    if (s.closed()) break;
  }
}
