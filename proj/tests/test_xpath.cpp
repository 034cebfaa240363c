#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <iterator>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "xpar/error.hpp"
#include "xpar/splitter.hpp"
#include "xpar/xpath.hpp"

using namespace xpar;

namespace {

Step step(Axis axis, NodeTest test, std::vector<Expr> preds = {}) { return Step{axis, std::move(test), std::move(preds)}; }

PreList eval_text(const std::string& q, const NodeTable& t, const PreList& ctx = {}) {
  return evaluate(parse_xpath(q), t, ctx);
}

bool strictly_ascending(const PreList& s) {
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k - 1] >= s[k]) return false;
  }
  return true;
}

PreList set_union(const PreList& a, const PreList& b) {
  PreList out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

TEST(XPathParse, DoubleSlashBecomesDescendantStep) {
  const auto ast = parse_xpath("/site//open_auction");
  EXPECT_EQ(ast.head, QueryAst::Head::root);
  ASSERT_EQ(ast.steps.size(), 2u);
  EXPECT_EQ(ast.steps[0], step(Axis::child, NodeTest::named("site")));
  EXPECT_EQ(ast.steps[1], step(Axis::descendant, NodeTest::named("open_auction")));
}

TEST(XPathParse, LastBidder) {
  const auto ast = parse_xpath("bidder[last()]");
  EXPECT_FALSE(ast.absolute());
  ASSERT_EQ(ast.steps.size(), 1u);
  EXPECT_EQ(ast.steps[0], step(Axis::child, NodeTest::named("bidder"), {Expr::call("last")}));
}

TEST(XPathParse, CountComparisonOnSelf) {
  const auto ast = parse_xpath("self::*[count(./following-sibling::book[1]/author) < count(./author)]");
  ASSERT_EQ(ast.steps.size(), 1u);
  EXPECT_EQ(ast.steps[0].axis, Axis::self);
  ASSERT_EQ(ast.steps[0].predicates.size(), 1u);
  EXPECT_EQ(ast.steps[0].predicates[0].kind, Expr::Kind::compare);
  EXPECT_EQ(ast.steps[0].predicates[0].op, CompareOp::lt);
}

TEST(XPathParse, PositionalDoubleSlashKeepsXPathMeaning) {
  const auto ast = parse_xpath("/a//b[1]");
  ASSERT_EQ(ast.steps.size(), 3u);
  EXPECT_EQ(ast.steps[1], step(Axis::descendant_or_self, NodeTest::any()));
  EXPECT_EQ(parse_xpath("/a//self::b").steps[1], step(Axis::descendant_or_self, NodeTest::named("b")));
}

TEST(XPathParse, Abbreviations) {
  const auto ast = parse_xpath("./../@id");
  ASSERT_EQ(ast.steps.size(), 3u);
  EXPECT_EQ(ast.steps[0], step(Axis::self, NodeTest::any()));
  EXPECT_EQ(ast.steps[1], step(Axis::parent, NodeTest::any()));
  EXPECT_EQ(ast.steps[2], step(Axis::attribute, NodeTest::named("id")));
  EXPECT_EQ(parse_xpath("/").steps.size(), 0u);
  EXPECT_EQ(parse_xpath("/").head, QueryAst::Head::root);
}

TEST(XPathParse, IndexHeads) {
  const auto a = parse_xpath(R"(db:attribute("xmark", "category52")/parent::incategory)");
  EXPECT_EQ(a.head, QueryAst::Head::index);
  ASSERT_TRUE(a.index);
  EXPECT_EQ(a.index->kind, ValueKind::attribute);
  EXPECT_EQ(a.index->value, "category52");
  EXPECT_FALSE(a.index->attribute_name);
  const auto t = parse_xpath(R"(db:text("xmark", "Creditcard"))");
  EXPECT_EQ(t.index->kind, ValueKind::text);
  EXPECT_TRUE(t.steps.empty());
}

TEST(XPathParse, SyntaxErrorsCarryPosition) {
  for (const char* bad : {"", "/a[", "/a]", "a/", "/a[1", "child::", "/a[@]", "/a[count()]", "/a/@x/",
                          "/a/attribute::node()"}) {
    EXPECT_THROW(parse_xpath(bad), XPathSyntaxError) << bad;
  }
  try {
    parse_xpath("/a/b[");
  } catch (const XPathSyntaxError& e) {
    EXPECT_GE(e.position(), 4u);
  }
}

TEST(XPathParse, OutOfSubsetIsUnsupported) {
  for (const char* q : {"/a | /b", "/a[x != 1]", "/a/preceding::b", "/a/following::b", "/a[contains(., 'x')]",
                        "/a[$v]", "/a/comment()", "/a[1 + 1]", "/a[2 div 1]"}) {
    EXPECT_THROW(parse_xpath(q), UnsupportedFeature) << q;
  }
}

TEST(XPathParse, SuiteQueriesRoundTrip) {
  for (const auto& q : suite_queries()) {
    const auto ast = parse_xpath(q.text);
    EXPECT_EQ(parse_xpath(unparse(ast)), ast) << q.key;
  }
  for (const auto& v : suite_variants()) {
    for (const auto& text : {v.prefix, v.suffix}) {
      const auto ast = parse_xpath(instantiate(text, "xmark"));
      EXPECT_EQ(parse_xpath(unparse(ast)), ast) << v.key;
    }
  }
}

TEST(XPathParseProperty, UnparseReparsesRandomQueries) {
  oracle::Rng rng(21);
  for (int k = 0; k < 2000; ++k) {
    const auto text = oracle::render(oracle::random_query(rng, 4));
    const auto ast = parse_xpath(text);
    ASSERT_EQ(parse_xpath(unparse(ast)), ast) << text << " -> " << unparse(ast);
  }
}

TEST(XPathEval, RootOnly) {
  const auto t = parse_document("<a/>", "t");
  EXPECT_EQ(eval_text("/", t), PreList{0});
}

TEST(XPathEval, BookWithMoreAuthorsThanNextBook) {
  const auto t = parse_document("<dblp><book><author/><author/></book><book><author/></book></dblp>", "t");
  const auto q = "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]";
  // The last book qualifies too: nothing follows it, so its left side counts 0.
  EXPECT_EQ(eval_text(q, t), (PreList{2, 5}));
  const auto first_only = "/dblp/book[following-sibling::book][count(./following-sibling::book[1]/author) < count(./author)]";
  EXPECT_EQ(eval_text(first_only, t), PreList{2});
}

TEST(XPathEval, RelativeNeedsContext) {
  const auto t = parse_document("<a><b/></a>", "t");
  EXPECT_EQ(eval_text("b", t, {1}), PreList{2});
  EXPECT_TRUE(eval_text("b", t, {}).empty());
}

TEST(XPathEval, ReverseAxisPositions) {
  const auto t = parse_document("<a><b><c><d/></c></b></a>", "t");
  EXPECT_EQ(eval_text("ancestor::*[1]", t, {4}), PreList{3});
  EXPECT_EQ(eval_text("ancestor::*[last()]", t, {4}), PreList{1});
  EXPECT_EQ(eval_text("ancestor::node()[last()]", t, {4}), PreList{0});
}

TEST(XPathEval, PositionsArePerContextNode) {
  const auto t = parse_document("<r><a><b/><b/></a><a><b/><b/><b/></a></r>", "t");
  EXPECT_EQ(eval_text("/r/a/b[last()]", t), (PreList{4, 8}));
  EXPECT_EQ(eval_text("/r/a/b[1]", t), (PreList{3, 6}));
  EXPECT_EQ(eval_text("/r//b[1]", t), (PreList{3, 6}));
}

TEST(XPathEval, IndexHeadsWithAndWithoutIndex) {
  const auto db = Database::load(R"(<s><i c="k1"/><i c="k2"/><i d="k1"/><p>k1</p></s>)", "t");
  const auto a = parse_xpath(R"(db:attribute("t", "k1"))");
  EXPECT_EQ(evaluate(a, *db), (PreList{3, 7}));
  EXPECT_EQ(evaluate(a, db->table, {}, nullptr), (PreList{3, 7}));
  EXPECT_EQ(evaluate(parse_xpath(R"(db:attribute("t", "k1", "c"))"), *db), PreList{3});
  EXPECT_EQ(evaluate(parse_xpath(R"(db:text("t", "k1")/parent::p)"), *db), PreList{8});
}

TEST(XPathEval, EvalErrors) {
  const auto t = parse_document("<a/>", "t");
  EXPECT_THROW(eval_text("/a[count(1) = 1]", t), EvalError);
}

TEST(XPathValues, Atomization) {
  const auto t = parse_document("<r><n>42</n><m>4<x>2</x></m><q>0</q><z> 1.5 </z><w>abc</w></r>", "t");
  EXPECT_EQ(number_value(t, 3), 42.0);
  EXPECT_EQ(number_value(t, 2), 42.0);
  EXPECT_EQ(string_value(t, 4), "42");
  EXPECT_EQ(number_value(t, 4), 42.0);
  EXPECT_EQ(number_value(t, 10), 1.5);
  EXPECT_TRUE(std::isnan(number_value(t, 12)));
  EXPECT_TRUE(eval_text("/r/q[. > 0]", t).empty());
  EXPECT_EQ(eval_text("/r/q[0.0 <= .]", t), PreList{8});
  EXPECT_TRUE(eval_text("/r/w[. > 0]", t).empty());
  EXPECT_TRUE(eval_text("/r/w[. <= 0]", t).empty());
}

TEST(XPathEval, Xm5SplitEquivalence) {
  const auto& db = *fixtures::xmark();
  const auto full = evaluate(parse_xpath("/site/open_auctions/open_auction/bidder/increase"), db);
  ASSERT_FALSE(full.empty());
  for (const char* key : {"XM5(a)", "XM5(b)"}) {
    const auto plan = variant_plan(*find_variant(key), "xmark");
    PreList concat;
    for (Pre p : evaluate(plan.prefix, db)) evaluate_from(plan.suffix, db.table, p, concat, &db.index);
    EXPECT_EQ(concat, full) << key;
  }
}

TEST(XPathOracle, RandomPairsAgree) {
  oracle::Rng rng(22);
  for (int k = 0; k < 1500; ++k) {
    const auto xml = oracle::random_doc(rng, 200);
    const auto doc = oracle::Doc::parse(xml);
    const auto table = parse_document(xml, "t");
    const auto q = oracle::random_query(rng, 4);
    const auto text = oracle::render(q);
    const auto got = evaluate(parse_xpath(text), table, {});
    ASSERT_EQ(fixtures::as_ints(got), oracle::evaluate(doc, q, {})) << text << "\n" << xml;
  }
}

TEST(XPathOracle, RelativeFromRandomContexts) {
  oracle::Rng rng(23);
  for (int k = 0; k < 800; ++k) {
    const auto xml = oracle::random_doc(rng, 120);
    const auto doc = oracle::Doc::parse(xml);
    const auto table = parse_document(xml, "t");
    const auto q = oracle::random_relative(rng, 3);
    const auto ast = parse_xpath(oracle::render(q));
    PreList ctx;
    std::vector<int> ictx;
    for (Pre p = 0; p < table.size(); ++p) {
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
        ctx.push_back(p);
        ictx.push_back(static_cast<int>(p));
      }
    }
    ASSERT_EQ(fixtures::as_ints(evaluate(ast, table, ctx)), oracle::evaluate(doc, q, ictx)) << oracle::render(q);
  }
}

TEST(XPathProperty, ResultsStrictlyAscending) {
  oracle::Rng rng(24);
  for (int k = 0; k < 500; ++k) {
    const auto table = parse_document(oracle::random_doc(rng, 200), "t");
    ASSERT_TRUE(strictly_ascending(evaluate(parse_xpath(oracle::render(oracle::random_query(rng, 4))), table, {})));
  }
}

TEST(XPathProperty, ContextDecomposition) {
  oracle::Rng rng(25);
  for (int k = 0; k < 500; ++k) {
    const auto table = parse_document(oracle::random_doc(rng, 150), "t");
    const auto ast = parse_xpath(oracle::render(oracle::random_relative(rng, 3)));
    PreList a, b, both;
    for (Pre p = 0; p < table.size(); ++p) {
      const int r = std::uniform_int_distribution<int>(0, 3)(rng);
      if (r == 0) a.push_back(p);
      if (r == 1) b.push_back(p);
      if (r <= 1) both.push_back(p);
    }
    ASSERT_EQ(evaluate(ast, table, both), set_union(evaluate(ast, table, a), evaluate(ast, table, b)));
  }
}

TEST(XPathProperty, PositionalIsolation) {
  oracle::Rng rng(26);
  int positional = 0;
  for (int k = 0; k < 800; ++k) {
    const auto table = parse_document(oracle::random_doc(rng, 150), "t");
    const auto ast = parse_xpath(oracle::render(oracle::random_relative(rng, 3)));
    if (std::none_of(ast.steps.begin(), ast.steps.end(), has_positional_predicate)) continue;
    ++positional;
    PreList ctx, one_by_one;
    for (Pre p = 0; p < table.size(); p += 3) {
      ctx.push_back(p);
      const auto r = evaluate(ast, table, PreList{p});
      one_by_one = set_union(one_by_one, r);
    }
    ASSERT_EQ(evaluate(ast, table, ctx), one_by_one);
  }
  EXPECT_GT(positional, 50);
}
