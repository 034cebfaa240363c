#include "xpar/query_suite.hpp"

namespace xpar {

const std::vector<SuiteQuery>& suite_queries() {
  static const std::vector<SuiteQuery> q = {
      {"XM1", Dataset::xmark_like,
       R"(/site//*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"])"},
      {"XM2", Dataset::xmark_like, R"(/site//incategory[./@category="category52"]/parent::item/@id)"},
      {"XM3", Dataset::xmark_like, R"(/site//open_auction/bidder[last()])"},
      {"XM4", Dataset::xmark_like,
       R"(/site/regions/*/item[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name])"},
      {"XM5", Dataset::xmark_like, R"(/site/open_auctions/open_auction/bidder/increase)"},
      {"XM6", Dataset::xmark_like,
       R"(/site/regions/*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem)"},
      {"DB1", Dataset::dblp_like, R"(/dblp/article/author)"},
      {"DB2", Dataset::dblp_like, R"(/dblp//title)"},
      {"DB3", Dataset::dblp_like, R"(/dblp/book[count(./following-sibling::book[1]/author) < count(./author)])"},
  };
  return q;
}

const std::vector<SuiteVariant>& suite_variants() {
  static const std::vector<SuiteVariant> v = {
      {"XM1(a)", "XM1", Dataset::xmark_like, R"(/site/*)",
       R"(descendant-or-self::*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"])"},
      {"XM2(a)", "XM2", Dataset::xmark_like, R"(/site//incategory)",
       R"(self::*[./@category="category52"]/parent::item/@id)"},
      {"XM2(b)", "XM2", Dataset::xmark_like, R"(/site/*)",
       R"(descendant-or-self::incategory[./@category="category52"]/parent::item/@id)"},
      {"XM2(c)", "XM2", Dataset::xmark_like, R"(db:attribute("{db}", "category52"))",
       R"(parent::incategory[ancestor::site/parent::document-node()]/parent::item/@id)"},
      {"XM3(a)", "XM3", Dataset::xmark_like, R"(/site//open_auction)", R"(bidder[last()])"},
      {"XM3(b)", "XM3", Dataset::xmark_like, R"(/site/*)", R"(descendant-or-self::open_auction/bidder[last()])"},
      {"XM3(c)", "XM3", Dataset::xmark_like, R"(/site/open_auctions/open_auction)", R"(bidder[last()])"},
      {"XM4(a)", "XM4", Dataset::xmark_like, R"(/site/regions/*)",
       R"(item[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name])"},
      {"XM4(b)", "XM4", Dataset::xmark_like, R"(/site/regions/*/item)",
       R"(self::*[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name])"},
      {"XM4(c)", "XM4", Dataset::xmark_like, R"(db:text("{db}", "Creditcard")/parent::payment)",
       R"(parent::item[parent::*/parent::regions/parent::site/parent::document-node()][location = "United States"][0.0 < quantity][description][name])"},
      {"XM5(a)", "XM5", Dataset::xmark_like, R"(/site/open_auctions/open_auction/bidder)", R"(increase)"},
      {"XM5(b)", "XM5", Dataset::xmark_like, R"(/site/open_auctions/open_auction)", R"(bidder/increase)"},
      {"XM6(a)", "XM6", Dataset::xmark_like, R"(/site/regions/*)",
       R"(self::*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem)"},
      {"XM6(b)", "XM6", Dataset::xmark_like, R"(/site/regions/*[name(.)="africa" or name(.)="asia"]/item)",
       R"(description/parlist/listitem)"},
      {"DB1(a)", "DB1", Dataset::dblp_like, R"(/dblp/article)", R"(author)"},
      {"DB2(a)", "DB2", Dataset::dblp_like, R"(/dblp/*)", R"(title)"},
      {"DB2(b)", "DB2", Dataset::dblp_like, R"(/dblp/*)", R"(descendant-or-self::*/title)"},
      {"DB3(a)", "DB3", Dataset::dblp_like, R"(/dblp/book)",
       R"(self::*[count(./following-sibling::book[1]/author) < count(./author)])"},
  };
  return v;
}

const SuiteQuery* find_query(std::string_view key) {
  for (const auto& q : suite_queries()) {
    if (q.key == key) return &q;
  }
  return nullptr;
}

const SuiteVariant* find_variant(std::string_view key) {
  for (const auto& v : suite_variants()) {
    if (v.key == key) return &v;
  }
  return nullptr;
}

std::string instantiate(std::string_view text, std::string_view db_name) {
  std::string out;
  constexpr std::string_view marker = "{db}";
  std::size_t i = 0;
  while (true) {
    const auto at = text.find(marker, i);
    out += text.substr(i, at - i);
    if (at == std::string_view::npos) return out;
    out += db_name;
    i = at + marker.size();
  }
}

std::string default_db_name(Dataset d) { return std::string(dataset_name(d)); }

SplitPlan variant_plan(const SuiteVariant& v, std::string_view db_name) {
  SplitPlan plan;
  plan.prefix = parse_xpath(instantiate(v.prefix, db_name));
  plan.suffix = parse_xpath(instantiate(v.suffix, db_name));
  plan.kind = SplitKind::step_boundary;
  if (!plan.suffix.steps.empty()) {
    const auto axis = plan.suffix.steps.front().axis;
    if (axis == Axis::self) plan.kind = SplitKind::predicate_peel;
    if (axis == Axis::descendant_or_self) plan.kind = SplitKind::descendant_pushdown;
  }
  plan.merge = downward_only(plan.suffix) ? MergeRule::concat_in_order : MergeRule::dedup_sort;
  return plan;
}

}  // namespace xpar
