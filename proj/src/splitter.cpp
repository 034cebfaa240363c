#include "xpar/splitter.hpp"

#include <algorithm>
#include <stdexcept>

namespace xpar {

std::string_view merge_rule_name(MergeRule rule) {
  return rule == MergeRule::concat_in_order ? "concat_in_order" : "dedup_sort";
}

std::string_view split_kind_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::step_boundary: return "step_boundary";
    case SplitKind::predicate_peel: return "predicate_peel";
    case SplitKind::descendant_pushdown: return "descendant_pushdown";
  }
  return "?";
}

std::string SplitPlan::to_string() const { return "prefix = " + unparse(prefix) + ", suffix = " + unparse(suffix); }

bool downward_only(const QueryAst& suffix) {
  if (suffix.head != QueryAst::Head::context) return false;
  return std::all_of(suffix.steps.begin(), suffix.steps.end(), [](const Step& s) { return is_downward_axis(s.axis); });
}

namespace {

bool selects_elements(const Step& s) {
  if (s.axis == Axis::attribute) return false;
  return s.test.kind == NodeTest::Kind::name || s.test.kind == NodeTest::Kind::wildcard ||
         s.test.kind == NodeTest::Kind::element;
}

SplitPlan make_plan(QueryAst prefix, QueryAst suffix, SplitKind kind) {
  SplitPlan plan;
  plan.prefix = std::move(prefix);
  plan.suffix = std::move(suffix);
  plan.kind = kind;
  plan.merge = downward_only(plan.suffix) ? MergeRule::concat_in_order : MergeRule::dedup_sort;
  return plan;
}

QueryAst head_of(const QueryAst& ast, std::size_t steps) {
  QueryAst q;
  q.head = ast.head;
  q.index = ast.index;
  q.steps.assign(ast.steps.begin(), ast.steps.begin() + static_cast<std::ptrdiff_t>(steps));
  return q;
}

QueryAst relative(std::vector<Step> steps) {
  QueryAst q;
  q.head = QueryAst::Head::context;
  q.steps = std::move(steps);
  return q;
}

}  // namespace

std::vector<SplitPlan> enumerate_splits(const QueryAst& ast) {
  if (!ast.absolute()) throw std::invalid_argument("only absolute queries can be split");
  const auto n = ast.steps.size();
  std::vector<SplitPlan> plans;
  auto tail = [&](std::size_t from) {
    return std::vector<Step>(ast.steps.begin() + static_cast<std::ptrdiff_t>(from), ast.steps.end());
  };

  // An index head is already a usable prefix on its own.
  const std::size_t first_boundary = ast.head == QueryAst::Head::index ? 0 : 1;
  for (std::size_t k = first_boundary; k < n; ++k) {
    plans.push_back(make_plan(head_of(ast, k), relative(tail(k)), SplitKind::step_boundary));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& step = ast.steps[i];
    if (step.predicates.empty() || has_positional_predicate(step)) continue;
    auto prefix = head_of(ast, i + 1);
    prefix.steps.back().predicates.clear();
    Step self{Axis::self, selects_elements(step) ? NodeTest::star() : NodeTest::any(), step.predicates};
    std::vector<Step> suffix{std::move(self)};
    for (auto& s : tail(i + 1)) suffix.push_back(std::move(s));
    plans.push_back(make_plan(std::move(prefix), relative(std::move(suffix)), SplitKind::predicate_peel));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& step = ast.steps[i];
    if (step.axis != Axis::descendant || has_positional_predicate(step)) continue;
    auto prefix = head_of(ast, i);
    prefix.steps.push_back(Step{Axis::child, selects_elements(step) ? NodeTest::star() : NodeTest::any(), {}});
    std::vector<Step> suffix{Step{Axis::descendant_or_self, step.test, step.predicates}};
    for (auto& s : tail(i + 1)) suffix.push_back(std::move(s));
    plans.push_back(make_plan(std::move(prefix), relative(std::move(suffix)), SplitKind::descendant_pushdown));
  }

  std::stable_sort(plans.begin(), plans.end(),
                   [](const SplitPlan& a, const SplitPlan& b) { return a.prefix.steps.size() < b.prefix.steps.size(); });
  return plans;
}

PartitionSet block_partition(std::span<const Pre> seq, std::size_t P, std::string db_name) {
  if (P == 0) throw std::invalid_argument("partition count must be >= 1");
  PartitionSet out;
  out.P = P;
  out.db_name = std::move(db_name);
  out.partitions.resize(P);
  const auto q = seq.size() / P;
  const auto r = seq.size() % P;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < P; ++i) {
    const auto len = q + (i < r ? 1 : 0);
    out.partitions[i].assign(seq.begin() + static_cast<std::ptrdiff_t>(pos),
                             seq.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

bool subtree_disjoint(const NodeTable& table, std::span<const Pre> seq) {
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq[i] < table.subtree_end(seq[i - 1])) return false;
  }
  return true;
}

MergeRule choose_merge(const SplitPlan& plan, bool prefix_disjoint) {
  return prefix_disjoint && downward_only(plan.suffix) ? MergeRule::concat_in_order : MergeRule::dedup_sort;
}

MergeRule choose_merge(const SplitPlan& plan, const NodeTable& table, std::span<const Pre> prefix_result) {
  return choose_merge(plan, subtree_disjoint(table, prefix_result));
}

SplitPlan choose_default_split(const QueryAst& ast, const Database& db, std::size_t P) {
  auto plans = enumerate_splits(ast);
  if (plans.empty()) throw std::invalid_argument("query has no split point: " + unparse(ast));
  struct Scored {
    std::size_t plan;
    std::size_t depth;
    std::size_t count;
    std::size_t text_len;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto count = evaluate(plans[i].prefix, db).size();
    scored.push_back({i, plans[i].prefix.steps.size(), count, unparse(plans[i].prefix).size()});
  }
  const auto threshold = 4 * P;
  const Scored* best = nullptr;
  for (const auto& s : scored) {
    if (s.count < threshold) continue;
    if (!best || s.depth > best->depth || (s.depth == best->depth && s.text_len < best->text_len)) best = &s;
  }
  if (!best) {
    for (const auto& s : scored) {
      if (!best || s.count > best->count || (s.count == best->count && s.text_len < best->text_len)) best = &s;
    }
  }
  auto plan = plans[best->plan];
  plan.merge = choose_merge(plan, db.table, evaluate(plan.prefix, db));
  return plan;
}

}  // namespace xpar
