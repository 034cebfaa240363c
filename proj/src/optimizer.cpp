#include "xpar/optimizer.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace xpar {

std::string_view rule_name(RewriteRule rule) {
  switch (rule) {
    case RewriteRule::descendant_to_child_chain: return "descendant_to_child_chain";
    case RewriteRule::value_index_inversion: return "value_index_inversion";
  }
  return "?";
}

namespace {

// Summary nodes that may hold the element results of a step; nullopt once a
// step can yield non-elements we cannot follow (attributes, text).
using SummarySet = std::set<std::int32_t>;

bool selects_in_summary(const PathSummary& s, std::int32_t id, const NodeTest& test) {
  if (id == 0) return test.kind == NodeTest::Kind::node || test.kind == NodeTest::Kind::document_node;
  switch (test.kind) {
    case NodeTest::Kind::name: return s.node(id).label == test.name;
    case NodeTest::Kind::wildcard:
    case NodeTest::Kind::element:
    case NodeTest::Kind::node: return true;
    default: return false;
  }
}

void collect_descendants(const PathSummary& s, std::int32_t id, std::vector<std::int32_t>& out) {
  for (const auto& [label, child] : s.node(id).children) {
    out.push_back(child);
    collect_descendants(s, child, out);
  }
}

std::optional<SummarySet> advance(const PathSummary& s, const SummarySet& ctx, const Step& step) {
  switch (step.test.kind) {
    case NodeTest::Kind::text:
    case NodeTest::Kind::attribute: return std::nullopt;
    default: break;
  }
  if (step.axis == Axis::attribute) return std::nullopt;
  std::vector<std::int32_t> reach;
  for (const auto c : ctx) {
    switch (step.axis) {
      case Axis::self: reach.push_back(c); break;
      case Axis::child:
        for (const auto& [label, child] : s.node(c).children) reach.push_back(child);
        break;
      case Axis::descendant_or_self:
        reach.push_back(c);
        [[fallthrough]];
      case Axis::descendant: collect_descendants(s, c, reach); break;
      case Axis::parent:
        if (c != 0) reach.push_back(s.node(c).parent);
        break;
      case Axis::ancestor:
        for (auto a = c; a != 0;) {
          a = s.node(a).parent;
          reach.push_back(a);
        }
        break;
      case Axis::following_sibling:
        if (c != 0) {
          for (const auto& [label, sib] : s.node(s.node(c).parent).children) reach.push_back(sib);
        }
        break;
      case Axis::attribute: return std::nullopt;
    }
  }
  SummarySet out;
  for (const auto id : reach) {
    if (selects_in_summary(s, id, step.test)) out.insert(id);
  }
  return out;
}

bool is_element_step(const Step& step) {
  return (step.axis == Axis::child || step.axis == Axis::descendant) &&
         (step.test.kind == NodeTest::Kind::name || step.test.kind == NodeTest::Kind::wildcard);
}

void flatten_conjuncts(const Expr& e, std::vector<Expr>& out) {
  if (e.kind == Expr::Kind::logical_and) {
    for (const auto& op : e.operands) flatten_conjuncts(op, out);
  } else {
    out.push_back(e);
  }
}

struct ValuePredicate {
  ValueKind kind;
  std::string name;  // attribute name, or child element name
  std::string literal;
};

// Matches `@a = "v"`, `./@a = "v"`, `c = "v"`, `./c = "v"` (either operand order).
std::optional<ValuePredicate> match_value_predicate(const Expr& e) {
  if (e.kind != Expr::Kind::compare || e.op != CompareOp::eq) return std::nullopt;
  const Expr* path = &e.operands[0];
  const Expr* lit = &e.operands[1];
  if (path->kind == Expr::Kind::string) std::swap(path, lit);
  if (path->kind != Expr::Kind::path || lit->kind != Expr::Kind::string) return std::nullopt;
  const auto& q = *path->path;
  if (q.head != QueryAst::Head::context) return std::nullopt;
  std::size_t i = 0;
  while (i < q.steps.size() && q.steps[i].axis == Axis::self && q.steps[i].test.kind == NodeTest::Kind::node &&
         q.steps[i].predicates.empty()) {
    ++i;
  }
  if (q.steps.size() != i + 1) return std::nullopt;
  const auto& step = q.steps[i];
  if (!step.predicates.empty() || step.test.kind != NodeTest::Kind::name) return std::nullopt;
  if (step.axis == Axis::attribute) return ValuePredicate{ValueKind::attribute, step.test.name, lit->text};
  if (step.axis == Axis::child) return ValuePredicate{ValueKind::text, step.test.name, lit->text};
  return std::nullopt;
}

// Every `name` child of the given summary nodes has no element children, so
// its string value is its single (merged) text child.
bool children_are_leaves(const PathSummary& s, const SummarySet& parents, const std::string& name) {
  for (const auto p : parents) {
    const auto& children = s.node(p).children;
    if (auto it = children.find(name); it != children.end() && !s.node(it->second).children.empty()) return false;
  }
  return true;
}

}  // namespace

QueryAst rule_descendant_to_child_chain(const QueryAst& ast, const PathSummary& summary,
                                        std::vector<std::string>* notes) {
  if (ast.head != QueryAst::Head::root) return ast;
  QueryAst out;
  out.head = ast.head;
  std::optional<SummarySet> ctx = SummarySet{0};
  for (const auto& step : ast.steps) {
    if (ctx && step.axis == Axis::descendant && step.test.kind == NodeTest::Kind::name &&
        !has_positional_predicate(step)) {
      std::set<std::vector<std::string>> chains;
      SummarySet targets;
      for (const auto c : *ctx) {
        std::vector<std::int32_t> desc;
        collect_descendants(summary, c, desc);
        for (const auto d : desc) {
          if (summary.node(d).label != step.test.name) continue;
          std::vector<std::string> chain;
          for (auto n = d; n != c; n = summary.node(n).parent) chain.push_back(summary.node(n).label);
          std::reverse(chain.begin(), chain.end());
          chains.insert(std::move(chain));
          targets.insert(d);
        }
      }
      if (chains.size() == 1) {
        const auto& chain = *chains.begin();
        for (std::size_t i = 0; i < chain.size(); ++i) {
          Step child{Axis::child, NodeTest::named(chain[i]), {}};
          if (i + 1 == chain.size()) child.predicates = step.predicates;
          out.steps.push_back(std::move(child));
        }
        if (notes) {
          std::string where;
          for (const auto t : targets) {
            if (!where.empty()) where += ", ";
            where += summary.path_of(t);
          }
          notes->push_back("'" + step.test.name + "' occurs below its context only at " + where);
        }
        ctx = std::move(targets);
        continue;
      }
    }
    out.steps.push_back(step);
    if (ctx) ctx = advance(summary, *ctx, step);
  }
  return out;
}

QueryAst rule_value_index_inversion(const QueryAst& ast, const ValueIndex& index, const PathSummary& summary,
                                    std::vector<std::string>* notes) {
  if (ast.head != QueryAst::Head::root) return ast;

  struct Candidate {
    std::size_t step;
    std::size_t conjunct;
    ValuePredicate pred;
    std::size_t hits;
  };
  std::optional<Candidate> best;
  std::vector<std::vector<Expr>> conjuncts(ast.steps.size());
  std::optional<SummarySet> ctx = SummarySet{0};

  for (std::size_t k = 0; k < ast.steps.size(); ++k) {
    const auto& step = ast.steps[k];
    if (!is_element_step(step) || has_positional_predicate(step)) break;
    if (ctx) ctx = advance(summary, *ctx, step);
    for (const auto& p : step.predicates) flatten_conjuncts(p, conjuncts[k]);
    for (std::size_t j = 0; j < conjuncts[k].size(); ++j) {
      auto vp = match_value_predicate(conjuncts[k][j]);
      if (!vp) continue;
      if (vp->kind == ValueKind::text && (vp->literal.empty() || !ctx || !children_are_leaves(summary, *ctx, vp->name))) {
        continue;
      }
      const auto hits = index.lookup(vp->kind, vp->literal).size();
      if (!best || hits < best->hits) best = Candidate{k, j, *vp, hits};
    }
  }
  if (!best) return ast;

  const auto k = best->step;
  const auto& target = ast.steps[k];
  QueryAst out;
  out.head = QueryAst::Head::index;
  out.index = IndexAccess{best->pred.kind, index.db_name(), best->pred.literal, std::nullopt};
  if (best->pred.kind == ValueKind::attribute) {
    out.index->attribute_name = best->pred.name;
  } else {
    out.steps.push_back(Step{Axis::parent, NodeTest::named(best->pred.name), {}});
  }

  // Guard: walk back from the target step to the document node.
  QueryAst guard;
  guard.head = QueryAst::Head::context;
  for (std::size_t j = k; j > 0; --j) {
    guard.steps.push_back(Step{ast.steps[j].axis == Axis::child ? Axis::parent : Axis::ancestor,
                               ast.steps[j - 1].test, ast.steps[j - 1].predicates});
  }
  if (ast.steps[0].axis == Axis::child) {
    guard.steps.push_back(Step{Axis::parent, NodeTest::document(), {}});
  }

  Step head_step{Axis::parent, target.test, {}};
  if (!guard.steps.empty()) head_step.predicates.push_back(Expr::of_path(std::move(guard)));
  for (std::size_t j = 0; j < conjuncts[k].size(); ++j) {
    if (j != best->conjunct) head_step.predicates.push_back(conjuncts[k][j]);
  }
  out.steps.push_back(std::move(head_step));
  out.steps.insert(out.steps.end(), ast.steps.begin() + static_cast<std::ptrdiff_t>(k) + 1, ast.steps.end());

  if (notes) {
    std::string note = best->pred.kind == ValueKind::attribute ? "attribute index: @" : "text index: ";
    note += best->pred.name + " = \"" + best->pred.literal + "\" has " + std::to_string(best->hits) + " hit(s)";
    if (best->pred.kind == ValueKind::text) note += "; '" + best->pred.name + "' is a leaf in the path summary";
    notes->push_back(std::move(note));
  }
  return out;
}

RewriteReport optimize(const QueryAst& ast, const PathSummary& summary, const ValueIndex& index) {
  RewriteReport report;
  report.input = ast;
  QueryAst cur = ast;
  for (int round = 0; round < 8; ++round) {
    bool changed = false;
    auto next = rule_descendant_to_child_chain(cur, summary, &report.notes);
    if (!(next == cur)) {
      report.applied.push_back(RewriteRule::descendant_to_child_chain);
      cur = std::move(next);
      changed = true;
    }
    next = rule_value_index_inversion(cur, index, summary, &report.notes);
    if (!(next == cur)) {
      report.applied.push_back(RewriteRule::value_index_inversion);
      cur = std::move(next);
      changed = true;
    }
    if (!changed) break;
  }
  report.output = std::move(cur);
  return report;
}

}  // namespace xpar
