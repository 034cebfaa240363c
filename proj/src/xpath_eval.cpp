#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <unordered_set>
#include <variant>

#include "xpar/error.hpp"
#include "xpar/xpath.hpp"

namespace xpar {

double parse_number(std::string_view text) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!text.empty() && is_ws(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_ws(text.back())) text.remove_suffix(1);
  std::size_t i = text.starts_with('-') ? 1 : 0;
  std::size_t digits = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i, ++digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i, ++digits;
  }
  if (digits == 0 || i != text.size()) return nan;
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::fixed);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return nan;
  return v;
}

std::string string_value(const NodeTable& table, Pre pre) {
  const auto& rec = table.open_pre(pre);
  if (rec.kind == NodeKind::text || rec.kind == NodeKind::attribute) return rec.value;
  std::string out;
  const Pre end = table.subtree_end(pre);
  for (Pre q = pre + 1; q < end; ++q) {
    if (table[q].kind == NodeKind::text) out += table[q].value;
  }
  return out;
}

double number_value(const NodeTable& table, Pre pre) { return parse_number(string_value(table, pre)); }

namespace {

using Value = std::variant<PreList, double, std::string, bool>;

CompareOp mirror(CompareOp op) {
  switch (op) {
    case CompareOp::lt: return CompareOp::gt;
    case CompareOp::le: return CompareOp::ge;
    case CompareOp::gt: return CompareOp::lt;
    case CompareOp::ge: return CompareOp::le;
    case CompareOp::eq: return CompareOp::eq;
  }
  return op;
}

bool compare_numbers(CompareOp op, double a, double b) {
  switch (op) {
    case CompareOp::eq: return a == b;
    case CompareOp::lt: return a < b;
    case CompareOp::le: return a <= b;
    case CompareOp::gt: return a > b;
    case CompareOp::ge: return a >= b;
  }
  return false;
}

class Evaluator {
 public:
  Evaluator(const NodeTable& table, const ValueIndex* index) : t_(table), index_(index) {}

  PreList run(const QueryAst& ast, std::span<const Pre> context) {
    PreList cur = initial(ast, context);
    for (const auto& step : ast.steps) {
      if (cur.empty()) break;
      cur = apply_step(cur, step);
    }
    return cur;
  }

 private:
  PreList initial(const QueryAst& ast, std::span<const Pre> context) {
    switch (ast.head) {
      case QueryAst::Head::root: return PreList{0};
      case QueryAst::Head::context: {
        PreList cur(context.begin(), context.end());
        for (const Pre p : cur) t_.open_pre(p);
        if (!std::is_sorted(cur.begin(), cur.end()) ||
            std::adjacent_find(cur.begin(), cur.end()) != cur.end()) {
          std::sort(cur.begin(), cur.end());
          cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
        }
        return cur;
      }
      case QueryAst::Head::index: return index_hits(*ast.index);
    }
    return {};
  }

  PreList index_hits(const IndexAccess& ia) const {
    if (ia.db != t_.db_name()) throw EvalError("unknown database '" + ia.db + "'");
    std::optional<NameId> name;
    if (ia.attribute_name) {
      name = t_.names().find(*ia.attribute_name);
      if (!name) return {};
    }
    const NodeKind kind = ia.kind == ValueKind::attribute ? NodeKind::attribute : NodeKind::text;
    auto keep = [&](Pre q) { return !name || t_[q].name == *name; };
    PreList out;
    if (index_ != nullptr) {
      for (const Pre q : index_->lookup(ia.kind, ia.value)) {
        if (keep(q)) out.push_back(q);
      }
      return out;
    }
    for (Pre q = 0; q < t_.size(); ++q) {
      if (t_[q].kind == kind && t_[q].value == ia.value && keep(q)) out.push_back(q);
    }
    return out;
  }

  struct ResolvedTest {
    NodeTest::Kind kind;
    NodeKind principal;
    NameId name;  // kNoName with Kind::name means nothing matches
  };

  ResolvedTest resolve(const Step& step) const {
    ResolvedTest r{step.test.kind, step.axis == Axis::attribute ? NodeKind::attribute : NodeKind::element, kNoName};
    if (r.kind == NodeTest::Kind::name) {
      if (auto id = t_.names().find(step.test.name)) r.name = *id;
    }
    return r;
  }

  bool matches(Pre q, const ResolvedTest& rt) const {
    const auto& rec = t_[q];
    switch (rt.kind) {
      case NodeTest::Kind::name: return rec.kind == rt.principal && rec.name == rt.name && rt.name != kNoName;
      case NodeTest::Kind::wildcard: return rec.kind == rt.principal;
      case NodeTest::Kind::element: return rec.kind == NodeKind::element;
      case NodeTest::Kind::text: return rec.kind == NodeKind::text;
      case NodeTest::Kind::attribute: return rec.kind == NodeKind::attribute;
      case NodeTest::Kind::node: return true;
      case NodeTest::Kind::document_node: return rec.kind == NodeKind::document;
    }
    return false;
  }

  // Visits the axis of `p` in axis order (reverse document order for reverse
  // axes). A bool-returning fn stops the walk by returning false.
  template <class Fn>
  void for_each_on_axis(Pre p, Axis axis, Fn&& fn) const {
    auto visit = [&](Pre q) {
      if constexpr (std::is_same_v<decltype(fn(q)), bool>) {
        return fn(q);
      } else {
        fn(q);
        return true;
      }
    };
    const auto& rec = t_[p];
    switch (axis) {
      case Axis::self: visit(p); return;
      case Axis::child:
        for (Pre q = t_.children_begin(p), end = t_.subtree_end(p); q < end; q += t_[q].size) {
          if (!visit(q)) return;
        }
        return;
      case Axis::descendant_or_self:
        if (!visit(p)) return;
        [[fallthrough]];
      case Axis::descendant:
        for (Pre q = p + 1, end = t_.subtree_end(p); q < end; ++q) {
          if (t_[q].kind != NodeKind::attribute && !visit(q)) return;
        }
        return;
      case Axis::attribute:
        for (Pre q = p + 1, end = t_.subtree_end(p); q < end && t_[q].kind == NodeKind::attribute; ++q) {
          if (!visit(q)) return;
        }
        return;
      case Axis::parent:
        if (rec.parent != kNoParent) visit(rec.parent);
        return;
      case Axis::ancestor:
        for (Pre a = rec.parent; a != kNoParent; a = t_[a].parent) {
          if (!visit(a)) return;
        }
        return;
      case Axis::following_sibling: {
        if (rec.kind == NodeKind::attribute || rec.parent == kNoParent) return;
        const Pre end = t_.subtree_end(rec.parent);
        for (Pre q = p + rec.size; q < end; q += t_[q].size) {
          if (!visit(q)) return;
        }
        return;
      }
    }
  }

  bool all_predicates(Pre q, const Step& step) {
    for (const auto& pred : step.predicates) {
      if (!predicate_true(pred, q, 0, 0)) return false;
    }
    return true;
  }

  PreList apply_step(const PreList& in, const Step& step) {
    const auto rt = resolve(step);
    PreList out;
    bool ordered = true;
    auto emit = [&](Pre q) {
      if (!out.empty() && q <= out.back()) ordered = false;
      out.push_back(q);
    };

    if (!has_positional_predicate(step)) {
      const bool descends = step.axis == Axis::descendant || step.axis == Axis::descendant_or_self;
      Pre covered_end = 0;
      for (const Pre p : in) {
        // Descendants of a node nested in an earlier context were already visited.
        if (descends && p < covered_end && t_[p].kind != NodeKind::attribute) continue;
        if (is_reverse_axis(step.axis)) {
          std::vector<Pre> found;
          for_each_on_axis(p, step.axis, [&](Pre q) {
            if (matches(q, rt) && all_predicates(q, step)) found.push_back(q);
          });
          for (auto it = found.rbegin(); it != found.rend(); ++it) emit(*it);
        } else {
          for_each_on_axis(p, step.axis, [&](Pre q) {
            if (matches(q, rt) && all_predicates(q, step)) emit(q);
          });
        }
        if (descends) covered_end = std::max(covered_end, t_.subtree_end(p));
      }
    } else {
      std::vector<Pre> cands, next;
      for (const Pre p : in) {
        cands.clear();
        // A leading [k] only ever keeps the k-th candidate: stop collecting there.
        const auto& first = step.predicates.front();
        const bool literal_position = first.kind == Expr::Kind::number && first.number >= 1 &&
                                      first.number == std::floor(first.number) && step.predicates.size() == 1;
        const auto stop_at = literal_position ? static_cast<std::size_t>(first.number) : SIZE_MAX;
        for_each_on_axis(p, step.axis, [&](Pre q) {
          if (matches(q, rt)) cands.push_back(q);
          return cands.size() < stop_at;
        });
        for (const auto& pred : step.predicates) {
          next.clear();
          const auto size = cands.size();
          for (std::size_t i = 0; i < size; ++i) {
            if (predicate_true(pred, cands[i], i + 1, size)) next.push_back(cands[i]);
          }
          cands.swap(next);
        }
        if (is_reverse_axis(step.axis)) {
          for (auto it = cands.rbegin(); it != cands.rend(); ++it) emit(*it);
        } else {
          for (const Pre q : cands) emit(q);
        }
      }
    }
    if (!ordered) {
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return out;
  }

  bool predicate_true(const Expr& pred, Pre node, std::size_t pos, std::size_t size) {
    const Value v = eval(pred, node, pos, size);
    if (const auto* n = std::get_if<double>(&v)) return *n == static_cast<double>(pos);
    return to_boolean(v);
  }

  static bool to_boolean(const Value& v) {
    struct {
      bool operator()(const PreList& n) const { return !n.empty(); }
      bool operator()(double d) const { return d != 0 && !std::isnan(d); }
      bool operator()(const std::string& s) const { return !s.empty(); }
      bool operator()(bool b) const { return b; }
    } visitor;
    return std::visit(visitor, v);
  }

  double to_number(const Value& v) const {
    if (const auto* n = std::get_if<PreList>(&v)) {
      return n->empty() ? std::numeric_limits<double>::quiet_NaN() : number_value(t_, n->front());
    }
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* s = std::get_if<std::string>(&v)) return parse_number(*s);
    return std::get<bool>(v) ? 1.0 : 0.0;
  }

  // Both operands atomic (not node-sets).
  bool compare_atomic(CompareOp op, const Value& a, const Value& b) const {
    if (op == CompareOp::eq) {
      if (std::holds_alternative<bool>(a) || std::holds_alternative<bool>(b)) {
        return to_boolean(a) == to_boolean(b);
      }
      if (std::holds_alternative<double>(a) || std::holds_alternative<double>(b)) {
        return to_number(a) == to_number(b);
      }
      return std::get<std::string>(a) == std::get<std::string>(b);
    }
    return compare_numbers(op, to_number(a), to_number(b));
  }

  bool compare(CompareOp op, const Value& a, const Value& b) const {
    const auto* na = std::get_if<PreList>(&a);
    const auto* nb = std::get_if<PreList>(&b);
    if (na && nb) {
      if (op == CompareOp::eq) {
        std::unordered_set<std::string> left;
        for (const Pre x : *na) left.insert(string_value(t_, x));
        for (const Pre y : *nb) {
          if (left.count(string_value(t_, y))) return true;
        }
        return false;
      }
      for (const Pre x : *na) {
        const double nx = number_value(t_, x);
        for (const Pre y : *nb) {
          if (compare_numbers(op, nx, number_value(t_, y))) return true;
        }
      }
      return false;
    }
    if (nb) return compare(mirror(op), b, a);
    if (na) {
      if (std::holds_alternative<bool>(b)) return compare_atomic(op, Value{!na->empty()}, b);
      for (const Pre x : *na) {
        if (compare_atomic(op, Value{string_value(t_, x)}, b)) return true;
      }
      return false;
    }
    return compare_atomic(op, a, b);
  }

  Value eval(const Expr& e, Pre node, std::size_t pos, std::size_t size) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::number: return e.number;
      case K::string: return e.text;
      case K::path: {
        const Pre ctx[1] = {node};
        return run(*e.path, ctx);
      }
      case K::logical_or:
        for (const auto& op : e.operands) {
          if (to_boolean(eval(op, node, pos, size))) return true;
        }
        return false;
      case K::logical_and:
        for (const auto& op : e.operands) {
          if (!to_boolean(eval(op, node, pos, size))) return false;
        }
        return true;
      case K::compare:
        return compare(e.op, eval(e.operands[0], node, pos, size), eval(e.operands[1], node, pos, size));
      case K::function: return call(e, node, pos, size);
    }
    throw EvalError("bad expression");
  }

  Value call(const Expr& e, Pre node, std::size_t pos, std::size_t size) {
    const auto& fn = e.text;
    if (fn == "position") return static_cast<double>(pos);
    if (fn == "last") return static_cast<double>(size);
    if (fn == "count") {
      const Value arg = eval(e.operands.at(0), node, pos, size);
      const auto* nodes = std::get_if<PreList>(&arg);
      if (!nodes) throw EvalError("count() requires a node-set argument");
      return static_cast<double>(nodes->size());
    }
    if (fn == "name") {
      Pre target = node;
      if (!e.operands.empty()) {
        const Value arg = eval(e.operands[0], node, pos, size);
        const auto* nodes = std::get_if<PreList>(&arg);
        if (!nodes) throw EvalError("name() requires a node-set argument");
        if (nodes->empty()) return std::string{};
        target = nodes->front();
      }
      return std::string(t_.name(target));
    }
    throw EvalError("unknown function " + fn + "()");
  }

  const NodeTable& t_;
  const ValueIndex* index_;
};

}  // namespace

PreList evaluate(const QueryAst& ast, const NodeTable& table, std::span<const Pre> context, const ValueIndex* index) {
  return Evaluator(table, index).run(ast, context);
}

PreList evaluate(const QueryAst& ast, const Database& db, std::span<const Pre> context) {
  return evaluate(ast, db.table, context, &db.index);
}

void evaluate_from(const QueryAst& ast, const NodeTable& table, Pre context, PreList& out, const ValueIndex* index) {
  const Pre ctx[1] = {context};
  const auto res = Evaluator(table, index).run(ast, ctx);
  out.insert(out.end(), res.begin(), res.end());
}

}  // namespace xpar
