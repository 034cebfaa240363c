#pragma once

// XPath subset: location paths over eight axes, name/kind tests, and
// predicates built from or/and, general comparisons, literals, relative
// paths and name()/last()/position()/count().
//
// `//` is normalized while parsing:
//   a//n[p]        -> a/descendant::n[p]           (p not positional)
//   a//self::n[p]  -> a/descendant-or-self::n[p]   (p not positional)
//   otherwise      -> a/descendant-or-self::node()/<step>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xpar/node_store.hpp"

namespace xpar {

/// Owning pointer with value semantics (deep copy, deep equality).
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return static_cast<bool>(ptr_); }
  const T& operator*() const { return *ptr_; }
  T& operator*() { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T* operator->() { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

enum class Axis {
  child,
  descendant,
  descendant_or_self,
  self,
  parent,
  ancestor,
  following_sibling,
  attribute,
};

std::string_view axis_name(Axis axis);
bool is_reverse_axis(Axis axis);
/// child, descendant, descendant-or-self, self, attribute.
bool is_downward_axis(Axis axis);

struct NodeTest {
  enum class Kind { name, wildcard, element, text, attribute, node, document_node };
  Kind kind = Kind::node;
  std::string name;  // Kind::name only

  static NodeTest named(std::string n) { return {Kind::name, std::move(n)}; }
  static NodeTest any() { return {Kind::node, {}}; }
  static NodeTest star() { return {Kind::wildcard, {}}; }
  static NodeTest document() { return {Kind::document_node, {}}; }

  friend bool operator==(const NodeTest&, const NodeTest&) = default;
};

enum class CompareOp { eq, lt, le, gt, ge };

struct QueryAst;

struct Expr {
  enum class Kind { logical_or, logical_and, compare, number, string, path, function };
  Kind kind = Kind::number;
  CompareOp op = CompareOp::eq;
  double number = 0;
  std::string text;            // string literal, or function name
  std::vector<Expr> operands;  // or / and / compare operands, function arguments
  Box<QueryAst> path;

  static Expr literal(double v);
  static Expr literal(std::string v);
  static Expr of_path(QueryAst p);
  static Expr call(std::string name, std::vector<Expr> args = {});
  static Expr compare(CompareOp op, Expr lhs, Expr rhs);
  static Expr conjunction(std::vector<Expr> terms);

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct Step {
  Axis axis = Axis::child;
  NodeTest test;
  std::vector<Expr> predicates;

  friend bool operator==(const Step&, const Step&) = default;
};

/// Index lookup used as a path head: db:attribute(db, value[, name]) or db:text(db, value).
struct IndexAccess {
  ValueKind kind = ValueKind::attribute;
  std::string db;
  std::string value;
  std::optional<std::string> attribute_name;

  friend bool operator==(const IndexAccess&, const IndexAccess&) = default;
};

struct QueryAst {
  enum class Head { context, root, index };
  Head head = Head::context;
  std::optional<IndexAccess> index;
  std::vector<Step> steps;

  bool absolute() const { return head != Head::context; }
  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

/// Throws XPathSyntaxError or UnsupportedFeature.
QueryAst parse_xpath(std::string_view text);
/// Canonical text; parse_xpath(unparse(a)) == a.
std::string unparse(const QueryAst& ast);
std::string unparse(const Expr& expr);

/// True if the predicate's truth depends on the context position or size:
/// numeric-valued predicates, and position()/last() at the predicate's own level.
bool is_positional(const Expr& predicate);
bool has_positional_predicate(const Step& step);

/// Concatenated descendant text (XPath 1.0 string-value).
std::string string_value(const NodeTable& table, Pre pre);
/// Decimal value of the trimmed string-value, NaN when not a number.
double number_value(const NodeTable& table, Pre pre);
double parse_number(std::string_view text);

/// Evaluates `ast`, returning a strictly ascending PRE list.
/// Absolute paths ignore `context`. An index head uses `index` when given,
/// and falls back to a scan of the table otherwise. Throws EvalError.
PreList evaluate(const QueryAst& ast, const NodeTable& table, std::span<const Pre> context,
                 const ValueIndex* index = nullptr);
PreList evaluate(const QueryAst& ast, const Database& db, std::span<const Pre> context = {});

/// Evaluates a relative query from one node and appends results in document order.
void evaluate_from(const QueryAst& ast, const NodeTable& table, Pre context, PreList& out,
                   const ValueIndex* index = nullptr);

}  // namespace xpar
