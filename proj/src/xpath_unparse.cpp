#include <charconv>
#include <cmath>

#include "xpar/xpath.hpp"

namespace xpar {

namespace {

void put_number(double v, std::string& out) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    out += std::to_string(static_cast<long long>(v));
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  out.append(buf, res.ptr);
}

void put_string(const std::string& s, std::string& out) {
  const char q = s.find('"') == std::string::npos ? '"' : '\'';
  out += q;
  out += s;
  out += q;
}

void put_expr(const Expr& e, std::string& out);

void put_test(const NodeTest& t, std::string& out) {
  switch (t.kind) {
    case NodeTest::Kind::name: out += t.name; break;
    case NodeTest::Kind::wildcard: out += '*'; break;
    case NodeTest::Kind::element: out += "element()"; break;
    case NodeTest::Kind::text: out += "text()"; break;
    case NodeTest::Kind::attribute: out += "attribute()"; break;
    case NodeTest::Kind::node: out += "node()"; break;
    case NodeTest::Kind::document_node: out += "document-node()"; break;
  }
}

void put_predicates(const Step& s, std::string& out) {
  for (const auto& p : s.predicates) {
    out += '[';
    put_expr(p, out);
    out += ']';
  }
}

void put_step(const Step& s, std::string& out) {
  const bool plain_node = s.test.kind == NodeTest::Kind::node && s.predicates.empty();
  if (s.axis == Axis::self && plain_node) {
    out += '.';
    return;
  }
  if (s.axis == Axis::parent && plain_node) {
    out += "..";
    return;
  }
  if (s.axis == Axis::attribute) {
    out += '@';
  } else if (s.axis != Axis::child) {
    out += axis_name(s.axis);
    out += "::";
  }
  put_test(s.test, out);
  put_predicates(s, out);
}

// `//name[p]` re-parses to a descendant step only when p is not positional.
bool abbreviates(const Step& s) { return s.axis == Axis::descendant && !has_positional_predicate(s); }

void put_abbreviated(const Step& s, std::string& out) {
  out += "//";
  put_test(s.test, out);
  put_predicates(s, out);
}

void put_operand(const Expr& e, std::string& out, bool parens) {
  if (parens) out += '(';
  put_expr(e, out);
  if (parens) out += ')';
}

std::string_view op_text(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "?";
}

void put_expr(const Expr& e, std::string& out) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::number: put_number(e.number, out); return;
    case K::string: put_string(e.text, out); return;
    case K::path: out += unparse(*e.path); return;
    case K::function:
      out += e.text;
      out += '(';
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += ", ";
        put_expr(e.operands[i], out);
      }
      out += ')';
      return;
    case K::compare: {
      const auto complex = [](const Expr& x) {
        return x.kind == K::logical_or || x.kind == K::logical_and || x.kind == K::compare;
      };
      put_operand(e.operands[0], out, complex(e.operands[0]) && e.operands[0].kind != K::compare);
      out += ' ';
      out += op_text(e.op);
      out += ' ';
      put_operand(e.operands[1], out, complex(e.operands[1]));
      return;
    }
    case K::logical_and:
    case K::logical_or: {
      const bool is_and = e.kind == K::logical_and;
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += is_and ? " and " : " or ";
        const auto& op = e.operands[i];
        // Same-kind nesting is only produced programmatically; keep it grouped.
        const bool parens = op.kind == K::logical_or || (is_and && op.kind == K::logical_and);
        put_operand(op, out, parens);
      }
      return;
    }
  }
}

}  // namespace

std::string unparse(const Expr& expr) {
  std::string out;
  put_expr(expr, out);
  return out;
}

std::string unparse(const QueryAst& ast) {
  std::string out;
  std::size_t first = 0;
  switch (ast.head) {
    case QueryAst::Head::root:
      if (ast.steps.empty()) return "/";
      break;
    case QueryAst::Head::index: {
      const auto& ia = *ast.index;
      out += ia.kind == ValueKind::attribute ? "db:attribute(" : "db:text(";
      put_string(ia.db, out);
      out += ", ";
      put_string(ia.value, out);
      if (ia.attribute_name) {
        out += ", ";
        put_string(*ia.attribute_name, out);
      }
      out += ')';
      break;
    }
    case QueryAst::Head::context:
      if (ast.steps.empty()) return out;
      put_step(ast.steps[0], out);
      first = 1;
      break;
  }
  for (std::size_t i = first; i < ast.steps.size(); ++i) {
    if (abbreviates(ast.steps[i])) {
      put_abbreviated(ast.steps[i], out);
    } else {
      out += '/';
      put_step(ast.steps[i], out);
    }
  }
  return out;
}

}  // namespace xpar
