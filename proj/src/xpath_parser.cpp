#include <cctype>

#include "xpar/error.hpp"
#include "xpar/xpath.hpp"

namespace xpar {

Expr Expr::literal(double v) {
  Expr e;
  e.kind = Kind::number;
  e.number = v;
  return e;
}

Expr Expr::literal(std::string v) {
  Expr e;
  e.kind = Kind::string;
  e.text = std::move(v);
  return e;
}

Expr Expr::of_path(QueryAst p) {
  Expr e;
  e.kind = Kind::path;
  e.path = Box<QueryAst>(std::move(p));
  return e;
}

Expr Expr::call(std::string name, std::vector<Expr> args) {
  Expr e;
  e.kind = Kind::function;
  e.text = std::move(name);
  e.operands = std::move(args);
  return e;
}

Expr Expr::compare(CompareOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::compare;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr Expr::conjunction(std::vector<Expr> terms) {
  if (terms.size() == 1) return std::move(terms.front());
  Expr e;
  e.kind = Kind::logical_and;
  e.operands = std::move(terms);
  return e;
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::child: return "child";
    case Axis::descendant: return "descendant";
    case Axis::descendant_or_self: return "descendant-or-self";
    case Axis::self: return "self";
    case Axis::parent: return "parent";
    case Axis::ancestor: return "ancestor";
    case Axis::following_sibling: return "following-sibling";
    case Axis::attribute: return "attribute";
  }
  return "?";
}

bool is_reverse_axis(Axis axis) { return axis == Axis::parent || axis == Axis::ancestor; }

bool is_downward_axis(Axis axis) {
  switch (axis) {
    case Axis::child:
    case Axis::descendant:
    case Axis::descendant_or_self:
    case Axis::self:
    case Axis::attribute: return true;
    default: return false;
  }
}

namespace {

bool uses_context_position(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::function:
      if (e.text == "position" || e.text == "last") return true;
      break;
    case Expr::Kind::path:
      // Predicates inside a path have their own context.
      return false;
    default: break;
  }
  for (const auto& op : e.operands) {
    if (uses_context_position(op)) return true;
  }
  return false;
}

bool is_numeric_valued(const Expr& e) {
  if (e.kind == Expr::Kind::number) return true;
  return e.kind == Expr::Kind::function && (e.text == "count" || e.text == "position" || e.text == "last");
}

}  // namespace

bool is_positional(const Expr& predicate) {
  return is_numeric_valued(predicate) || uses_context_position(predicate);
}

bool has_positional_predicate(const Step& step) {
  for (const auto& p : step.predicates) {
    if (is_positional(p)) return true;
  }
  return false;
}

namespace {

enum class Tok {
  end,
  slash,
  double_slash,
  lbracket,
  rbracket,
  lparen,
  rparen,
  at,
  comma,
  colon_colon,
  dot,
  dot_dot,
  star,
  eq,
  lt,
  le,
  gt,
  ge,
  name,
  string,
  number,
};

struct Token {
  Tok type = Tok::end;
  std::string text;
  double number = 0;
  std::size_t pos = 0;
};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok t, std::size_t len) {
    out.push_back(Token{t, std::string(s.substr(i, len)), 0, i});
    i += len;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const char next = i + 1 < s.size() ? s[i + 1] : '\0';
    switch (c) {
      case '/': push(next == '/' ? Tok::double_slash : Tok::slash, next == '/' ? 2 : 1); continue;
      case '[': push(Tok::lbracket, 1); continue;
      case ']': push(Tok::rbracket, 1); continue;
      case '(': push(Tok::lparen, 1); continue;
      case ')': push(Tok::rparen, 1); continue;
      case '@': push(Tok::at, 1); continue;
      case ',': push(Tok::comma, 1); continue;
      case '*': push(Tok::star, 1); continue;
      case '=': push(Tok::eq, 1); continue;
      case '<': push(next == '=' ? Tok::le : Tok::lt, next == '=' ? 2 : 1); continue;
      case '>': push(next == '=' ? Tok::ge : Tok::gt, next == '=' ? 2 : 1); continue;
      case ':':
        if (next == ':') {
          push(Tok::colon_colon, 2);
          continue;
        }
        throw XPathSyntaxError(i, "unexpected ':'");
      case '!':
        if (next == '=') throw UnsupportedFeature(i, "operator '!='");
        throw XPathSyntaxError(i, "unexpected '!'");
      case '|': throw UnsupportedFeature(i, "union operator '|'");
      case '+':
      case '-': throw UnsupportedFeature(i, std::string("arithmetic operator '") + c + "'");
      case '$': throw UnsupportedFeature(i, "variable reference");
      case '"':
      case '\'': {
        const auto close = s.find(c, i + 1);
        if (close == std::string_view::npos) throw XPathSyntaxError(i, "unterminated string literal");
        out.push_back(Token{Tok::string, std::string(s.substr(i + 1, close - i - 1)), 0, i});
        i = close + 1;
        continue;
      }
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(next)))) {
      const auto start = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      const auto text = s.substr(start, i - start);
      out.push_back(Token{Tok::number, std::string(text), parse_number(text), start});
      continue;
    }
    if (c == '.') {
      push(next == '.' ? Tok::dot_dot : Tok::dot, next == '.' ? 2 : 1);
      continue;
    }
    if (name_start(c)) {
      const auto start = i;
      while (i < s.size() && name_char(s[i])) ++i;
      // QName prefix, e.g. db:attribute; "::" is an axis separator instead.
      if (i + 1 < s.size() && s[i] == ':' && s[i + 1] != ':' && name_start(s[i + 1])) {
        ++i;
        while (i < s.size() && name_char(s[i])) ++i;
      }
      out.push_back(Token{Tok::name, std::string(s.substr(start, i - start)), 0, start});
      continue;
    }
    throw XPathSyntaxError(i, std::string("unexpected character '") + c + "'");
  }
  out.push_back(Token{Tok::end, {}, 0, s.size()});
  return out;
}

class XPathParser {
 public:
  explicit XPathParser(std::string_view text) : toks_(tokenize(text)) {}

  QueryAst parse() {
    auto ast = parse_path();
    if (cur().type != Tok::end) fail("unexpected trailing input '" + cur().text + "'");
    return ast;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token take() { return toks_[pos_++]; }
  bool accept(Tok t) {
    if (cur().type != t) return false;
    ++pos_;
    return true;
  }
  void expect(Tok t, const char* what) {
    if (!accept(t)) fail(std::string("expected ") + what);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw XPathSyntaxError(cur().pos, msg); }

  static bool is_node_type(std::string_view n) {
    return n == "node" || n == "text" || n == "element" || n == "attribute" || n == "document-node";
  }

  bool starts_step() const {
    switch (cur().type) {
      case Tok::at:
      case Tok::dot:
      case Tok::dot_dot:
      case Tok::star: return true;
      case Tok::name:
        if (peek().type == Tok::lparen) return is_node_type(cur().text);
        return true;
      default: return false;
    }
  }

  QueryAst parse_path() {
    QueryAst ast;
    if (accept(Tok::slash)) {
      ast.head = QueryAst::Head::root;
      if (starts_step()) parse_relative(ast.steps, false);
      return ast;
    }
    if (accept(Tok::double_slash)) {
      ast.head = QueryAst::Head::root;
      parse_relative(ast.steps, true);
      return ast;
    }
    if (cur().type == Tok::name && peek().type == Tok::lparen &&
        (cur().text == "db:attribute" || cur().text == "db:text")) {
      ast.head = QueryAst::Head::index;
      ast.index = parse_index_access();
      while (cur().type == Tok::slash || cur().type == Tok::double_slash) {
        const bool dbl = take().type == Tok::double_slash;
        append_step(ast.steps, parse_step(), dbl);
      }
      return ast;
    }
    ast.head = QueryAst::Head::context;
    parse_relative(ast.steps, false);
    return ast;
  }

  IndexAccess parse_index_access() {
    IndexAccess ia;
    const auto fn = take().text;
    ia.kind = fn == "db:attribute" ? ValueKind::attribute : ValueKind::text;
    expect(Tok::lparen, "'('");
    std::vector<std::string> args;
    while (true) {
      if (cur().type != Tok::string) fail(fn + "() expects string literal arguments");
      args.push_back(take().text);
      if (accept(Tok::rparen)) break;
      expect(Tok::comma, "',' or ')'");
    }
    const std::size_t max_args = ia.kind == ValueKind::attribute ? 3 : 2;
    if (args.size() < 2 || args.size() > max_args) fail(fn + "() takes 2.." + std::to_string(max_args) + " arguments");
    ia.db = args[0];
    ia.value = args[1];
    if (args.size() == 3) ia.attribute_name = args[2];
    return ia;
  }

  void parse_relative(std::vector<Step>& steps, bool first_after_double_slash) {
    append_step(steps, parse_step(), first_after_double_slash);
    while (cur().type == Tok::slash || cur().type == Tok::double_slash) {
      const bool dbl = take().type == Tok::double_slash;
      append_step(steps, parse_step(), dbl);
    }
  }

  static void append_step(std::vector<Step>& steps, Step step, bool after_double_slash) {
    if (after_double_slash && !has_positional_predicate(step)) {
      if (step.axis == Axis::child) {
        step.axis = Axis::descendant;
        steps.push_back(std::move(step));
        return;
      }
      if (step.axis == Axis::self) {
        step.axis = Axis::descendant_or_self;
        steps.push_back(std::move(step));
        return;
      }
    }
    if (after_double_slash) steps.push_back(Step{Axis::descendant_or_self, NodeTest::any(), {}});
    steps.push_back(std::move(step));
  }

  Step parse_step() {
    Step step;
    if (accept(Tok::dot)) {
      step.axis = Axis::self;
      step.test = NodeTest::any();
      return step;
    }
    if (accept(Tok::dot_dot)) {
      step.axis = Axis::parent;
      step.test = NodeTest::any();
      return step;
    }
    if (accept(Tok::at)) {
      step.axis = Axis::attribute;
    } else if (cur().type == Tok::name && peek().type == Tok::colon_colon) {
      step.axis = parse_axis(take());
      take();
    }
    step.test = parse_node_test(step.axis);
    while (accept(Tok::lbracket)) {
      step.predicates.push_back(parse_or());
      expect(Tok::rbracket, "']'");
    }
    return step;
  }

  Axis parse_axis(const Token& t) const {
    const auto& n = t.text;
    if (n == "child") return Axis::child;
    if (n == "descendant") return Axis::descendant;
    if (n == "descendant-or-self") return Axis::descendant_or_self;
    if (n == "self") return Axis::self;
    if (n == "parent") return Axis::parent;
    if (n == "ancestor") return Axis::ancestor;
    if (n == "following-sibling") return Axis::following_sibling;
    if (n == "attribute") return Axis::attribute;
    if (n == "following" || n == "preceding" || n == "preceding-sibling" || n == "ancestor-or-self" ||
        n == "namespace") {
      throw UnsupportedFeature(t.pos, "axis '" + n + "'");
    }
    throw XPathSyntaxError(t.pos, "unknown axis '" + n + "'");
  }

  NodeTest parse_node_test(Axis axis) {
    const auto pos = cur().pos;
    NodeTest test;
    if (accept(Tok::star)) {
      test = NodeTest::star();
    } else if (cur().type == Tok::name && peek().type == Tok::lparen) {
      const auto n = take().text;
      take();
      if (!is_node_type(n)) {
        if (n == "comment" || n == "processing-instruction") throw UnsupportedFeature(pos, n + "() test");
        throw XPathSyntaxError(pos, "'" + n + "(' is not a node test");
      }
      if (cur().type != Tok::rparen) throw UnsupportedFeature(cur().pos, n + "() with arguments");
      take();
      if (n == "node") test.kind = NodeTest::Kind::node;
      else if (n == "text") test.kind = NodeTest::Kind::text;
      else if (n == "element") test.kind = NodeTest::Kind::element;
      else if (n == "attribute") test.kind = NodeTest::Kind::attribute;
      else test.kind = NodeTest::Kind::document_node;
    } else if (cur().type == Tok::name) {
      test = NodeTest::named(take().text);
    } else {
      fail("expected node test");
    }
    if (axis == Axis::attribute && test.kind != NodeTest::Kind::name && test.kind != NodeTest::Kind::wildcard) {
      throw XPathSyntaxError(pos, "attribute axis takes a name or '*' test");
    }
    return test;
  }

  bool at_keyword(std::string_view kw) const { return cur().type == Tok::name && cur().text == kw; }

  Expr parse_or() {
    auto lhs = parse_and();
    if (!at_keyword("or")) return lhs;
    Expr e;
    e.kind = Expr::Kind::logical_or;
    e.operands.push_back(std::move(lhs));
    while (at_keyword("or")) {
      take();
      e.operands.push_back(parse_and());
    }
    return e;
  }

  Expr parse_and() {
    auto lhs = parse_compare();
    if (!at_keyword("and")) return lhs;
    Expr e;
    e.kind = Expr::Kind::logical_and;
    e.operands.push_back(std::move(lhs));
    while (at_keyword("and")) {
      take();
      e.operands.push_back(parse_compare());
    }
    return e;
  }

  Expr parse_compare() {
    auto lhs = parse_primary();
    while (true) {
      CompareOp op;
      switch (cur().type) {
        case Tok::eq: op = CompareOp::eq; break;
        case Tok::lt: op = CompareOp::lt; break;
        case Tok::le: op = CompareOp::le; break;
        case Tok::gt: op = CompareOp::gt; break;
        case Tok::ge: op = CompareOp::ge; break;
        default: return lhs;
      }
      take();
      lhs = Expr::compare(op, std::move(lhs), parse_primary());
    }
  }

  Expr parse_primary() {
    Expr e = parse_primary_inner();
    if (at_keyword("div") || at_keyword("mod")) throw UnsupportedFeature(cur().pos, "operator '" + cur().text + "'");
    return e;
  }

  Expr parse_primary_inner() {
    const auto& t = cur();
    switch (t.type) {
      case Tok::string: return Expr::literal(take().text);
      case Tok::number: return Expr::literal(take().number);
      case Tok::lparen: {
        take();
        auto e = parse_or();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::name:
        if (peek().type == Tok::lparen && !is_node_type(t.text) && t.text != "db:attribute" && t.text != "db:text") {
          return parse_function();
        }
        break;
      default: break;
    }
    if (t.type == Tok::end || t.type == Tok::rbracket || t.type == Tok::rparen || t.type == Tok::comma) {
      fail("expected expression");
    }
    return Expr::of_path(parse_path());
  }

  Expr parse_function() {
    const auto tok = take();
    take();  // '('
    std::vector<Expr> args;
    if (!accept(Tok::rparen)) {
      while (true) {
        args.push_back(parse_or());
        if (accept(Tok::rparen)) break;
        expect(Tok::comma, "',' or ')'");
      }
    }
    const auto& n = tok.text;
    std::size_t min_args = 0, max_args = 0;
    if (n == "name") max_args = 1;
    else if (n == "count") min_args = max_args = 1;
    else if (n == "last" || n == "position") {
    } else {
      throw UnsupportedFeature(tok.pos, "function " + n + "()");
    }
    if (args.size() < min_args || args.size() > max_args) {
      throw XPathSyntaxError(tok.pos, "wrong number of arguments to " + n + "()");
    }
    return Expr::call(n, std::move(args));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse_xpath(std::string_view text) { return XPathParser(text).parse(); }

}  // namespace xpar
