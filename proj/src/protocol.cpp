#include "xpar/protocol.hpp"

#include <charconv>
#include <limits>

#include "xpar/error.hpp"

namespace xpar {

namespace {

constexpr std::string_view kSpace = " \t\r\n";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(kSpace) - b + 1);
}

std::pair<std::string_view, std::string_view> split_word(std::string_view s) {
  s = trim(s);
  const auto sp = s.find_first_of(kSpace);
  if (sp == std::string_view::npos) return {s, {}};
  return {s.substr(0, sp), trim(s.substr(sp))};
}

std::uint64_t parse_count(std::string_view tok, std::string_view what) {
  std::uint64_t v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (tok.empty() || ec != std::errc{} || p != end) throw ProtocolError("bad " + std::string(what) + " '" + std::string(tok) + "'");
  return v;
}

Pre parse_pre_token(std::string_view tok) {
  std::uint64_t v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || p != end || v >= std::numeric_limits<Pre>::max()) {
    throw RangeError("invalid PRE " + std::string(tok));
  }
  return static_cast<Pre>(v);
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string one_line(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::string_view command_name(Command c) {
  switch (c) {
    case Command::open: return "OPEN";
    case Command::attach: return "ATTACH";
    case Command::xpath: return "XPATH";
    case Command::prefix: return "PREFIX";
    case Command::explain: return "EXPLAIN";
    case Command::storeparts: return "STOREPARTS";
    case Command::suffixpart: return "SUFFIXPART";
    case Command::suffixpre: return "SUFFIXPRE";
    case Command::optimize: return "OPTIMIZE";
    case Command::quit: return "QUIT";
  }
  return "?";
}

Request parse_request(std::string_view line) {
  const auto [word, rest] = split_word(line);
  const auto cmd = upper(word);
  Request r;
  auto need_arg = [&, rest = rest] {
    if (rest.empty()) throw ProtocolError(cmd + " needs an argument");
    return std::string(rest);
  };
  if (cmd == "OPEN") {
    r.command = Command::open;
    r.argument = need_arg();
  } else if (cmd == "ATTACH") {
    r.command = Command::attach;
    r.argument = need_arg();
  } else if (cmd == "XPATH") {
    r.command = Command::xpath;
    r.argument = need_arg();
  } else if (cmd == "PREFIX") {
    r.command = Command::prefix;
    r.argument = need_arg();
  } else if (cmd == "EXPLAIN") {
    r.command = Command::explain;
    r.argument = need_arg();
  } else if (cmd == "STOREPARTS" || cmd == "SUFFIXPART") {
    r.command = cmd == "STOREPARTS" ? Command::storeparts : Command::suffixpart;
    const auto [num, query] = split_word(rest);
    r.number = parse_count(num, cmd == "STOREPARTS" ? "partition count" : "partition index");
    if (query.empty()) throw ProtocolError(cmd + " needs a query");
    r.argument = std::string(query);
  } else if (cmd == "SUFFIXPRE") {
    r.command = Command::suffixpre;
    const auto semi = rest.find(';');
    if (semi == std::string_view::npos) throw ProtocolError("SUFFIXPRE needs '; <query>'");
    for_each_pre_token(rest.substr(0, semi), [&](Pre p) { r.pres.push_back(p); });
    r.argument = std::string(trim(rest.substr(semi + 1)));
    if (r.argument.empty()) throw ProtocolError("SUFFIXPRE needs a query");
  } else if (cmd == "OPTIMIZE") {
    r.command = Command::optimize;
    const auto v = upper(rest);
    if (v != "ON" && v != "OFF") throw ProtocolError("OPTIMIZE takes on|off");
    r.flag = v == "ON";
  } else if (cmd == "QUIT") {
    r.command = Command::quit;
  } else {
    throw ProtocolError("unknown command '" + one_line(word.substr(0, 64)) + "'");
  }
  return r;
}

std::string format_suffixpre(std::span<const Pre> pres, std::string_view query) {
  std::string out = "SUFFIXPRE";
  out.reserve(out.size() + pres.size() * 8 + query.size() + 4);
  char buf[16];
  for (const Pre p : pres) {
    out += ' ';
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p);
    out.append(buf, end);
  }
  out += " ; ";
  out += query;
  return out;
}

std::string format_ok(std::uint64_t n, const std::map<std::string, std::string>& fields) {
  std::string out = "OK " + std::to_string(n);
  for (const auto& [k, v] : fields) out += " " + k + "=" + v;
  return out;
}

std::string format_err(std::string_view code, std::string_view message) {
  return "ERR " + std::string(code) + " " + one_line(message);
}

Status parse_status(std::string_view line) {
  const auto [word, rest] = split_word(line);
  Status st;
  if (word == "OK") {
    st.ok = true;
    auto [num, fields] = split_word(rest);
    st.count = parse_count(num, "result count");
    while (!fields.empty()) {
      const auto [kv, more] = split_word(fields);
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) throw ProtocolError("bad status field '" + std::string(kv) + "'");
      st.fields.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
      fields = more;
    }
  } else if (word == "ERR") {
    const auto [code, msg] = split_word(rest);
    st.code = std::string(code);
    st.message = std::string(msg);
  } else {
    throw ProtocolError("bad status line '" + one_line(line.substr(0, 80)) + "'");
  }
  return st;
}

void append_result_lines(const NodeTable& table, std::span<const Pre> items, std::string& out) {
  char buf[16];
  for (const Pre p : items) {
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p);
    out.append(buf, end);
    out += '\t';
    serialize_node(table, p, out);
    out += '\n';
  }
}

Pre result_line_pre(std::string_view line) {
  const auto tab = line.find('\t');
  const auto tok = line.substr(0, tab);
  std::uint64_t v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (tok.empty() || ec != std::errc{} || p != end || v >= std::numeric_limits<Pre>::max()) {
    throw ProtocolError("malformed result line");
  }
  return static_cast<Pre>(v);
}

void for_each_pre_token(std::string_view text, const std::function<void(Pre)>& fn) {
  std::size_t i = 0;
  while (true) {
    i = text.find_first_not_of(kSpace, i);
    if (i == std::string_view::npos) return;
    auto j = text.find_first_of(kSpace, i);
    if (j == std::string_view::npos) j = text.size();
    fn(parse_pre_token(text.substr(i, j - i)));
    i = j;
  }
}

TempPartitionDoc TempPartitionDoc::build(const PartitionSet& parts) {
  NodeTableBuilder b;
  b.start_element("root");
  std::string text;
  char buf[16];
  std::size_t items = 0;
  for (const auto& part : parts.partitions) {
    b.start_element("part");
    text.clear();
    for (const Pre p : part) {
      if (!text.empty()) text += ' ';
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p);
      text.append(buf, end);
    }
    if (!text.empty()) b.text(text);
    b.end_element();
    items += part.size();
  }
  b.end_element();
  TempPartitionDoc doc;
  doc.table_ = b.finish("tmp");
  doc.items_ = items;
  // Root is PRE 1; its children are the parts in order.
  const Pre root = 1;
  for (Pre p = doc.table_.children_begin(root); p < doc.table_.subtree_end(root); p = doc.table_.subtree_end(p)) {
    doc.part_pres_.push_back(p);
  }
  return doc;
}

Pre TempPartitionDoc::part_pre(std::size_t i) const {
  if (i < 1 || i > part_pres_.size()) {
    throw RangeError("partition index " + std::to_string(i) + " outside 1.." + std::to_string(part_pres_.size()));
  }
  return part_pres_[i - 1];
}

std::string_view TempPartitionDoc::part_text(std::size_t i) const {
  const Pre p = part_pre(i);
  if (table_[p].size < 2) return {};
  return table_[p + 1].value;
}

PreList TempPartitionDoc::tokenize(std::size_t i) const {
  PreList out;
  for_each_pre_token(part_text(i), [&](Pre p) { out.push_back(p); });
  return out;
}

}  // namespace xpar
