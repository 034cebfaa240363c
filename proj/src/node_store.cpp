#include "xpar/node_store.hpp"

#include <stdexcept>

#include "xpar/error.hpp"

namespace xpar {

NameId NameTable::intern(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  const auto id = static_cast<NameId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<NameId> NameTable::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

const NodeRecord& NodeTable::open_pre(std::int64_t pre) const {
  if (pre < 0 || static_cast<std::uint64_t>(pre) >= records_.size()) {
    throw RangeError("PRE value " + std::to_string(pre) + " out of range [0, " +
                     std::to_string(records_.size()) + ")");
  }
  return records_[static_cast<std::size_t>(pre)];
}

Pre NodeTable::node_pre(const NodeRecord& node) const {
  const auto* base = records_.data();
  if (&node < base || &node >= base + records_.size()) {
    throw RangeError("node does not belong to database '" + db_name_ + "'");
  }
  return static_cast<Pre>(&node - base);
}

Pre NodeTable::children_begin(Pre pre) const {
  Pre q = pre + 1;
  const Pre end = subtree_end(pre);
  while (q < end && records_[q].kind == NodeKind::attribute) ++q;
  return q;
}

NodeTableBuilder::NodeTableBuilder() {
  NodeRecord doc;
  doc.kind = NodeKind::document;
  table_.records_.push_back(std::move(doc));
  open_.push_back(0);
}

void NodeTableBuilder::start_element(std::string_view name) {
  NodeRecord rec;
  rec.pre = static_cast<Pre>(table_.records_.size());
  rec.parent = open_.back();
  rec.kind = NodeKind::element;
  rec.name = table_.names_.intern(name);
  table_.records_.push_back(std::move(rec));
  open_.push_back(table_.records_.back().pre);
  children_started_ = false;
}

void NodeTableBuilder::attribute(std::string_view name, std::string_view value) {
  if (open_.size() < 2 || children_started_) {
    throw std::logic_error("attribute must directly follow its element");
  }
  NodeRecord rec;
  rec.pre = static_cast<Pre>(table_.records_.size());
  rec.parent = open_.back();
  rec.kind = NodeKind::attribute;
  rec.name = table_.names_.intern(name);
  rec.value = std::string(value);
  table_.records_.push_back(std::move(rec));
}

void NodeTableBuilder::text(std::string_view value) {
  if (value.empty()) return;
  auto& records = table_.records_;
  auto& last = records.back();
  if (children_started_ && last.kind == NodeKind::text && last.parent == open_.back()) {
    last.value.append(value);
    return;
  }
  NodeRecord rec;
  rec.pre = static_cast<Pre>(records.size());
  rec.parent = open_.back();
  rec.kind = NodeKind::text;
  rec.value = std::string(value);
  records.push_back(std::move(rec));
  children_started_ = true;
}

void NodeTableBuilder::end_element() {
  if (open_.size() < 2) throw std::logic_error("end_element without open element");
  const Pre pre = open_.back();
  open_.pop_back();
  table_.records_[pre].size = static_cast<Pre>(table_.records_.size() - pre);
  // The closed element is a child of its parent; a following text node must
  // not merge with an earlier sibling text.
  children_started_ = true;
}

NodeTable NodeTableBuilder::finish(std::string db_name) {
  if (open_.size() != 1) throw std::logic_error("unclosed elements at finish");
  table_.records_[0].size = static_cast<Pre>(table_.records_.size());
  table_.db_name_ = std::move(db_name);
  NodeTable out = std::move(table_);
  table_ = NodeTable{};
  return out;
}

namespace {

void escape_into(std::string_view value, bool attribute, std::string& out) {
  for (const char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += attribute ? ">" : "&gt;"; break;
      case '"': out += attribute ? "&quot;" : "\""; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
}

void serialize_subtree(const NodeTable& t, Pre pre, std::string& out) {
  const auto& rec = t[pre];
  switch (rec.kind) {
    case NodeKind::text:
      escape_into(rec.value, false, out);
      return;
    case NodeKind::attribute:
      out += t.name(pre);
      out += "=\"";
      escape_into(rec.value, true, out);
      out += '"';
      return;
    case NodeKind::document:
      for (Pre q = t.children_begin(pre); q < t.subtree_end(pre); q += t[q].size) serialize_subtree(t, q, out);
      return;
    case NodeKind::element: break;
  }
  out += '<';
  out += t.name(pre);
  const Pre end = t.subtree_end(pre);
  Pre q = pre + 1;
  for (; q < end && t[q].kind == NodeKind::attribute; ++q) {
    out += ' ';
    serialize_subtree(t, q, out);
  }
  if (q == end) {
    out += "/>";
    return;
  }
  out += '>';
  for (; q < end; q += t[q].size) serialize_subtree(t, q, out);
  out += "</";
  out += t.name(pre);
  out += '>';
}

}  // namespace

void serialize_node(const NodeTable& table, Pre pre, std::string& out) {
  table.open_pre(pre);
  serialize_subtree(table, pre, out);
}

std::string serialize_node(const NodeTable& table, Pre pre) {
  std::string out;
  serialize_node(table, pre, out);
  return out;
}

std::shared_ptr<const Database> Database::from_table(NodeTable table) {
  auto db = std::make_shared<Database>();
  db->summary = PathSummary::build(table);
  db->index = ValueIndex::build(table);
  db->table = std::move(table);
  return db;
}

std::shared_ptr<const Database> Database::load(std::string_view xml, std::string db_name) {
  return from_table(parse_document(xml, std::move(db_name)));
}

}  // namespace xpar
