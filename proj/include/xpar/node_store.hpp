#pragma once

// PRE-ordered node table: the engine's in-memory database.
//
// Every node of a document occupies one slot, numbered in document order.
// An element's attributes come right after it and before its children, so
// a node's subtree (attributes included) is the PRE interval
// [pre, pre + size).

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xpar {

using Pre = std::uint32_t;
using PreList = std::vector<Pre>;
using NameId = std::uint32_t;

inline constexpr Pre kNoParent = UINT32_MAX;
inline constexpr NameId kNoName = UINT32_MAX;

enum class NodeKind : std::uint8_t { document, element, attribute, text };

struct NodeRecord {
  Pre pre = 0;
  Pre size = 1;
  Pre parent = kNoParent;
  NodeKind kind = NodeKind::element;
  NameId name = kNoName;
  std::string value;

  std::optional<Pre> parent_pre() const {
    if (parent == kNoParent) return std::nullopt;
    return parent;
  }
};

/// Case-sensitive name interning.
class NameTable {
 public:
  NameId intern(std::string_view name);
  std::optional<NameId> find(std::string_view name) const;
  std::string_view name(NameId id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NameId> ids_;
};

class NodeTable {
 public:
  NodeTable() = default;

  std::size_t size() const { return records_.size(); }
  const std::string& db_name() const { return db_name_; }
  const NameTable& names() const { return names_; }
  std::span<const NodeRecord> records() const { return records_; }

  /// Unchecked access.
  const NodeRecord& operator[](Pre pre) const { return records_[pre]; }

  /// Checked access; throws RangeError when pre is outside [0, N).
  const NodeRecord& open_pre(std::int64_t pre) const;
  /// Inverse of open_pre. The record must belong to this table.
  Pre node_pre(const NodeRecord& node) const;

  /// Name of an element or attribute; empty for other kinds.
  std::string_view name(Pre pre) const {
    const auto id = records_[pre].name;
    return id == kNoName ? std::string_view{} : names_.name(id);
  }

  NodeKind kind(Pre pre) const { return records_[pre].kind; }
  Pre subtree_end(Pre pre) const { return pre + records_[pre].size; }
  /// First PRE after the attributes of `pre`: where its children start.
  Pre children_begin(Pre pre) const;
  bool is_ancestor_or_self(Pre ancestor, Pre node) const {
    return ancestor <= node && node < subtree_end(ancestor);
  }

 private:
  friend class NodeTableBuilder;
  std::vector<NodeRecord> records_;
  NameTable names_;
  std::string db_name_;
};

/// Streams document events into a NodeTable. Adjacent text is merged.
class NodeTableBuilder {
 public:
  NodeTableBuilder();

  void start_element(std::string_view name);
  void attribute(std::string_view name, std::string_view value);
  void text(std::string_view value);
  void end_element();

  /// Closes the document node. Throws std::logic_error with open elements.
  NodeTable finish(std::string db_name);

 private:
  NodeTable table_;
  std::vector<Pre> open_;
  bool children_started_ = false;
};

/// Parses the supported XML subset. Throws XmlParseError or UnsupportedFeature.
NodeTable parse_document(std::string_view xml, std::string db_name);
NodeTable parse_document(std::istream& in, std::string db_name);

/// XML serialization of one node (attribute nodes as name="value").
/// Newlines and tabs in values are written as character references so
/// every serialized item fits on one line.
void serialize_node(const NodeTable& table, Pre pre, std::string& out);
std::string serialize_node(const NodeTable& table, Pre pre);

/// Rooted label paths of all elements.
class PathSummary {
 public:
  struct Node {
    std::string label;  // empty for the document root
    std::int32_t parent = -1;
    std::uint64_t count = 0;
    std::map<std::string, std::int32_t, std::less<>> children;
  };

  static PathSummary build(const NodeTable& table);

  /// Node 0 is the document root.
  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Slash-joined path from the root element, e.g. "site/regions/africa".
  std::string path_of(std::int32_t id) const;
  /// Every distinct rooted path with its occurrence count.
  std::map<std::string, std::uint64_t> paths() const;
  /// Labels under which `label` occurs ("" when it is the root element).
  std::vector<std::string> parent_labels(std::string_view label) const;
  /// Summary node of every element, indexed by PRE (-1 for non-elements).
  std::span<const std::int32_t> node_of() const { return node_of_; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::int32_t> node_of_;
};

enum class ValueKind : std::uint8_t { attribute, text };

/// Exact-match string value -> ascending PRE list of attribute / text nodes.
class ValueIndex {
 public:
  static ValueIndex build(const NodeTable& table);

  std::span<const Pre> lookup(ValueKind kind, std::string_view value) const;
  const std::string& db_name() const { return db_name_; }

 private:
  using Postings = std::unordered_map<std::string, PreList>;
  Postings attributes_;
  Postings texts_;
  std::string db_name_;
};

/// A loaded document with its summary and value index. Immutable.
struct Database {
  NodeTable table;
  PathSummary summary;
  ValueIndex index;

  static std::shared_ptr<const Database> from_table(NodeTable table);
  static std::shared_ptr<const Database> load(std::string_view xml, std::string db_name);
};

}  // namespace xpar
