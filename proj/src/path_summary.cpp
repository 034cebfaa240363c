#include <algorithm>

#include "xpar/node_store.hpp"

namespace xpar {

PathSummary PathSummary::build(const NodeTable& table) {
  PathSummary s;
  s.nodes_.emplace_back();  // document root
  s.node_of_.assign(table.size(), -1);
  if (table.size() == 0) return s;
  s.nodes_[0].count = 1;
  s.node_of_[0] = 0;
  for (Pre pre = 1; pre < table.size(); ++pre) {
    const auto& rec = table[pre];
    if (rec.kind != NodeKind::element) continue;
    const auto parent_node = s.node_of_[rec.parent];
    const auto label = table.name(pre);
    auto& children = s.nodes_[static_cast<std::size_t>(parent_node)].children;
    std::int32_t id;
    if (auto it = children.find(label); it != children.end()) {
      id = it->second;
    } else {
      id = static_cast<std::int32_t>(s.nodes_.size());
      // `children` may dangle after the push below.
      s.nodes_[static_cast<std::size_t>(parent_node)].children.emplace(std::string(label), id);
      Node n;
      n.label = std::string(label);
      n.parent = parent_node;
      s.nodes_.push_back(std::move(n));
    }
    ++s.nodes_[static_cast<std::size_t>(id)].count;
    s.node_of_[pre] = id;
  }
  return s;
}

std::string PathSummary::path_of(std::int32_t id) const {
  std::vector<std::string_view> labels;
  for (auto n = id; n > 0; n = node(n).parent) labels.push_back(node(n).label);
  std::string out;
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    if (!out.empty()) out += '/';
    out += *it;
  }
  return out;
}

std::map<std::string, std::uint64_t> PathSummary::paths() const {
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    out.emplace(path_of(static_cast<std::int32_t>(i)), nodes_[i].count);
  }
  return out;
}

std::vector<std::string> PathSummary::parent_labels(std::string_view label) const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].label != label) continue;
    const auto& parent = node(nodes_[i].parent).label;
    if (std::find(out.begin(), out.end(), parent) == out.end()) out.push_back(parent);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace xpar
