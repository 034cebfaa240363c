#include "xpar/node_store.hpp"

namespace xpar {

ValueIndex ValueIndex::build(const NodeTable& table) {
  ValueIndex idx;
  idx.db_name_ = table.db_name();
  for (Pre pre = 0; pre < table.size(); ++pre) {
    const auto& rec = table[pre];
    if (rec.kind == NodeKind::attribute) {
      idx.attributes_[rec.value].push_back(pre);
    } else if (rec.kind == NodeKind::text && !rec.value.empty()) {
      idx.texts_[rec.value].push_back(pre);
    }
  }
  return idx;
}

std::span<const Pre> ValueIndex::lookup(ValueKind kind, std::string_view value) const {
  const auto& postings = kind == ValueKind::attribute ? attributes_ : texts_;
  if (auto it = postings.find(std::string(value)); it != postings.end()) return it->second;
  return {};
}

}  // namespace xpar
