#pragma once

// Data partitioning: one absolute query becomes a prefix (run once), a
// relative suffix (run from every prefix result), and a merge rule.

#include <cstddef>
#include <string>
#include <vector>

#include "xpar/node_store.hpp"
#include "xpar/xpath.hpp"

namespace xpar {

enum class MergeRule { concat_in_order, dedup_sort };
enum class SplitKind { step_boundary, predicate_peel, descendant_pushdown };

std::string_view merge_rule_name(MergeRule rule);
std::string_view split_kind_name(SplitKind kind);

struct SplitPlan {
  QueryAst prefix;  // absolute
  QueryAst suffix;  // relative
  MergeRule merge = MergeRule::dedup_sort;
  SplitKind kind = SplitKind::step_boundary;

  /// `prefix = <prefix>, suffix = <suffix>`
  std::string to_string() const;
  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Every legal split point of an absolute query, shortest prefix first.
/// `merge` is preset to concat_in_order when the suffix only moves downward;
/// choose_merge refines it once the prefix result is known.
std::vector<SplitPlan> enumerate_splits(const QueryAst& ast);

/// P contiguous blocks, the first len % P one element longer.
struct PartitionSet {
  std::vector<PreList> partitions;
  std::size_t P = 1;
  std::string db_name;
};

/// Throws std::invalid_argument when P == 0.
PartitionSet block_partition(std::span<const Pre> seq, std::size_t P, std::string db_name = {});

/// Nodes pairwise subtree-disjoint (none is an ancestor of another). `seq` ascending.
bool subtree_disjoint(const NodeTable& table, std::span<const Pre> seq);
/// True when every step of `suffix` moves downward.
bool downward_only(const QueryAst& suffix);

/// concat_in_order iff the prefix nodes are subtree-disjoint and the suffix
/// only moves downward; dedup_sort otherwise.
MergeRule choose_merge(const SplitPlan& plan, bool prefix_disjoint);
MergeRule choose_merge(const SplitPlan& plan, const NodeTable& table, std::span<const Pre> prefix_result);

/// Default split: the deepest plan whose prefix yields at least 4 * P nodes;
/// ties go to the shorter prefix text. Falls back to the plan with the
/// largest prefix result. Throws std::invalid_argument when no split exists.
SplitPlan choose_default_split(const QueryAst& ast, const Database& db, std::size_t P);

}  // namespace xpar
