#pragma once

// Index-based rewriting of absolute queries.
//
// Two rules, applied to a fixpoint:
//  * descendant_to_child_chain: `//n` becomes a chain of child steps when the
//    path summary shows every `n` below the step's context is reached by the
//    same label chain.
//  * value_index_inversion: a step carrying `@a = "v"` or `c = "v"` is
//    rewritten to start from a value-index lookup; reverse axes then
//    re-establish the original root-to-step chain as a guard predicate.
//
// Only root-headed queries are rewritten.

#include <string>
#include <vector>

#include "xpar/node_store.hpp"
#include "xpar/xpath.hpp"

namespace xpar {

enum class RewriteRule { descendant_to_child_chain, value_index_inversion };

std::string_view rule_name(RewriteRule rule);

struct RewriteReport {
  QueryAst input;
  QueryAst output;
  std::vector<RewriteRule> applied;
  /// One note per applied rule naming the summary/index facts used.
  std::vector<std::string> notes;

  bool changed() const { return !applied.empty(); }
};

RewriteReport optimize(const QueryAst& ast, const PathSummary& summary, const ValueIndex& index);
inline RewriteReport optimize(const QueryAst& ast, const Database& db) { return optimize(ast, db.summary, db.index); }

/// Single passes of each rule. Return the input unchanged when inapplicable.
QueryAst rule_descendant_to_child_chain(const QueryAst& ast, const PathSummary& summary,
                                        std::vector<std::string>* notes = nullptr);
QueryAst rule_value_index_inversion(const QueryAst& ast, const ValueIndex& index, const PathSummary& summary,
                                    std::vector<std::string>* notes = nullptr);

}  // namespace xpar
