#pragma once

// Benchmark queries: six XMark queries, three DBLP queries and their split
// variants. `{db}` in index calls stands for the database name.

#include <string>
#include <string_view>
#include <vector>

#include "xpar/generator.hpp"
#include "xpar/splitter.hpp"

namespace xpar {

struct SuiteQuery {
  std::string key;  // "XM3"
  Dataset dataset;
  std::string text;
};

struct SuiteVariant {
  std::string key;  // "XM3(a)"
  std::string base;  // "XM3"
  Dataset dataset;
  std::string prefix;
  std::string suffix;
};

const std::vector<SuiteQuery>& suite_queries();
const std::vector<SuiteVariant>& suite_variants();

/// nullptr when absent.
const SuiteQuery* find_query(std::string_view key);
const SuiteVariant* find_variant(std::string_view key);

/// Replaces every `{db}` with the name.
std::string instantiate(std::string_view text, std::string_view db_name);

std::string default_db_name(Dataset d);

/// Parsed split with the merge rule preset from the suffix shape.
SplitPlan variant_plan(const SuiteVariant& v, std::string_view db_name);

}  // namespace xpar
