#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xpar/generator.hpp"
#include "xpar/node_store.hpp"
#include "xpar/query_suite.hpp"
#include "xpar/xpath.hpp"

namespace fixtures {

inline xpar::PreList running_example_pres() { return {2, 5, 42, 81, 109, 203}; }

/// A site whose open_auction elements sit exactly at PREs 2, 5, 42, 81,
/// 109 and 203. Auction j holds j bidders (one at PRE 2), each with a text.
inline std::string running_example_xml() {
  std::string xml = "<site>";
  int next = 2;
  int j = 0;
  for (int target : {2, 5, 42, 81, 109, 203}) {
    while (next < target) {
      xml += "<x/>";
      ++next;
    }
    const int bidders = j == 0 ? 1 : j + 1;
    xml += "<open_auction>";
    for (int b = 0; b < bidders; ++b) xml += "<bidder>" + std::to_string(target) + "." + std::to_string(b) + "</bidder>";
    xml += "</open_auction>";
    next += 1 + 2 * bidders;
    ++j;
  }
  return xml + "</site>";
}

inline std::shared_ptr<const xpar::Database> running_example() {
  return xpar::Database::load(running_example_xml(), "xmark");
}

/// Generated datasets, built once per process.
inline std::shared_ptr<const xpar::Database> generated(xpar::Dataset d, std::uint64_t nodes = 20000) {
  xpar::GenSpec spec;
  spec.dataset = d;
  spec.scale = xpar::scale_for_nodes(d, nodes);
  spec.seed = 7;
  return xpar::Database::load(xpar::generate(spec), xpar::default_db_name(d));
}

inline const std::shared_ptr<const xpar::Database>& xmark() {
  static const auto db = generated(xpar::Dataset::xmark_like);
  return db;
}

inline const std::shared_ptr<const xpar::Database>& dblp() {
  static const auto db = generated(xpar::Dataset::dblp_like);
  return db;
}

inline const std::shared_ptr<const xpar::Database>& suite_db(xpar::Dataset d) {
  return d == xpar::Dataset::xmark_like ? xmark() : dblp();
}

inline std::vector<int> as_ints(const xpar::PreList& pres) { return {pres.begin(), pres.end()}; }

}  // namespace fixtures
