#pragma once

// Synthetic datasets shaped like XMark auction sites and DBLP bibliographies.
//
// Scale 1 matches the XMark factor-10 child counts (people 255000,
// open_auctions 120000, closed_auctions 97500, catgraph 10000,
// categories 10000) and a DBLP root with 6 million children. Every count
// is max(1, round(ratio * scale)), except categories, which never drop
// below 64.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace xpar {

enum class Dataset { xmark_like, dblp_like };

std::string_view dataset_name(Dataset d);
std::optional<Dataset> parse_dataset(std::string_view s);

struct GenSpec {
  Dataset dataset = Dataset::xmark_like;
  double scale = 0.01;
  std::uint64_t seed = 42;
};

/// Child counts of the XMark-like top-level sections at a scale.
struct XmarkCounts {
  std::uint64_t people, open_auctions, closed_auctions, catgraph, categories;
  std::uint64_t africa, asia, australia, europe, namerica, samerica;
  std::uint64_t items() const { return africa + asia + australia + europe + namerica + samerica; }
};
XmarkCounts xmark_counts(double scale);
std::uint64_t dblp_children(double scale);

/// Same spec, same bytes. Throws std::invalid_argument for scale <= 0.
std::string generate(const GenSpec& spec);
void generate(const GenSpec& spec, std::ostream& out);

/// Scale at which the dataset holds roughly `nodes` table nodes (all kinds).
double scale_for_nodes(Dataset dataset, std::uint64_t nodes);

}  // namespace xpar
