#pragma once

// Experiment driver: for each query, times the original and every split
// variant per strategy and P, gating each timing on byte equality with the
// original's output.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "xpar/client.hpp"
#include "xpar/generator.hpp"

namespace xpar {

struct BenchOptions {
  std::vector<std::size_t> threads = {1, 2, 3, 6, 12};
  std::size_t repeats = 25;  // timed runs after one warm-up
  std::vector<Strategy> strategies = {Strategy::client_side, Strategy::server_side};
  bool optimize = false;
  /// Query or variant keys to run ("XM3", "XM3(c)"); empty runs all of the dataset.
  std::vector<std::string> keys;
};

struct BenchCell {
  std::string key;  // "XM3(c)", or "XM3" for the original
  std::string base;
  Strategy strategy = Strategy::sequential_original;
  std::size_t P = 1;
  RunMetrics metrics;  // medians over the timed runs
  std::vector<double> totals;  // every timed t_total
  double speedup = 0;  // t_o / t_p
  double load_balance = 0;  // NaN when undefined
  double increase_of_work = 0;  // NaN when undefined
  bool correct = true;
  std::string failure;
  std::uint64_t result_hash = 0;  // FNV-1a of the result bytes
  bool non_monotone = false;  // suffix phase slower than at the previous P
};

struct BenchReport {
  std::string dataset;
  std::string db_name;
  std::string server;
  std::size_t repeats = 0;
  std::vector<BenchCell> cells;

  bool all_correct() const;
};

std::uint64_t fnv1a(std::string_view bytes);

/// Runs against a server that has `db_name` loaded.
BenchReport run_suite(const Endpoint& endpoint, const std::string& db_name, Dataset dataset,
                      const BenchOptions& options, std::ostream* progress = nullptr);

/// Human table with the columns orig t_o, seq t_s, par t_p, t_o/t_p, prefix, final.
void write_table(const BenchReport& report, std::ostream& out);
/// One JSON object per cell per line.
void write_jsonl(const BenchReport& report, std::ostream& out);

}  // namespace xpar
