#pragma once

// Line protocol shared by the server and the parallel client.
//
// Requests, one per line:
//   OPEN <db> | ATTACH <session> | XPATH <q> | PREFIX <q> | EXPLAIN <q>
//   STOREPARTS <P> <q> | SUFFIXPART <i> <q> | SUFFIXPRE <pre...> ; <q>
//   OPTIMIZE on|off | QUIT
// Responses:
//   OK <n> [key=value ...]   followed by n lines
//   ERR <code> <message>
// Result lines are `PRE<TAB>serialized item`. PREFIX lines carry the PRE only.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xpar/node_store.hpp"
#include "xpar/splitter.hpp"

namespace xpar {

enum class Command { open, attach, xpath, prefix, explain, storeparts, suffixpart, suffixpre, optimize, quit };

std::string_view command_name(Command c);

struct Request {
  Command command = Command::quit;
  std::string argument;  // db name, session id, or query text
  std::uint64_t number = 0;  // P for STOREPARTS, i for SUFFIXPART
  bool flag = false;  // OPTIMIZE on
  PreList pres;  // SUFFIXPRE
};

/// Throws ProtocolError (unknown command, malformed arguments) or RangeError
/// (a PRE token that is not a non-negative integer).
Request parse_request(std::string_view line);

/// Request lines without the trailing newline.
std::string format_suffixpre(std::span<const Pre> pres, std::string_view query);

struct Status {
  bool ok = false;
  std::uint64_t count = 0;
  std::map<std::string, std::string> fields;  // OK annotations
  std::string code;  // ERR only
  std::string message;  // ERR only
};

std::string format_ok(std::uint64_t n, const std::map<std::string, std::string>& fields = {});
std::string format_err(std::string_view code, std::string_view message);
/// Throws ProtocolError on anything that is neither an OK nor an ERR line.
Status parse_status(std::string_view line);

/// Appends `PRE<TAB>xml\n` for every item.
void append_result_lines(const NodeTable& table, std::span<const Pre> items, std::string& out);
/// Leading PRE of a result line. Throws ProtocolError when malformed.
Pre result_line_pre(std::string_view line);

/// Calls fn for every whitespace-separated PRE in `text` without building a list.
/// Throws RangeError on a bad token.
void for_each_pre_token(std::string_view text, const std::function<void(Pre)>& fn);

/// `<root><part>p p ...</part>...</root>`: partitions stored server-side.
/// With no empty partitions, part i (1-based) sits at PRE 2i and its text at
/// 2i + 1 (document 0, root 1). Empty parts have no text node.
class TempPartitionDoc {
 public:
  static TempPartitionDoc build(const PartitionSet& parts);

  std::size_t part_count() const { return part_pres_.size(); }
  /// PRE of the i-th part element, 1 <= i <= part_count(). Throws RangeError.
  Pre part_pre(std::size_t i) const;
  /// Space-joined PRE values of part i (empty for an empty partition).
  std::string_view part_text(std::size_t i) const;
  PreList tokenize(std::size_t i) const;
  const NodeTable& table() const { return table_; }
  /// Total prefix count across parts.
  std::size_t item_count() const { return items_; }

 private:
  NodeTable table_;
  std::vector<Pre> part_pres_;
  std::size_t items_ = 0;
};

}  // namespace xpar
