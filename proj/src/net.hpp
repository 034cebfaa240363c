#pragma once

// Small POSIX socket helpers shared by server and client.

#include <cstdint>
#include <string>
#include <string_view>

namespace xpar::net {

void set_nodelay(int fd);
/// Sends everything; false when the peer is gone.
bool send_all(int fd, std::string_view data);

/// Buffered '\n'-delimited reader.
class LineReader {
 public:
  explicit LineReader(int fd, std::size_t max_line = std::size_t{1} << 30) : fd_(fd), max_line_(max_line) {}

  enum class Result { line, eof, too_long };
  /// Line without its terminator (a trailing '\r' is dropped too).
  Result read_line(std::string& line);
  /// Reads n more lines and appends them, terminators included, to `out`.
  Result read_lines(std::uint64_t n, std::string& out);

  std::uint64_t bytes_read() const { return bytes_; }

 private:
  bool fill();

  int fd_;
  std::size_t max_line_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::uint64_t bytes_ = 0;
};

}  // namespace xpar::net
