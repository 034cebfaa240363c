#include "net.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>

#include <cerrno>

namespace xpar::net {

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

bool LineReader::fill() {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > (std::size_t{1} << 20)) {
    buf_.erase(0, pos_);
    pos_ = 0;
  }
  char chunk[1 << 16];
  while (true) {
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buf_.append(chunk, static_cast<std::size_t>(n));
    bytes_ += static_cast<std::uint64_t>(n);
    return true;
  }
}

LineReader::Result LineReader::read_line(std::string& line) {
  std::size_t scanned = pos_;
  while (true) {
    const auto nl = buf_.find('\n', scanned);
    if (nl != std::string::npos) {
      auto end = nl;
      if (end > pos_ && buf_[end - 1] == '\r') --end;
      line.assign(buf_, pos_, end - pos_);
      pos_ = nl + 1;
      return Result::line;
    }
    if (buf_.size() - pos_ > max_line_) return Result::too_long;
    scanned = buf_.size();
    const auto offset = pos_;
    if (!fill()) return Result::eof;
    scanned -= offset - pos_;
  }
}

LineReader::Result LineReader::read_lines(std::uint64_t n, std::string& out) {
  while (n > 0) {
    const auto nl = buf_.find('\n', pos_);
    if (nl == std::string::npos) {
      out.append(buf_, pos_, std::string::npos);
      pos_ = buf_.size();
      if (!fill()) return Result::eof;
      continue;
    }
    out.append(buf_, pos_, nl + 1 - pos_);
    pos_ = nl + 1;
    --n;
  }
  return Result::line;
}

}  // namespace xpar::net
