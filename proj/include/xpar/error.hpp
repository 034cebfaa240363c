#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xpar {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed XML input. `offset` is the byte offset where parsing stopped.
class XmlParseError : public Error {
 public:
  XmlParseError(std::size_t offset, const std::string& what)
      : Error("xml parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Input uses a construct outside the supported subset (XML or XPath).
class UnsupportedFeature : public Error {
 public:
  UnsupportedFeature(std::size_t offset, const std::string& feature)
      : Error("unsupported feature at " + std::to_string(offset) + ": " + feature),
        offset_(offset),
        feature_(feature) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& feature() const noexcept { return feature_; }

 private:
  std::size_t offset_;
  std::string feature_;
};

class XPathSyntaxError : public Error {
 public:
  XPathSyntaxError(std::size_t position, const std::string& what)
      : Error("xpath syntax error at " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

/// PRE value outside [0, N).
class RangeError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace xpar
