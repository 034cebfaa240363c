#include <cstdint>
#include <iterator>
#include <string>

#include "xpar/error.hpp"
#include "xpar/node_store.hpp"

namespace xpar {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' || u == ':' || u >= 0x80;
}

bool is_name_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return is_name_start(c) || (u >= '0' && u <= '9') || u == '-' || u == '.';
}

void append_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class XmlParser {
 public:
  XmlParser(std::string_view src, NodeTableBuilder& out) : src_(src), out_(out) {}

  void parse() {
    if (src_.starts_with("<?xml") && src_.size() > 5 && is_space(src_[5])) {
      const auto end = src_.find("?>");
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos_ = end + 2;
    }
    skip_space();
    if (at_end()) fail("no root element");
    if (peek() != '<') fail("text before root element");
    parse_element();
    skip_space();
    if (!at_end()) {
      if (peek() == '<') check_markup();
      fail("content after root element");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw XmlParseError(pos_, msg); }
  [[noreturn]] void unsupported(const std::string& what) const { throw UnsupportedFeature(pos_, what); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  void skip_space() {
    while (!at_end() && is_space(peek())) ++pos_;
  }
  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Rejects markup outside the subset with a distinct error.
  void check_markup() const {
    const auto rest = src_.substr(pos_);
    if (rest.starts_with("<!--")) unsupported("comment");
    if (rest.starts_with("<![CDATA[")) unsupported("CDATA section");
    if (rest.starts_with("<!")) unsupported("document type declaration");
    if (rest.starts_with("<?")) unsupported("processing instruction");
  }

  std::string_view parse_name() {
    const auto start = pos_;
    if (at_end() || !is_name_start(peek())) fail("expected name");
    while (!at_end() && is_name_char(peek())) ++pos_;
    const auto name = src_.substr(start, pos_ - start);
    if (name.find(':') != std::string_view::npos) {
      pos_ = start;
      unsupported("namespace-qualified name '" + std::string(name) + "'");
    }
    return name;
  }

  void parse_reference(std::string& out) {
    const auto start = pos_;
    ++pos_;  // '&'
    const auto semi = src_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 16) {
      pos_ = start;
      fail("unterminated entity reference");
    }
    const auto ref = src_.substr(pos_, semi - pos_);
    if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "amp") out += '&';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.starts_with('#')) {
      std::uint32_t cp = 0;
      const bool hex = ref.size() > 1 && ref[1] == 'x';
      const auto digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) {
        pos_ = start;
        fail("empty character reference");
      }
      for (const char c : digits) {
        int d = -1;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        if (d < 0 || cp > 0x10FFFF) {
          pos_ = start;
          fail("invalid character reference");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      }
      if (cp == 0 || cp > 0x10FFFF) {
        pos_ = start;
        fail("character reference out of range");
      }
      append_utf8(cp, out);
    } else {
      pos_ = start;
      unsupported("entity reference '&" + std::string(ref) + ";'");
    }
    pos_ = semi + 1;
  }

  void parse_element() {
    check_markup();
    expect('<');
    const auto name = parse_name();
    out_.start_element(name);
    std::vector<std::string_view> seen;
    while (true) {
      const bool had_space = !at_end() && is_space(peek());
      skip_space();
      if (at_end()) fail("unterminated start tag");
      if (peek() == '/') {
        ++pos_;
        expect('>');
        out_.end_element();
        return;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      if (!had_space) fail("expected whitespace before attribute");
      const auto attr_pos = pos_;
      const auto attr = parse_name();
      if (attr == "xmlns") {
        pos_ = attr_pos;
        unsupported("namespace declaration");
      }
      for (const auto s : seen) {
        if (s == attr) {
          pos_ = attr_pos;
          fail("duplicate attribute '" + std::string(attr) + "'");
        }
      }
      seen.push_back(attr);
      skip_space();
      expect('=');
      skip_space();
      if (at_end() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
      const char quote = src_[pos_++];
      std::string value;
      while (true) {
        if (at_end()) fail("unterminated attribute value");
        const char c = peek();
        if (c == quote) {
          ++pos_;
          break;
        }
        if (c == '<') fail("'<' in attribute value");
        if (c == '&') {
          parse_reference(value);
        } else {
          value += is_space(c) ? ' ' : c;
          ++pos_;
        }
      }
      out_.attribute(attr, value);
    }
    parse_content(name);
  }

  void parse_content(std::string_view name) {
    std::string text;
    while (true) {
      if (at_end()) fail("unterminated element '" + std::string(name) + "'");
      const char c = peek();
      if (c == '<') {
        flush_text(text);
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
          pos_ += 2;
          const auto close_pos = pos_;
          const auto close = parse_name();
          if (close != name) {
            pos_ = close_pos;
            fail("mismatched end tag '" + std::string(close) + "', expected '" + std::string(name) + "'");
          }
          skip_space();
          expect('>');
          out_.end_element();
          return;
        }
        parse_element();
      } else if (c == '&') {
        parse_reference(text);
      } else {
        auto stop = src_.find_first_of("<&", pos_);
        if (stop == std::string_view::npos) stop = src_.size();
        text.append(src_.substr(pos_, stop - pos_));
        pos_ = stop;
      }
    }
  }

  void flush_text(std::string& text) {
    bool blank = true;
    for (const char c : text) {
      if (!is_space(c)) {
        blank = false;
        break;
      }
    }
    if (!blank) out_.text(text);
    text.clear();
  }

  std::string_view src_;
  NodeTableBuilder& out_;
  std::size_t pos_ = 0;
};

}  // namespace

NodeTable parse_document(std::string_view xml, std::string db_name) {
  NodeTableBuilder builder;
  XmlParser(xml, builder).parse();
  return builder.finish(std::move(db_name));
}

NodeTable parse_document(std::istream& in, std::string db_name) {
  std::string xml{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_document(xml, std::move(db_name));
}

}  // namespace xpar
