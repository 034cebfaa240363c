#include "xpar/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "xpar/node_store.hpp"

namespace xpar {

std::string_view dataset_name(Dataset d) { return d == Dataset::xmark_like ? "xmark" : "dblp"; }

std::optional<Dataset> parse_dataset(std::string_view s) {
  if (s == "xmark" || s == "xmark_like") return Dataset::xmark_like;
  if (s == "dblp" || s == "dblp_like") return Dataset::dblp_like;
  return std::nullopt;
}

namespace {

std::uint64_t scaled(double ratio, double scale) {
  const auto v = std::llround(ratio * scale);
  return v < 1 ? 1 : static_cast<std::uint64_t>(v);
}

// mt19937_64 with a fixed reduction, so output does not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  bool chance(unsigned percent) { return below(100) < percent; }
  template <class T, std::size_t N>
  const T& pick(const std::array<T, N>& a) {
    return a[below(N)];
  }

 private:
  std::mt19937_64 eng_;
};

constexpr std::array<std::string_view, 24> kWords = {
    "gold",   "silver", "vintage", "rare",   "lamp",    "clock",  "chair",  "table",
    "mirror", "stamp",  "coin",    "violin", "poster",  "camera", "radio",  "bicycle",
    "quiet",  "bright", "heavy",   "small",  "antique", "modern", "signed", "boxed"};
constexpr std::array<std::string_view, 8> kCountries = {"Germany", "Japan",  "France", "Brazil",
                                                        "Canada",  "Kenya", "India",  "Italy"};
constexpr std::array<std::string_view, 4> kPayments = {"Creditcard", "Money order", "Personal Check", "Cash"};
constexpr std::array<std::string_view, 6> kCities = {"Lyon", "Osaka", "Austin", "Porto", "Accra", "Perth"};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  ~Writer() { flush(); }

  Writer& open(std::string_view name) {
    buf_ += '<';
    buf_ += name;
    buf_ += '>';
    return *this;
  }
  // `<name a="v" ...` left open for attr(); finish with close_tag() or empty().
  Writer& start(std::string_view name) {
    buf_ += '<';
    buf_ += name;
    return *this;
  }
  Writer& attr(std::string_view name, std::string_view value) {
    buf_ += ' ';
    buf_ += name;
    buf_ += "=\"";
    buf_ += value;
    buf_ += '"';
    return *this;
  }
  Writer& close_tag() {
    buf_ += '>';
    return *this;
  }
  Writer& empty() {
    buf_ += "/>";
    return *this;
  }
  Writer& end(std::string_view name) {
    buf_ += "</";
    buf_ += name;
    buf_ += '>';
    return *this;
  }
  Writer& text(std::string_view t) {
    buf_ += t;
    return *this;
  }
  Writer& leaf(std::string_view name, std::string_view t) { return open(name).text(t).end(name); }
  Writer& newline() {
    buf_ += '\n';
    if (buf_.size() > (1u << 20)) flush();
    return *this;
  }
  void flush() {
    out_ << buf_;
    buf_.clear();
  }

 private:
  std::ostream& out_;
  std::string buf_;
};

std::string words(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  std::string out;
  const auto n = rng.between(lo, hi);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += rng.pick(kWords);
  }
  return out;
}

std::string ref(std::string_view prefix, std::uint64_t n) { return std::string(prefix) + std::to_string(n); }

// Draws are taken one per statement: operands of + are unsequenced.
std::string date(Rng& rng) {
  const auto m = rng.between(1, 12);
  const auto d = rng.between(1, 28);
  const auto y = rng.between(1998, 2001);
  return std::to_string(m) + "/" + std::to_string(d) + "/" + std::to_string(y);
}

std::string money(Rng& rng) {
  const auto whole = rng.between(1, 300);
  const auto cents = rng.between(10, 99);
  return std::to_string(whole) + "." + std::to_string(cents);
}

void description(Writer& w, Rng& rng) {
  w.open("description");
  if (rng.chance(50)) {
    w.open("parlist");
    const auto n = rng.between(1, 3);
    for (std::uint64_t i = 0; i < n; ++i) w.open("listitem").leaf("text", words(rng, 2, 6)).end("listitem");
    w.end("parlist");
  } else {
    w.leaf("text", words(rng, 3, 10));
  }
  w.end("description");
}

void annotation(Writer& w, Rng& rng, const XmarkCounts& c) {
  w.open("annotation");
  w.start("author").attr("person", ref("person", rng.below(c.people))).empty();
  description(w, rng);
  w.leaf("happiness", std::to_string(rng.between(1, 10)));
  w.end("annotation");
}

void xmark(Writer& w, Rng& rng, double scale) {
  const auto c = xmark_counts(scale);
  w.open("site").newline();

  w.open("regions").newline();
  const std::array<std::pair<std::string_view, std::uint64_t>, 6> regions = {{{"africa", c.africa},
                                                                             {"asia", c.asia},
                                                                             {"australia", c.australia},
                                                                             {"europe", c.europe},
                                                                             {"namerica", c.namerica},
                                                                             {"samerica", c.samerica}}};
  std::uint64_t item_id = 0;
  for (const auto& [region, count] : regions) {
    w.open(region).newline();
    for (std::uint64_t i = 0; i < count; ++i) {
      w.start("item").attr("id", ref("item", item_id++));
      if (rng.chance(10)) w.attr("featured", "yes");
      w.close_tag();
      w.leaf("location", rng.chance(75) ? std::string_view("United States") : rng.pick(kCountries));
      w.leaf("quantity", std::to_string(rng.between(0, 3)));
      w.leaf("name", words(rng, 1, 3));
      w.leaf("payment", rng.pick(kPayments));
      description(w, rng);
      w.leaf("shipping", rng.chance(50) ? "Will ship internationally" : "Buyer pays fixed shipping charges");
      const auto cats = rng.between(1, 3);
      for (std::uint64_t k = 0; k < cats; ++k) {
        w.start("incategory").attr("category", ref("category", rng.below(c.categories))).empty();
      }
      w.open("mailbox");
      const auto mails = rng.between(0, 2);
      for (std::uint64_t k = 0; k < mails; ++k) {
        w.open("mail").leaf("from", words(rng, 1, 2)).leaf("to", words(rng, 1, 2)).leaf("date", date(rng));
        w.leaf("text", words(rng, 2, 8)).end("mail");
      }
      w.end("mailbox");
      w.end("item").newline();
    }
    w.end(region).newline();
  }
  w.end("regions").newline();

  w.open("people").newline();
  for (std::uint64_t i = 0; i < c.people; ++i) {
    w.start("person").attr("id", ref("person", i)).close_tag();
    const auto name = words(rng, 2, 2);
    w.leaf("name", name);
    w.leaf("emailaddress", "mailto:person" + std::to_string(i) + "@example.com");
    if (rng.chance(50)) {
      const auto cc = rng.between(1, 99);
      const auto number = rng.between(1000000, 9999999);
      w.leaf("phone", "+" + std::to_string(cc) + " " + std::to_string(number));
    }
    if (rng.chance(60)) {
      const auto house = rng.between(1, 99);
      w.open("address")
          .leaf("street", std::to_string(house) + " " + std::string(rng.pick(kWords)) + " St")
          .leaf("city", rng.pick(kCities))
          .leaf("country", rng.chance(75) ? std::string_view("United States") : rng.pick(kCountries))
          .leaf("zipcode", std::to_string(rng.between(10000, 99999)))
          .end("address");
    }
    if (rng.chance(50)) {
      w.start("profile").attr("income", money(rng)).close_tag();
      const auto interests = rng.between(0, 3);
      for (std::uint64_t k = 0; k < interests; ++k) {
        w.start("interest").attr("category", ref("category", rng.below(c.categories))).empty();
      }
      w.leaf("age", std::to_string(rng.between(18, 80)));
      w.end("profile");
    }
    w.end("person").newline();
  }
  w.end("people").newline();

  w.open("open_auctions").newline();
  for (std::uint64_t i = 0; i < c.open_auctions; ++i) {
    w.start("open_auction").attr("id", ref("open_auction", i)).close_tag();
    w.leaf("initial", money(rng));
    if (rng.chance(40)) w.leaf("reserve", money(rng));
    const auto bidders = rng.between(0, 6);
    for (std::uint64_t k = 0; k < bidders; ++k) {
      w.open("bidder").leaf("date", date(rng)).leaf("time", std::to_string(rng.between(0, 23)) + ":00:00");
      w.start("personref").attr("person", ref("person", rng.below(c.people))).empty();
      w.leaf("increase", money(rng)).end("bidder");
    }
    w.leaf("current", money(rng));
    w.start("itemref").attr("item", ref("item", rng.below(c.items()))).empty();
    w.start("seller").attr("person", ref("person", rng.below(c.people))).empty();
    annotation(w, rng, c);
    w.leaf("quantity", std::to_string(rng.between(1, 3)));
    w.leaf("type", rng.chance(70) ? "Regular" : "Featured");
    w.open("interval").leaf("start", date(rng)).leaf("end", date(rng)).end("interval");
    w.end("open_auction").newline();
  }
  w.end("open_auctions").newline();

  w.open("closed_auctions").newline();
  for (std::uint64_t i = 0; i < c.closed_auctions; ++i) {
    w.open("closed_auction");
    w.start("seller").attr("person", ref("person", rng.below(c.people))).empty();
    w.start("buyer").attr("person", ref("person", rng.below(c.people))).empty();
    w.start("itemref").attr("item", ref("item", rng.below(c.items()))).empty();
    w.leaf("price", money(rng)).leaf("date", date(rng)).leaf("quantity", std::to_string(rng.between(1, 3)));
    w.leaf("type", rng.chance(70) ? "Regular" : "Featured");
    annotation(w, rng, c);
    w.end("closed_auction").newline();
  }
  w.end("closed_auctions").newline();

  w.open("catgraph").newline();
  for (std::uint64_t i = 0; i < c.catgraph; ++i) {
    w.start("edge")
        .attr("from", ref("category", rng.below(c.categories)))
        .attr("to", ref("category", rng.below(c.categories)))
        .empty()
        .newline();
  }
  w.end("catgraph").newline();

  w.open("categories").newline();
  for (std::uint64_t i = 0; i < c.categories; ++i) {
    w.start("category").attr("id", ref("category", i)).close_tag();
    w.leaf("name", words(rng, 1, 2));
    description(w, rng);
    w.end("category").newline();
  }
  w.end("categories").newline();
  w.end("site").newline();
}

void dblp(Writer& w, Rng& rng, double scale) {
  const auto n = dblp_children(scale);
  const auto authors_pool = std::max<std::uint64_t>(50, n / 4);
  w.open("dblp").newline();
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto r = rng.below(10);
    const std::string_view kind = r < 6 ? "article" : r < 9 ? "inproceedings" : "book";
    w.start(kind).attr("key", std::string(kind) + "/" + std::to_string(i)).close_tag();
    const auto authors = kind == "inproceedings" ? rng.between(1, 5) : rng.between(1, kind == "book" ? 3 : 4);
    for (std::uint64_t k = 0; k < authors; ++k) w.leaf("author", ref("Author ", rng.below(authors_pool)));
    w.leaf("title", words(rng, 3, 9));
    w.leaf("year", std::to_string(rng.between(1970, 2017)));
    if (kind == "article") {
      w.leaf("journal", "Journal of " + std::string(rng.pick(kWords)));
    } else if (kind == "inproceedings") {
      w.leaf("booktitle", "Proc. " + std::string(rng.pick(kWords)));
    } else {
      w.leaf("publisher", std::string(rng.pick(kCities)) + " Press");
    }
    w.end(kind).newline();
  }
  w.end("dblp").newline();
}

}  // namespace

XmarkCounts xmark_counts(double scale) {
  // At least 64 categories, so the suite's "category52" exists at small scales.
  return XmarkCounts{scaled(255000, scale), scaled(120000, scale), scaled(97500, scale), scaled(10000, scale),
                     std::max<std::uint64_t>(64, scaled(10000, scale)),  scaled(5500, scale),   scaled(20000, scale), scaled(22000, scale),
                     scaled(60000, scale),  scaled(100000, scale), scaled(10000, scale)};
}

std::uint64_t dblp_children(double scale) { return scaled(6'000'000, scale); }

void generate(const GenSpec& spec, std::ostream& out) {
  if (!(spec.scale > 0) || !std::isfinite(spec.scale)) throw std::invalid_argument("scale must be positive");
  Rng rng(spec.seed);
  Writer w(out);
  if (spec.dataset == Dataset::xmark_like) {
    xmark(w, rng, spec.scale);
  } else {
    dblp(w, rng, spec.scale);
  }
}

std::string generate(const GenSpec& spec) {
  std::ostringstream out;
  generate(spec, out);
  return out.str();
}

double scale_for_nodes(Dataset dataset, std::uint64_t nodes) {
  // Probe a small instance and extrapolate; node counts grow linearly in scale.
  const double probe = dataset == Dataset::xmark_like ? 0.002 : 0.0005;
  const auto table = parse_document(generate(GenSpec{dataset, probe, 1}), "probe");
  return probe * static_cast<double>(nodes) / static_cast<double>(table.size());
}

}  // namespace xpar
