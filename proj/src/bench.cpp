#include "xpar/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>

#include "xpar/metrics.hpp"
#include "xpar/query_suite.hpp"

namespace xpar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool selected(const BenchOptions& o, const std::string& key, const std::string& base) {
  if (o.keys.empty()) return true;
  return std::find(o.keys.begin(), o.keys.end(), key) != o.keys.end() ||
         std::find(o.keys.begin(), o.keys.end(), base) != o.keys.end();
}

struct Measured {
  std::vector<RunMetrics> runs;
  std::string bytes;  // output of the warm-up run
  std::string failure;
};

class Driver {
 public:
  Driver(const Endpoint& endpoint, std::string db_name, std::size_t workers)
      : endpoint_(endpoint), db_name_(std::move(db_name)), workers_(workers) {
    connect();
  }

  // 1 warm-up + `repeats` timed runs; every output must equal `reference`
  // (or the warm-up output when no reference is given).
  Measured measure(const ExecutionPlan& plan, std::size_t repeats, const std::string* reference) {
    Measured m;
    try {
      m.bytes = client_->run(plan).bytes;
      const auto& expect = reference ? *reference : m.bytes;
      if (m.bytes != expect) {
        m.failure = mismatch(m.bytes, expect);
        return m;
      }
      for (std::size_t i = 0; i < repeats; ++i) {
        auto r = client_->run(plan);
        if (r.bytes != expect) {
          m.failure = mismatch(r.bytes, expect);
          return m;
        }
        m.runs.push_back(std::move(r.metrics));
      }
    } catch (const std::exception& e) {
      m.failure = e.what();
      connect();
    }
    return m;
  }

 private:
  static std::string mismatch(const std::string& got, const std::string& want) {
    return "output differs from the original (" + std::to_string(got.size()) + " vs " +
           std::to_string(want.size()) + " bytes)";
  }

  void connect() { client_ = std::make_unique<ParallelClient>(endpoint_, db_name_, workers_); }

  Endpoint endpoint_;
  std::string db_name_;
  std::size_t workers_;
  std::unique_ptr<ParallelClient> client_;
};

template <class F>
double median_of(const std::vector<RunMetrics>& runs, F field) {
  if (runs.empty()) return kNaN;
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(field(r));
  return median(v);
}

RunMetrics summarize(const Measured& m) {
  RunMetrics s;
  if (m.runs.empty()) return s;
  s = m.runs.front();
  s.t_prefix = median_of(m.runs, [](const RunMetrics& r) { return r.t_prefix; });
  s.t_suffix_phase = median_of(m.runs, [](const RunMetrics& r) { return r.t_suffix_phase; });
  s.t_total = median_of(m.runs, [](const RunMetrics& r) { return r.t_total; });
  for (std::size_t i = 0; i < s.t_suffix_per_worker.size(); ++i) {
    s.t_suffix_per_worker[i] = median_of(m.runs, [i](const RunMetrics& r) { return r.t_suffix_per_worker[i]; });
  }
  return s;
}

std::vector<double> totals(const Measured& m) {
  std::vector<double> out;
  for (const auto& r : m.runs) out.push_back(r.t_total);
  return out;
}

std::string human_bytes(std::uint64_t n) {
  char buf[32];
  if (n < 1024) {
    std::snprintf(buf, sizeof buf, "%llu B", static_cast<unsigned long long>(n));
  } else if (n < 1024 * 1024) {
    std::snprintf(buf, sizeof buf, "%.2f KB", static_cast<double>(n) / 1024);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f MB", static_cast<double>(n) / (1024 * 1024));
  }
  return buf;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

bool BenchReport::all_correct() const {
  return std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.correct; });
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

BenchReport run_suite(const Endpoint& endpoint, const std::string& db_name, Dataset dataset,
                      const BenchOptions& options, std::ostream* progress) {
  BenchReport report;
  report.dataset = std::string(dataset_name(dataset));
  report.db_name = db_name;
  report.server = endpoint.to_string();
  report.repeats = options.repeats;

  // P = 1 is always measured: it is the baseline of t_s and increase of work.
  auto plist = options.threads;
  plist.push_back(1);
  std::sort(plist.begin(), plist.end());
  plist.erase(std::unique(plist.begin(), plist.end()), plist.end());
  plist.erase(std::remove(plist.begin(), plist.end(), std::size_t{0}), plist.end());
  const auto requested = [&](std::size_t P) {
    return std::find(options.threads.begin(), options.threads.end(), P) != options.threads.end();
  };

  Driver driver(endpoint, db_name, plist.back());
  auto note = [&](const BenchCell& c) {
    if (!progress) return;
    *progress << c.key << " " << strategy_name(c.strategy) << " P=" << c.P << ": "
              << (c.correct ? "ok" : "FAILED " + c.failure) << " t=" << c.metrics.t_total << " ms\n";
    progress->flush();
  };

  for (const auto& q : suite_queries()) {
    if (q.dataset != dataset) continue;
    const bool any_variant = std::any_of(suite_variants().begin(), suite_variants().end(), [&](const SuiteVariant& v) {
      return v.base == q.key && selected(options, v.key, q.key);
    });
    if (!selected(options, q.key, q.key) && !any_variant) continue;

    const auto original = parse_xpath(instantiate(q.text, db_name));
    ExecutionPlan seq;
    seq.strategy = Strategy::sequential_original;
    seq.query = original;
    seq.db_name = db_name;
    seq.optimize = options.optimize;
    const auto orig = driver.measure(seq, options.repeats, nullptr);

    BenchCell oc;
    oc.key = q.key;
    oc.base = q.key;
    oc.metrics = summarize(orig);
    oc.totals = totals(orig);
    oc.correct = orig.failure.empty();
    oc.failure = orig.failure;
    oc.result_hash = fnv1a(orig.bytes);
    oc.metrics.t_o = oc.metrics.t_total;
    oc.metrics.result_bytes = orig.bytes.size();
    oc.metrics.server = report.server;
    oc.speedup = 1;
    oc.load_balance = oc.increase_of_work = kNaN;
    report.cells.push_back(oc);
    note(oc);
    if (!oc.correct) continue;
    const double t_o = oc.metrics.t_total;

    for (const auto& v : suite_variants()) {
      if (v.base != q.key || !selected(options, v.key, q.key)) continue;
      const auto split = variant_plan(v, db_name);
      for (const auto strategy : options.strategies) {
        if (strategy == Strategy::sequential_original) continue;
        double t11 = kNaN;
        double t_s = kNaN;
        double prev_phase = kNaN;
        std::vector<BenchCell> series;
        for (const auto P : plist) {
          ExecutionPlan plan;
          plan.strategy = strategy;
          plan.query = original;
          plan.split = split;
          plan.P = P;
          plan.db_name = db_name;
          plan.optimize = options.optimize;
          const auto m = driver.measure(plan, options.repeats, &orig.bytes);

          BenchCell c;
          c.key = v.key;
          c.base = q.key;
          c.strategy = strategy;
          c.P = P;
          c.metrics = summarize(m);
          c.metrics.server = report.server;
          c.totals = totals(m);
          c.correct = m.failure.empty();
          c.failure = m.failure;
          c.result_hash = fnv1a(m.bytes);
          if (P == 1 && c.correct) {
            t_s = c.metrics.t_total;
            t11 = c.metrics.t_suffix_per_worker.empty() ? kNaN : c.metrics.t_suffix_per_worker[0];
          }
          c.metrics.t_o = t_o;
          c.metrics.t_s = t_s;
          c.metrics.t_p = c.metrics.t_total;
          c.speedup = c.correct && c.metrics.t_p > 0 ? speedup(t_o, c.metrics.t_p) : kNaN;
          c.load_balance = kNaN;
          c.increase_of_work = kNaN;
          if (c.correct) {
            try {
              c.load_balance = load_balance(c.metrics.t_suffix_per_worker);
            } catch (const MetricError&) {
            }
            try {
              c.increase_of_work = increase_of_work(c.metrics.t_suffix_per_worker, t11);
            } catch (const MetricError&) {
            }
          }
          c.non_monotone = c.correct && std::isfinite(prev_phase) && c.metrics.t_suffix_phase > prev_phase;
          if (c.correct) prev_phase = c.metrics.t_suffix_phase;
          // Cells that failed still count, requested or not: the gate must trip.
          if (requested(P) || !c.correct) {
            report.cells.push_back(c);
            note(c);
          }
        }
      }
    }
  }
  return report;
}

void write_table(const BenchReport& report, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-12s %3s %10s %10s %10s %8s %10s %10s %11s %s\n", "Key", "strategy", "P",
                "orig t_o", "seq t_s", "par t_p", "t_o/t_p", "prefix", "final", "lb/iow", "check");
  out << "dataset " << report.dataset << " (db " << report.db_name << ", server " << report.server << ", median of "
      << report.repeats << " runs)\n"
      << line;
  for (const auto& c : report.cells) {
    const bool original = c.strategy == Strategy::sequential_original;
    char lbiow[32] = "-";
    if (std::isfinite(c.load_balance) && std::isfinite(c.increase_of_work)) {
      std::snprintf(lbiow, sizeof lbiow, "%.2f/%.2f", c.load_balance, c.increase_of_work);
    }
    std::string flags = c.correct ? "ok" : "FAILED: " + c.failure;
    if (c.non_monotone) flags += " (non-monotone)";
    std::snprintf(line, sizeof line, "%-8s %-12s %3zu %10.2f %10.2f %10.2f %8.2f %10s %10s %11s %s\n", c.key.c_str(),
                  original ? "original" : std::string(strategy_name(c.strategy)).c_str(), c.P, c.metrics.t_o,
                  original ? c.metrics.t_total : c.metrics.t_s, original ? c.metrics.t_total : c.metrics.t_p,
                  c.speedup, original ? "-" : human_bytes(c.metrics.prefix_bytes).c_str(),
                  human_bytes(c.metrics.result_bytes).c_str(), lbiow, flags.c_str());
    out << line;
  }
}

void write_jsonl(const BenchReport& report, std::ostream& out) {
  for (const auto& c : report.cells) {
    const auto& m = c.metrics;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.result_hash));
    nlohmann::json j = {
        {"dataset", report.dataset},
        {"key", c.key},
        {"base", c.base},
        {"strategy", strategy_name(c.strategy)},
        {"P", c.P},
        {"repeats", report.repeats},
        {"t_prefix", number_or_null(m.t_prefix)},
        {"t_suffix_phase", number_or_null(m.t_suffix_phase)},
        {"t_total", number_or_null(m.t_total)},
        {"t_o", number_or_null(m.t_o)},
        {"t_s", number_or_null(m.t_s)},
        {"t_p", number_or_null(m.t_p)},
        {"speedup", number_or_null(c.speedup)},
        {"load_balance", number_or_null(c.load_balance)},
        {"increase_of_work", number_or_null(c.increase_of_work)},
        {"prefix_count", m.prefix_count},
        {"prefix_bytes", m.prefix_bytes},
        {"result_bytes", m.result_bytes},
        {"request_bytes", m.request_bytes},
        {"merge", merge_rule_name(m.merge)},
        {"server", m.server},
        {"correct", c.correct},
        {"failure", c.failure},
        {"result_hash", hash},
        {"non_monotone", c.non_monotone},
    };
    auto workers = nlohmann::json::array();
    for (const double t : m.t_suffix_per_worker) workers.push_back(number_or_null(t));
    j["t_suffix_per_worker"] = std::move(workers);
    out << j.dump() << '\n';
  }
}

}  // namespace xpar
