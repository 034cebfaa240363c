// xpar: dataset generator, query server, parallel query client and benchmark driver.

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "xpar/bench.hpp"
#include "xpar/client.hpp"
#include "xpar/generator.hpp"
#include "xpar/optimizer.hpp"
#include "xpar/query_suite.hpp"
#include "xpar/server.hpp"

using namespace xpar;

namespace {

std::uint16_t default_port() {
  if (const char* env = std::getenv("XPAR_PORT")) return static_cast<std::uint16_t>(std::atoi(env));
  return 1984;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// name=file
std::shared_ptr<const Database> load_db(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("--db expects name=file, got '" + spec + "'");
  const auto name = spec.substr(0, eq);
  return Database::load(read_file(spec.substr(eq + 1)), name);
}

Endpoint parse_endpoint(const std::string& s) {
  Endpoint e;
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) {
    e.port = static_cast<std::uint16_t>(std::stoi(s));
  } else {
    if (colon > 0) e.host = s.substr(0, colon);
    e.port = static_cast<std::uint16_t>(std::stoi(s.substr(colon + 1)));
  }
  return e;
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(static_cast<std::size_t>(std::stoul(tok)));
  }
  return out;
}

// An in-process server for --db runs without --connect.
struct Local {
  std::unique_ptr<Server> server;
  Endpoint endpoint;
};

Local start_local(const std::vector<std::shared_ptr<const Database>>& dbs) {
  Registry reg;
  for (const auto& d : dbs) reg.add(d);
  Local l;
  l.server = std::make_unique<Server>(std::move(reg));
  l.server->start();
  l.endpoint.port = l.server->port();
  return l;
}

int cmd_gen(const std::string& dataset, double scale, std::uint64_t nodes, std::uint64_t seed,
            const std::string& out) {
  const auto ds = parse_dataset(dataset);
  if (!ds) throw Error("unknown dataset '" + dataset + "' (xmark or dblp)");
  GenSpec spec{*ds, scale, seed};
  if (nodes > 0) spec.scale = scale_for_nodes(*ds, nodes);
  if (out.empty() || out == "-") {
    generate(spec, std::cout);
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out);
    generate(spec, f);
  }
  std::cerr << "generated " << dataset_name(*ds) << " at scale " << spec.scale << "\n";
  return 0;
}

int cmd_serve(const std::vector<std::string>& db_specs, const std::string& host, std::uint16_t port) {
  // Block the signals before any thread starts so sigwait() receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Registry reg;
  for (const auto& s : db_specs) {
    auto db = load_db(s);
    std::cerr << "loaded " << db->table.db_name() << ": " << db->table.size() << " nodes\n";
    reg.add(std::move(db));
  }
  ServerOptions opt;
  opt.host = host;
  opt.port = port;
  Server server(std::move(reg), opt);
  server.start();
  std::cout << "listening on " << host << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cerr << "stopped after " << server.sessions_served() << " sessions\n";
  return 0;
}

void print_metrics(const RunMetrics& m, Strategy s, std::size_t P) {
  std::cerr << "strategy=" << strategy_name(s) << " P=" << P << " t_total=" << m.t_total << "ms";
  if (s != Strategy::sequential_original) {
    std::cerr << " t_prefix=" << m.t_prefix << "ms t_suffix_phase=" << m.t_suffix_phase << "ms prefix_count="
              << m.prefix_count << " merge=" << merge_rule_name(m.merge) << " t_suffix_per_worker=[";
    for (std::size_t i = 0; i < m.t_suffix_per_worker.size(); ++i) {
      std::cerr << (i ? "," : "") << m.t_suffix_per_worker[i];
    }
    std::cerr << "]";
  }
  std::cerr << " result_bytes=" << m.result_bytes << " request_bytes=" << m.request_bytes << " server=" << m.server
            << "\n";
}

struct QueryArgs {
  std::vector<std::string> dbs;
  std::string connect;
  std::string db_name;
  std::string query;
  std::string plan;
  std::string prefix;
  std::string suffix;
  std::string strategy = "sequential";
  std::size_t threads = 1;
  std::string optimize = "off";
  bool dump_optimized = false;
  bool verify = false;
  std::string out;
};

int cmd_query(const QueryArgs& a) {
  std::vector<std::shared_ptr<const Database>> dbs;
  for (const auto& s : a.dbs) dbs.push_back(load_db(s));
  Local local;
  Endpoint endpoint;
  if (!a.connect.empty()) {
    endpoint = parse_endpoint(a.connect);
  } else {
    if (dbs.empty()) throw Error("query needs --db name=file or --connect host:port");
    local = start_local(dbs);
    endpoint = local.endpoint;
  }
  std::string db_name = a.db_name;
  if (db_name.empty() && !dbs.empty()) db_name = dbs.front()->table.db_name();
  if (db_name.empty()) throw Error("--db-name is required with --connect");

  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw Error("unknown strategy '" + a.strategy + "'");
  if (a.optimize != "on" && a.optimize != "off") throw Error("--optimize takes on|off");

  ExecutionPlan plan;
  plan.strategy = *strategy;
  plan.P = a.threads;
  plan.db_name = db_name;
  plan.optimize = a.optimize == "on";

  std::string text = a.query;
  if (!a.plan.empty()) {
    if (const auto* q = find_query(a.plan)) {
      text = instantiate(q->text, db_name);
    } else if (const auto* v = find_variant(a.plan)) {
      text = instantiate(find_query(v->base)->text, db_name);
      if (plan.strategy != Strategy::sequential_original) plan.split = variant_plan(*v, db_name);
    } else {
      throw Error("unknown plan key '" + a.plan + "'");
    }
  }
  if (text.empty()) throw Error("query needs --query or --plan");
  plan.query = parse_xpath(text);

  if (a.dump_optimized) {
    Connection c = Connection::open(endpoint);
    c.call_ok("OPEN " + db_name);
    const auto r = c.call_ok("EXPLAIN " + text);
    std::cout << r.body;
    const auto it = r.status.fields.find("rules");
    std::cerr << "rules: " << (it == r.status.fields.end() ? "none" : it->second) << "\n";
    return 0;
  }

  if (plan.strategy != Strategy::sequential_original && !plan.split) {
    if (!a.prefix.empty() || !a.suffix.empty()) {
      SplitPlan s;
      s.prefix = parse_xpath(a.prefix);
      s.suffix = parse_xpath(a.suffix);
      s.merge = downward_only(s.suffix) ? MergeRule::concat_in_order : MergeRule::dedup_sort;
      plan.split = s;
    } else {
      if (dbs.empty()) throw Error("automatic splitting needs --db; pass --plan or --prefix/--suffix");
      auto base = plan.query;
      if (plan.optimize) base = optimize(base, *dbs.front()).output;
      plan.split = choose_default_split(base, *dbs.front(), plan.P);
    }
    std::cerr << plan.split->to_string() << "\n";
  }

  auto result = run(plan, endpoint);
  result.metrics.server = endpoint.to_string();
  int rc = 0;
  if (a.verify && plan.strategy != Strategy::sequential_original) {
    ExecutionPlan seq = plan;
    seq.strategy = Strategy::sequential_original;
    seq.split.reset();
    const auto ref = run(seq, endpoint);
    const bool same = ref.bytes == result.bytes;
    std::cerr << "verify: " << (same ? "identical to sequential original" : "DIFFERS from sequential original")
              << "\n";
    rc = same ? 0 : 1;
  }
  if (a.out.empty() || a.out == "-") {
    std::cout << result.bytes;
  } else {
    std::ofstream(a.out, std::ios::binary) << result.bytes;
  }
  print_metrics(result.metrics, plan.strategy, plan.P);
  return rc;
}

struct BenchArgs {
  std::string suite = "xmark";
  std::vector<std::string> dbs;
  std::string connect;
  std::string threads_list = "1,2,3,6,12";
  std::size_t repeats = 25;
  std::string report;
  std::string strategies = "client,server";
  std::vector<std::string> keys;
  std::string optimize = "off";
  double scale = 0;
  std::uint64_t nodes = 100000;
  std::uint64_t seed = 42;
};

int cmd_bench(const BenchArgs& a) {
  std::vector<Dataset> datasets;
  if (a.suite == "all") {
    datasets = {Dataset::xmark_like, Dataset::dblp_like};
  } else if (const auto d = parse_dataset(a.suite)) {
    datasets = {*d};
  } else {
    throw Error("unknown suite '" + a.suite + "' (xmark, dblp or all)");
  }

  BenchOptions opt;
  opt.threads = parse_list(a.threads_list);
  opt.repeats = a.repeats;
  opt.keys = a.keys;
  opt.optimize = a.optimize == "on";
  opt.strategies.clear();
  std::stringstream ss(a.strategies);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto s = parse_strategy(tok);
    if (!s || *s == Strategy::sequential_original) throw Error("bad strategy '" + tok + "'");
    opt.strategies.push_back(*s);
  }

  std::vector<std::shared_ptr<const Database>> dbs;
  for (const auto& s : a.dbs) dbs.push_back(load_db(s));
  Local local;
  Endpoint endpoint;
  if (!a.connect.empty()) {
    endpoint = parse_endpoint(a.connect);
  } else {
    if (dbs.empty()) {
      // Generate the datasets in-process.
      for (const auto d : datasets) {
        GenSpec spec{d, a.scale > 0 ? a.scale : scale_for_nodes(d, a.nodes), a.seed};
        auto db = Database::load(generate(spec), default_db_name(d));
        std::cerr << "generated " << dataset_name(d) << " at scale " << spec.scale << ": " << db->table.size()
                  << " nodes\n";
        dbs.push_back(std::move(db));
      }
    }
    local = start_local(dbs);
    endpoint = local.endpoint;
  }

  std::ofstream report_file;
  if (!a.report.empty()) {
    report_file.open(a.report);
    if (!report_file) throw Error("cannot write " + a.report);
  }
  bool ok = true;
  for (const auto d : datasets) {
    // A lone --db serves a single-dataset suite whatever its name.
    std::string db_name = default_db_name(d);
    if (datasets.size() == 1 && dbs.size() == 1) db_name = dbs.front()->table.db_name();
    const auto report = run_suite(endpoint, db_name, d, opt, &std::cerr);
    write_table(report, std::cout);
    if (report_file) write_jsonl(report, report_file);
    ok = ok && report.all_correct();
  }
  std::cout << (ok ? "all correctness gates passed\n" : "CORRECTNESS GATE FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel XPath engine: generate datasets, serve them, run split queries and benchmarks"};
  app.require_subcommand(1);

  std::string g_dataset = "xmark", g_out;
  double g_scale = 0.01;
  std::uint64_t g_nodes = 0, g_seed = 42;
  auto* gen = app.add_subcommand("gen", "Generate an XMark-like or DBLP-like document");
  gen->add_option("--dataset", g_dataset, "xmark or dblp")->capture_default_str();
  gen->add_option("--scale", g_scale, "Count multiplier; 1 matches XMark factor 10")->capture_default_str();
  gen->add_option("--nodes", g_nodes, "Target node count (overrides --scale)");
  gen->add_option("--seed", g_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", g_out, "Output file (default stdout)");

  std::vector<std::string> s_dbs;
  std::string s_host = "127.0.0.1";
  std::uint16_t s_port = default_port();
  auto* serve = app.add_subcommand("serve", "Serve databases over the line protocol");
  serve->add_option("--db", s_dbs, "name=file, repeatable")->required();
  serve->add_option("--host", s_host, "Bind address")->capture_default_str();
  serve->add_option("--port", s_port, "Port (env XPAR_PORT)")->capture_default_str();

  QueryArgs q;
  auto* query = app.add_subcommand("query", "Run one query, sequentially or split");
  query->add_option("--db", q.dbs, "name=file; runs an in-process server");
  query->add_option("--connect", q.connect, "host:port of a running server");
  query->add_option("--db-name", q.db_name, "Database to open (default: the first --db)");
  query->add_option("--query", q.query, "XPath text");
  query->add_option("--plan", q.plan, "Suite key such as XM3 or XM3(c)");
  query->add_option("--prefix", q.prefix, "Explicit prefix query");
  query->add_option("--suffix", q.suffix, "Explicit suffix query");
  query->add_option("--strategy", q.strategy, "sequential, client or server")->capture_default_str();
  query->add_option("--threads", q.threads, "P, number of workers")->capture_default_str();
  query->add_option("--optimize", q.optimize, "on or off")->capture_default_str();
  query->add_flag("--dump-optimized", q.dump_optimized, "Print the optimized query and exit");
  query->add_flag("--verify", q.verify, "Compare with the sequential original; exit 1 on mismatch");
  query->add_option("--out", q.out, "Result file (default stdout)");

  BenchArgs b;
  std::string b_keys;
  auto* bench = app.add_subcommand("bench", "Run the query suite across strategies and thread counts");
  bench->add_option("--suite", b.suite, "xmark, dblp or all")->capture_default_str();
  bench->add_option("--db", b.dbs, "name=file; otherwise datasets are generated");
  bench->add_option("--connect", b.connect, "host:port of a running server");
  bench->add_option("--threads-list", b.threads_list, "Comma-separated P values")->capture_default_str();
  bench->add_option("--repeats", b.repeats, "Timed runs per cell after one warm-up")->capture_default_str();
  bench->add_option("--report", b.report, "Write JSON lines here");
  bench->add_option("--strategies", b.strategies, "client,server")->capture_default_str();
  bench->add_option("--keys", b_keys, "Comma-separated query or variant keys");
  bench->add_option("--optimize", b.optimize, "on or off")->capture_default_str();
  bench->add_option("--scale", b.scale, "Generator scale (default: from --nodes)");
  bench->add_option("--nodes", b.nodes, "Target node count of generated datasets")->capture_default_str();
  bench->add_option("--seed", b.seed, "Generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(g_dataset, g_scale, g_nodes, g_seed, g_out);
    if (serve->parsed()) return cmd_serve(s_dbs, s_host, s_port);
    if (query->parsed()) return cmd_query(q);
    if (bench->parsed()) {
      std::stringstream ss(b_keys);
      for (std::string tok; std::getline(ss, tok, ',');) {
        if (!tok.empty()) b.keys.push_back(tok);
      }
      return cmd_bench(b);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
