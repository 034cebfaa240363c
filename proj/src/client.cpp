#include "xpar/client.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "net.hpp"

namespace xpar {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0, Clock::time_point t1 = Clock::now()) {
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- Connection

Connection::Connection(int fd) : fd_(fd), reader_(std::make_unique<net::LineReader>(fd)) {}

Connection::Connection(Connection&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      reader_(std::move(other.reader_)),
      sent_(other.sent_),
      received_(other.received_) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    reader_ = std::move(other.reader_);
    sent_ = other.sent_;
    received_ = other.received_;
  }
  return *this;
}

Connection::~Connection() { close(); }

void Connection::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  reader_.reset();
}

Connection Connection::open(const Endpoint& endpoint) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(endpoint.port);
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error("cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  std::string last_error = "no address";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error("cannot connect to " + endpoint.to_string() + ": " + last_error);
  net::set_nodelay(fd);
  return Connection(fd);
}

Connection::Reply Connection::call(std::string_view request) {
  if (fd_ < 0) throw ProtocolError("connection is closed");
  std::string line;
  line.reserve(request.size() + 1);
  line.append(request);
  line += '\n';
  if (!net::send_all(fd_, line)) throw ProtocolError("connection lost while sending");
  sent_ += line.size();

  Reply reply;
  std::string status;
  if (reader_->read_line(status) != net::LineReader::Result::line) {
    received_ = reader_->bytes_read();
    throw ProtocolError("connection closed by server");
  }
  reply.status = parse_status(status);
  if (reply.status.ok && reader_->read_lines(reply.status.count, reply.body) != net::LineReader::Result::line) {
    received_ = reader_->bytes_read();
    throw ProtocolError("connection closed in the middle of a reply");
  }
  received_ = reader_->bytes_read();
  return reply;
}

Connection::Reply Connection::call_ok(std::string_view request) {
  auto reply = call(request);
  if (!reply.status.ok) throw RemoteError(reply.status.code, reply.status.message);
  return reply;
}

void Connection::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

// ---------------------------------------------------------------- plans

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::sequential_original: return "sequential_original";
    case Strategy::client_side: return "client_side";
    case Strategy::server_side: return "server_side";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (const auto st : {Strategy::sequential_original, Strategy::client_side, Strategy::server_side}) {
    if (s == strategy_name(st)) return st;
  }
  if (s == "sequential" || s == "original") return Strategy::sequential_original;
  if (s == "client") return Strategy::client_side;
  if (s == "server") return Strategy::server_side;
  return std::nullopt;
}

void ExecutionPlan::validate() const {
  if (P < 1) throw std::invalid_argument("P must be >= 1");
  if (strategy == Strategy::sequential_original && split) {
    throw std::invalid_argument("sequential_original carries no split");
  }
  if (strategy != Strategy::sequential_original && !split) throw std::invalid_argument("parallel plan needs a split");
  if (!assignment.empty()) {
    auto sorted = assignment;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] != i || sorted.size() != P) throw std::invalid_argument("assignment must permute 0..P-1");
    }
  }
}

// ---------------------------------------------------------------- merge

std::string merge_results(const std::vector<std::string>& streams, MergeRule rule) {
  std::string out;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.size();
  out.reserve(total);
  if (rule == MergeRule::concat_in_order) {
    for (const auto& s : streams) out += s;
    return out;
  }
  struct Item {
    Pre pre;
    std::string_view line;  // without '\n'
  };
  std::vector<Item> items;
  for (const auto& s : streams) {
    std::string_view rest = s;
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      const auto line = rest.substr(0, nl);
      items.push_back({result_line_pre(line), line});
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.pre < b.pre; });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0 && items[i].pre == items[i - 1].pre) continue;
    out += items[i].line;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- ParallelClient

ParallelClient::ParallelClient(const Endpoint& endpoint, const std::string& db_name, std::size_t workers)
    : endpoint_(endpoint), db_name_(db_name) {
  master_ = Connection::open(endpoint);
  const auto opened = master_.call_ok("OPEN " + db_name);
  const auto it = opened.status.fields.find("session");
  if (it == opened.status.fields.end()) throw ProtocolError("server did not report a session id");
  for (std::size_t i = 0; i < workers; ++i) {
    auto& w = workers_.emplace_back(Connection::open(endpoint));
    w.call_ok("ATTACH " + it->second);
  }
}

void ParallelClient::set_optimize(bool on) {
  if (optimize_ == on) return;
  master_.call_ok(on ? "OPTIMIZE on" : "OPTIMIZE off");
  optimize_ = on;
}

std::uint64_t ParallelClient::total_sent() const {
  auto n = master_.bytes_sent();
  for (const auto& w : workers_) n += w.bytes_sent();
  return n;
}

RunResult ParallelClient::run(const ExecutionPlan& plan) {
  if (broken_) throw JobError("client connections were cancelled by an earlier failure");
  plan.validate();
  if (plan.strategy != Strategy::sequential_original && plan.P > workers_.size()) {
    throw std::invalid_argument("plan needs " + std::to_string(plan.P) + " workers, client has " +
                                std::to_string(workers_.size()));
  }
  try {
    auto result = plan.strategy == Strategy::sequential_original ? run_sequential(plan) : run_split(plan);
    result.metrics.server = endpoint_.to_string();
    return result;
  } catch (const JobError&) {
    throw;
  } catch (const RemoteError& e) {
    throw JobError(e.what());
  } catch (const std::exception& e) {
    broken_ = true;
    throw JobError(e.what());
  }
}

RunResult ParallelClient::run_sequential(const ExecutionPlan& plan) {
  set_optimize(plan.optimize);
  const auto sent0 = total_sent();
  const auto t0 = Clock::now();
  auto reply = master_.call_ok("XPATH " + unparse(plan.query));
  RunResult r;
  r.metrics.t_total = ms_since(t0);
  r.bytes = std::move(reply.body);
  r.metrics.result_bytes = r.bytes.size();
  r.metrics.request_bytes = total_sent() - sent0;
  return r;
}

RunResult ParallelClient::run_split(const ExecutionPlan& plan) {
  set_optimize(plan.optimize);
  const auto& split = *plan.split;
  const auto P = plan.P;
  const auto prefix_text = unparse(split.prefix);
  const auto suffix_text = unparse(split.suffix);
  RunResult r;
  auto& m = r.metrics;
  const auto sent0 = total_sent();
  std::uint64_t worker_sent0 = 0;
  for (const auto& w : workers_) worker_sent0 += w.bytes_sent();
  const auto recv0 = master_.bytes_received();

  const auto t0 = Clock::now();
  bool disjoint = false;
  std::vector<PreList> client_parts;  // client_side only
  std::vector<std::size_t> part_sizes(P, 0);
  if (plan.strategy == Strategy::client_side) {
    const auto reply = master_.call_ok("PREFIX " + prefix_text);
    disjoint = reply.status.fields.count("disjoint") && reply.status.fields.at("disjoint") == "1";
    PreList pres;
    pres.reserve(reply.status.count);
    for_each_pre_token(reply.body, [&](Pre p) { pres.push_back(p); });
    if (pres.size() != reply.status.count) throw ProtocolError("prefix reply count mismatch");
    client_parts = block_partition(pres, P, plan.db_name).partitions;
    for (std::size_t i = 0; i < P; ++i) part_sizes[i] = client_parts[i].size();
    m.prefix_count = pres.size();
  } else {
    const auto reply = master_.call_ok("STOREPARTS " + std::to_string(P) + " " + prefix_text);
    const auto& f = reply.status.fields;
    disjoint = f.count("disjoint") && f.at("disjoint") == "1";
    if (!f.count("count")) throw ProtocolError("STOREPARTS reply lacks count");
    m.prefix_count = std::stoull(f.at("count"));
    for (std::size_t i = 0; i < P; ++i) part_sizes[i] = m.prefix_count / P + (i < m.prefix_count % P ? 1 : 0);
  }
  const auto t1 = Clock::now();
  m.t_prefix = ms_since(t0, t1);
  m.prefix_bytes = master_.bytes_received() - recv0;
  m.merge = choose_merge(split, disjoint);

  std::vector<std::string> streams(P);
  m.t_suffix_per_worker.assign(P, 0.0);
  std::mutex fail_mutex;
  std::optional<std::string> failure;
  std::vector<std::thread> threads;
  threads.reserve(P);
  for (std::size_t i = 0; i < P; ++i) {
    if (part_sizes[i] == 0) continue;
    const auto w = plan.assignment.empty() ? i : plan.assignment[i];
    threads.emplace_back([&, i, w] {
      try {
        const auto ts = Clock::now();
        auto& conn = workers_[w];
        const auto request = plan.strategy == Strategy::client_side
                                 ? format_suffixpre(client_parts[i], suffix_text)
                                 : "SUFFIXPART " + std::to_string(i + 1) + " " + suffix_text;
        auto reply = conn.call_ok(request);
        streams[i] = std::move(reply.body);
        m.t_suffix_per_worker[i] = ms_since(ts);
      } catch (const std::exception& e) {
        std::lock_guard lock(fail_mutex);
        if (failure) return;
        failure = "partition " + std::to_string(i + 1) + ": " + e.what();
        for (std::size_t k = 0; k < workers_.size(); ++k) {
          if (k != w) workers_[k].shutdown();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto t2 = Clock::now();
  if (failure) {
    broken_ = true;
    throw JobError(*failure);
  }
  m.t_suffix_phase = ms_since(t1, t2);

  r.bytes = merge_results(streams, m.merge);
  m.t_total = ms_since(t0);
  m.result_bytes = r.bytes.size();
  m.request_bytes = total_sent() - sent0;
  std::uint64_t worker_sent = 0;
  for (const auto& w : workers_) worker_sent += w.bytes_sent();
  m.suffix_request_bytes = worker_sent - worker_sent0;
  return r;
}

RunResult run(const ExecutionPlan& plan, const Endpoint& endpoint) {
  const auto workers = plan.strategy == Strategy::sequential_original ? 0 : plan.P;
  ParallelClient client(endpoint, plan.db_name, workers);
  return client.run(plan);
}

}  // namespace xpar
