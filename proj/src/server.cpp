#include "xpar/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "net.hpp"
#include "xpar/error.hpp"
#include "xpar/optimizer.hpp"

namespace xpar {

void Registry::add(std::shared_ptr<const Database> db) {
  auto name = db->table.db_name();
  dbs_[name] = std::move(db);
}

std::shared_ptr<const Database> Registry::find(std::string_view name) const {
  const auto it = dbs_.find(name);
  return it == dbs_.end() ? nullptr : it->second;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, db] : dbs_) out.push_back(name);
  return out;
}

void SessionDirectory::publish(std::uint64_t id, const std::shared_ptr<Job>& job) {
  std::lock_guard lock(mutex_);
  jobs_[id] = job;
}

void SessionDirectory::remove(std::uint64_t id) {
  std::lock_guard lock(mutex_);
  jobs_.erase(id);
}

std::shared_ptr<Job> SessionDirectory::find(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : it->second.lock();
}

// ---------------------------------------------------------------- Session

Session::Session(const Registry& registry, SessionDirectory& directory)
    : registry_(registry), directory_(directory), id_(directory.next_id()) {}

Session::~Session() { directory_.remove(id_); }

std::string Session::handle(std::string_view line) {
  std::string out;
  handle(line, out);
  return out;
}

void Session::handle(std::string_view line, std::string& out) {
  const auto mark = out.size();
  try {
    dispatch(parse_request(line), out);
    return;
  } catch (const XPathSyntaxError& e) {
    out.resize(mark);
    out += format_err("SYNTAX", e.what());
  } catch (const UnsupportedFeature& e) {
    out.resize(mark);
    out += format_err("UNSUPPORTED", e.what());
  } catch (const RangeError& e) {
    out.resize(mark);
    out += format_err("RANGE", e.what());
  } catch (const EvalError& e) {
    out.resize(mark);
    out += format_err("EVAL", e.what());
  } catch (const ProtocolError& e) {
    out.resize(mark);
    out += format_err("PROTOCOL", e.what());
  } catch (const std::exception& e) {
    out.resize(mark);
    out += format_err("INTERNAL", e.what());
  }
  out += '\n';
}

const Database& Session::db() const {
  if (!job_) throw ProtocolError("no database opened");
  return *job_->db;
}

QueryAst Session::prepare_prefix(const std::string& text) const {
  auto ast = parse_xpath(text);
  if (!ast.absolute()) throw ProtocolError("prefix query must be absolute");
  if (optimize_) ast = optimize(ast, db()).output;
  return ast;
}

namespace {

// Results are serialized after the body so the count is known for the status line.
void emit(std::string& out, std::uint64_t n, const std::string& body,
          const std::map<std::string, std::string>& fields = {}) {
  out += format_ok(n, fields);
  out += '\n';
  out += body;
}

}  // namespace

void Session::dispatch(const Request& req, std::string& out) {
  switch (req.command) {
    case Command::open: {
      auto found = registry_.find(req.argument);
      if (!found) {
        out += format_err("NODB", "no database '" + req.argument + "'") + "\n";
        return;
      }
      job_ = std::make_shared<Job>();
      job_->db = std::move(found);
      directory_.publish(id_, job_);
      emit(out, 0, {}, {{"session", std::to_string(id_)}});
      return;
    }
    case Command::attach: {
      std::uint64_t owner = 0;
      try {
        owner = std::stoull(req.argument);
      } catch (const std::exception&) {
        throw ProtocolError("bad session id '" + req.argument + "'");
      }
      auto job = directory_.find(owner);
      if (!job) {
        out += format_err("NOSESSION", "no session " + req.argument) + "\n";
        return;
      }
      job_ = std::move(job);
      emit(out, 0, {}, {{"session", std::to_string(id_)}, {"db", job_->db->table.db_name()}});
      return;
    }
    case Command::xpath: {
      const auto& d = db();
      auto ast = parse_xpath(req.argument);
      if (optimize_ && ast.head == QueryAst::Head::root) ast = optimize(ast, d).output;
      const Pre doc[1] = {0};
      const auto res = evaluate(ast, d, doc);
      std::string body;
      append_result_lines(d.table, res, body);
      emit(out, res.size(), body);
      return;
    }
    case Command::explain: {
      db();
      const auto report = optimize(parse_xpath(req.argument), db());
      std::string rules;
      for (const auto r : report.applied) {
        if (!rules.empty()) rules += ',';
        rules += rule_name(r);
      }
      emit(out, 1, unparse(report.output) + "\n", {{"rules", rules.empty() ? "none" : rules}});
      return;
    }
    case Command::prefix: {
      const auto& d = db();
      const auto res = evaluate(prepare_prefix(req.argument), d);
      std::string body;
      body.reserve(res.size() * 8);
      for (const Pre p : res) {
        body += std::to_string(p);
        body += '\n';
      }
      emit(out, res.size(), body, {{"disjoint", subtree_disjoint(d.table, res) ? "1" : "0"}});
      return;
    }
    case Command::storeparts: {
      const auto& d = db();
      if (req.number < 1) throw RangeError("partition count must be >= 1");
      if (req.number > (std::uint64_t{1} << 20)) throw RangeError("partition count too large");
      const auto res = evaluate(prepare_prefix(req.argument), d);
      auto parts = std::make_shared<const TempPartitionDoc>(
          TempPartitionDoc::build(block_partition(res, req.number, d.table.db_name())));
      {
        std::lock_guard lock(job_->mutex);
        job_->parts = std::move(parts);
      }
      emit(out, 0, {},
           {{"count", std::to_string(res.size())}, {"disjoint", subtree_disjoint(d.table, res) ? "1" : "0"}});
      return;
    }
    case Command::suffixpart: {
      const auto& d = db();
      std::shared_ptr<const TempPartitionDoc> parts;
      {
        std::lock_guard lock(job_->mutex);
        parts = job_->parts;
      }
      if (!parts) {
        out += format_err("NOPARTS", "no partitions stored; run STOREPARTS first") + "\n";
        return;
      }
      const auto suffix = parse_xpath(req.argument);
      const auto text = parts->part_text(req.number);
      std::string body;
      std::uint64_t n = 0;
      PreList res;
      // Each token is evaluated as soon as it is read.
      for_each_pre_token(text, [&](Pre p) {
        d.table.open_pre(p);
        res.clear();
        evaluate_from(suffix, d.table, p, res, &d.index);
        append_result_lines(d.table, res, body);
        n += res.size();
      });
      emit(out, n, body);
      return;
    }
    case Command::suffixpre: {
      const auto& d = db();
      const auto suffix = parse_xpath(req.argument);
      for (const Pre p : req.pres) d.table.open_pre(p);
      std::string body;
      std::uint64_t n = 0;
      PreList res;
      for (const Pre p : req.pres) {
        res.clear();
        evaluate_from(suffix, d.table, p, res, &d.index);
        append_result_lines(d.table, res, body);
        n += res.size();
      }
      emit(out, n, body);
      return;
    }
    case Command::optimize:
      optimize_ = req.flag;
      emit(out, 0, {});
      return;
    case Command::quit:
      closed_ = true;
      emit(out, 0, {});
      return;
  }
}

// ---------------------------------------------------------------- Server

Server::Server(Registry registry, ServerOptions options)
    : registry_(std::move(registry)), options_(std::move(options)) {}

Server::~Server() { stop(); }

void Server::start() {
  if (registry_.names().empty()) throw Error("server needs at least one database");
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto service = std::to_string(options_.port);
  if (const int rc = ::getaddrinfo(options_.host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error("cannot resolve " + options_.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 128) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw Error("cannot bind " + options_.host + ":" + service + ": " + last_error);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (stopping_) break;
      if (errno == EMFILE || errno == ENFILE) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        continue;
      }
      break;
    }
    net::set_nodelay(fd);
    reap_finished();
    std::lock_guard lock(conns_mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    auto& conn = conns_.emplace_back();
    conn.fd = fd;
    conn.thread = std::thread([this, &conn] { serve_connection(conn); });
    ++served_;
  }
}

void Server::serve_connection(Conn& conn) {
  Session session(registry_, directory_);
  net::LineReader reader(conn.fd, options_.max_line);
  std::string line;
  std::string out;
  while (!session.closed()) {
    const auto r = reader.read_line(line);
    if (r == net::LineReader::Result::eof) break;
    if (r == net::LineReader::Result::too_long) {
      net::send_all(conn.fd, format_err("PROTOCOL", "request line too long") + "\n");
      break;
    }
    out.clear();
    session.handle(line, out);
    if (!net::send_all(conn.fd, out)) break;
  }
  ::shutdown(conn.fd, SHUT_RDWR);
  conn.done = true;
}

void Server::reap_finished() {
  std::list<Conn> finished;
  {
    std::lock_guard lock(conns_mutex_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      auto next = std::next(it);
      if (it->done) finished.splice(finished.end(), conns_, it);
      it = next;
    }
  }
  for (auto& c : finished) {
    c.thread.join();
    ::close(c.fd);
  }
}

void Server::stop() {
  {
    std::lock_guard lock(stop_mutex_);
    if (stopped_) return;
    if (listen_fd_ < 0) {
      stopped_ = finished_ = true;
      stopped_cv_.notify_all();
      return;
    }
    stopped_ = true;
  }
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::list<Conn> all;
  {
    std::lock_guard lock(conns_mutex_);
    all.swap(conns_);
  }
  for (auto& c : all) ::shutdown(c.fd, SHUT_RDWR);
  for (auto& c : all) {
    c.thread.join();
    ::close(c.fd);
  }
  std::lock_guard lock(stop_mutex_);
  finished_ = true;
  stopped_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lock(stop_mutex_);
  stopped_cv_.wait(lock, [this] { return finished_; });
}

}  // namespace xpar
