#pragma once

// TCP query server: one thread and one session per connection over a shared,
// immutable set of databases.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "xpar/node_store.hpp"
#include "xpar/protocol.hpp"

namespace xpar {

/// Loaded databases by name. Filled before the server starts, read-only after.
class Registry {
 public:
  void add(std::shared_ptr<const Database> db);
  std::shared_ptr<const Database> find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const Database>, std::less<>> dbs_;
};

/// State a master session shares with the worker sessions ATTACHed to it:
/// the opened database and the stored partitions.
struct Job {
  std::shared_ptr<const Database> db;
  std::mutex mutex;
  std::shared_ptr<const TempPartitionDoc> parts;
};

/// Session ids to live jobs, for ATTACH.
class SessionDirectory {
 public:
  std::uint64_t next_id() { return ++last_id_; }
  void publish(std::uint64_t id, const std::shared_ptr<Job>& job);
  void remove(std::uint64_t id);
  std::shared_ptr<Job> find(std::uint64_t id) const;

 private:
  std::atomic<std::uint64_t> last_id_{0};
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::weak_ptr<Job>> jobs_;
};

/// Executes protocol lines for one session. Socket-free, so it is usable in-process.
class Session {
 public:
  Session(const Registry& registry, SessionDirectory& directory);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Full response text: status line plus result lines, each '\n'-terminated.
  /// Never throws for bad input; errors become ERR responses.
  std::string handle(std::string_view line);
  void handle(std::string_view line, std::string& out);

  std::uint64_t id() const { return id_; }
  bool closed() const { return closed_; }

 private:
  void dispatch(const Request& req, std::string& out);
  const Database& db() const;
  QueryAst prepare_prefix(const std::string& text) const;

  const Registry& registry_;
  SessionDirectory& directory_;
  std::uint64_t id_;
  std::shared_ptr<Job> job_;
  bool optimize_ = false;
  bool closed_ = false;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::size_t max_line = std::size_t{1} << 30;
};

class Server {
 public:
  Server(Registry registry, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting. Throws Error on bind/listen failure.
  void start();
  /// Bound port, valid after start().
  std::uint16_t port() const { return port_; }
  /// Closes the listener and every connection, then joins all threads.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  std::size_t sessions_served() const { return served_; }

 private:
  struct Conn {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve_connection(Conn& conn);
  void reap_finished();

  Registry registry_;
  ServerOptions options_;
  SessionDirectory directory_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex conns_mutex_;
  std::list<Conn> conns_;
  std::mutex stop_mutex_;
  bool stopped_ = false;
  bool finished_ = false;
  std::condition_variable stopped_cv_;
};

}  // namespace xpar
