#pragma once

// Master/worker client: runs a query as one request, or as a prefix on the
// master connection followed by P suffix requests on worker connections.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xpar/error.hpp"
#include "xpar/protocol.hpp"
#include "xpar/splitter.hpp"

namespace xpar {

namespace net {
class LineReader;
}

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// The server answered ERR.
class RemoteError : public Error {
 public:
  RemoteError(std::string code, const std::string& message)
      : Error(code + " " + message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// A parallel run failed; carries the first failure.
class JobError : public Error {
 public:
  using Error::Error;
};

/// One blocking TCP connection with byte counters.
class Connection {
 public:
  static Connection open(const Endpoint& endpoint);
  Connection() = default;
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  ~Connection();

  struct Reply {
    Status status;
    std::string body;  // the n result lines, '\n'-terminated
  };

  /// Sends one request line. Throws ProtocolError when the connection drops.
  Reply call(std::string_view request);
  /// As call(), but throws RemoteError for ERR replies.
  Reply call_ok(std::string_view request);

  /// Wakes a call() blocked in another thread; the connection is dead afterwards.
  void shutdown();
  bool valid() const { return fd_ >= 0; }

  std::uint64_t bytes_sent() const { return sent_; }
  std::uint64_t bytes_received() const { return received_; }

 private:
  explicit Connection(int fd);
  void close();

  int fd_ = -1;
  std::unique_ptr<net::LineReader> reader_;
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
};

enum class Strategy { sequential_original, client_side, server_side };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct ExecutionPlan {
  Strategy strategy = Strategy::sequential_original;
  QueryAst query;  // the original query; what sequential_original runs
  std::optional<SplitPlan> split;  // none for sequential_original
  std::size_t P = 1;
  std::string db_name;
  bool optimize = false;
  /// Optional permutation: partition i runs on worker assignment[i].
  std::vector<std::size_t> assignment;

  /// Throws std::invalid_argument when the plan breaks its invariants.
  void validate() const;
};

/// Timings in milliseconds.
struct RunMetrics {
  double t_prefix = 0;
  std::vector<double> t_suffix_per_worker;  // t_i^p; 0 for an empty partition
  double t_suffix_phase = 0;  // dispatch to last worker reply
  double t_total = 0;
  // Filled by the bench: original, sequential split (P = 1), parallel split.
  double t_o = 0;
  double t_s = 0;
  double t_p = 0;
  std::uint64_t prefix_count = 0;
  std::uint64_t prefix_bytes = 0;  // bytes received for the prefix phase
  std::uint64_t result_bytes = 0;  // merged result size
  std::uint64_t request_bytes = 0;  // bytes sent by all connections
  std::uint64_t suffix_request_bytes = 0;  // bytes sent by workers
  MergeRule merge = MergeRule::concat_in_order;
  std::string server;
};

struct RunResult {
  std::string bytes;
  RunMetrics metrics;
};

/// Appends streams by index, or merges their lines ascending by PRE with
/// duplicates dropped. Throws ProtocolError on a malformed line.
std::string merge_results(const std::vector<std::string>& streams, MergeRule rule);

class ParallelClient {
 public:
  /// Opens 1 master and `workers` worker connections, all bound to the same
  /// job on the server. Connection setup happens here, outside any timing.
  ParallelClient(const Endpoint& endpoint, const std::string& db_name, std::size_t workers);

  /// Runs a plan with plan.P <= workers(). Throws JobError on any failure;
  /// the client is unusable afterwards.
  RunResult run(const ExecutionPlan& plan);

  std::size_t workers() const { return workers_.size(); }
  Connection& master() { return master_; }
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  RunResult run_sequential(const ExecutionPlan& plan);
  RunResult run_split(const ExecutionPlan& plan);
  void set_optimize(bool on);
  std::uint64_t total_sent() const;

  Endpoint endpoint_;
  std::string db_name_;
  Connection master_;
  std::vector<Connection> workers_;
  std::optional<bool> optimize_;
  bool broken_ = false;
};

/// Convenience wrapper: connects, runs once, disconnects.
RunResult run(const ExecutionPlan& plan, const Endpoint& endpoint);

}  // namespace xpar
