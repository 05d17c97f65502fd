#pragma once

#include <atomic>
#include <functional>
#include <stdexcept>
#include <string>

#include "dogfight/matchd.hpp"

namespace dogfight {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-threaded poll loop carrying newline-delimited messages between TCP
/// clients and a MatchSession.
class TcpServer {
 public:
  /// Port 0 binds an ephemeral port; see `port()`.
  explicit TcpServer(int port, const std::string& bind_address = "127.0.0.1");
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }

  /// Runs until the match has finished and its result has been flushed, or
  /// `stop` becomes true. `clock` returns monotonic seconds.
  void serve(MatchSession& session, const std::function<double()>& clock, const std::atomic<bool>* stop = nullptr,
             double tick_seconds = 0.005);

  /// Longest accepted inbound line, in bytes.
  static constexpr std::size_t kMaxLine = 64 * 1024;

 private:
  int listen_fd_{-1};
  int port_{0};
};

/// Monotonic wall clock in seconds.
double monotonic_seconds();

}  // namespace dogfight
