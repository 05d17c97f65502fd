#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <json.hpp>

#include "dogfight/tcp_server.hpp"

namespace dogfight {
namespace {

using Json = nlohmann::json;

/// Blocking line client with a deadline.
class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    connected_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  }
  ~Client() { close(); }
  bool connected() const { return connected_; }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  void send(const std::string& text) { ::send(fd_, text.data(), text.size(), MSG_NOSIGNAL); }
  void send(const Json& j) { send(j.dump() + "\n"); }
  /// Next line, or nullopt on EOF or timeout.
  std::optional<std::string> line(double timeout_s = 5.0) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string l = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return l;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
      char tmp[4096];
      const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
      if (n <= 0) return std::nullopt;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_{-1};
  bool connected_{false};
  std::string buf_;
};

MatchSession short_match(double seconds) {
  MatchConfig c;
  c.engagement.max_duration = seconds;
  InitialCondition ic;
  ic.blue = level_flight_state({0, 0, 20000}, kPi, 500.0);
  ic.red = level_flight_state({20000, 0, 20000}, 0.0, 500.0);
  return MatchSession(c, make_scripted_pilot("level_flier"), ic, 1);
}

TEST(Tcp, FullMatchOverTheWire) {
  MatchSession session = short_match(1.0);
  TcpServer server(0);
  ASSERT_GT(server.port(), 0);
  std::thread loop([&] { server.serve(session, monotonic_seconds); });

  Client pilot(server.port());
  ASSERT_TRUE(pilot.connected());
  pilot.send(Json{{"type", "hello"}, {"version", kProtocolVersion}, {"role", "pilot"}});
  auto join = pilot.line();
  ASSERT_TRUE(join);
  EXPECT_EQ(Json::parse(*join)["role"], "pilot");

  Client observer(server.port());
  // Split across writes and CRLF-terminated: the server reassembles lines.
  observer.send(std::string(R"({"type":"hello",)"));
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  observer.send(std::string(R"("version":1,"role":"observer"})") + "\r\n");
  auto ojoin = observer.line();
  ASSERT_TRUE(ojoin);
  EXPECT_EQ(Json::parse(*ojoin)["role"], "observer");

  pilot.send(Json{{"type", "join"}, {"ready", true}});
  pilot.send(Json{{"type", "control"}, {"seq", 1}, {"aileron", 0.1}, {"elevator", 0.0}, {"rudder", 0.0}, {"throttle", 1.0}});
  int states = 0;
  std::optional<Json> result;
  while (auto l = pilot.line()) {
    const Json m = Json::parse(*l);
    if (m["type"] == "state") ++states;
    if (m["type"] == "result") result = m;
  }
  ASSERT_TRUE(result.has_value());
  EXPECT_EQ((*result)["reason"], "timeout");
  EXPECT_EQ((*result)["step"], 50);
  EXPECT_GE(states, 20);
  int observer_results = 0;
  while (auto l = observer.line()) observer_results += Json::parse(*l)["type"] == "result";
  EXPECT_EQ(observer_results, 1);
  loop.join();
  EXPECT_EQ(session.phase(), MatchSession::Phase::finished);
  EXPECT_EQ(session.last_control_seq(), 1);
}

TEST(Tcp, PilotHangUpEndsTheMatch) {
  MatchSession session = short_match(300.0);
  TcpServer server(0);
  std::thread loop([&] { server.serve(session, monotonic_seconds); });
  {
    Client pilot(server.port());
    pilot.send(Json{{"type", "hello"}, {"version", kProtocolVersion}});
    pilot.send(Json{{"type", "join"}, {"ready", true}});
    ASSERT_TRUE(pilot.line());
    ASSERT_TRUE(pilot.line());
  }
  loop.join();
  EXPECT_EQ(session.log().reason, TerminalReason::disconnect);
}

TEST(Tcp, StopFlagEndsServe) {
  MatchSession session = short_match(300.0);
  TcpServer server(0);
  std::atomic<bool> stop{false};
  std::thread loop([&] { server.serve(session, monotonic_seconds, &stop); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  stop = true;
  loop.join();
  EXPECT_EQ(session.phase(), MatchSession::Phase::lobby);
}

TEST(Tcp, OverlongLineIsRefused) {
  MatchSession session = short_match(300.0);
  TcpServer server(0);
  std::atomic<bool> stop{false};
  std::thread loop([&] { server.serve(session, monotonic_seconds, &stop); });
  Client c(server.port());
  c.send(std::string(TcpServer::kMaxLine + 10, 'x'));
  auto l = c.line();
  ASSERT_TRUE(l);
  EXPECT_EQ(Json::parse(*l)["code"], "line_too_long");
  EXPECT_FALSE(c.line(1.0));
  stop = true;
  loop.join();
}

TEST(Tcp, BadBindAddress) { EXPECT_THROW(TcpServer(0, "not-an-address"), NetError); }

}  // namespace
}  // namespace dogfight
