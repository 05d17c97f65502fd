#include "dogfight/tcp_server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>

namespace dogfight {

namespace {

struct Connection {
  int fd{-1};
  int client{0};
  std::string inbox;
  std::string outbox;
  bool closing{false};  // close once outbox drains
  bool dead{false};
};

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw NetError(std::string("fcntl failed: ") + std::strerror(errno));
  }
}

}  // namespace

double monotonic_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

TcpServer::TcpServer(int port, const std::string& bind_address) {
  if (port < 0 || port > 65535) throw NetError("port out of range");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw NetError(std::string("socket failed: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw NetError("bad bind address '" + bind_address + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    throw NetError("cannot listen on " + bind_address + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);
}

TcpServer::~TcpServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::serve(MatchSession& session, const std::function<double()>& clock, const std::atomic<bool>* stop,
                      double tick_seconds) {
  std::map<int, Connection> conns;  // by client id
  double next_tick = clock();

  auto route = [&](const std::vector<Outbound>& out) {
    for (const auto& o : out) {
      auto it = conns.find(o.client);
      if (it == conns.end() || it->second.dead) continue;
      it->second.outbox += o.line;
      it->second.outbox += '\n';
      if (o.close_after) it->second.closing = true;
    }
  };

  while (!(stop && stop->load())) {
    const bool finished = session.phase() == MatchSession::Phase::finished;
    if (finished) {
      bool pending = false;
      for (auto& [id, c] : conns) pending = pending || (!c.dead && !c.outbox.empty());
      if (!pending) break;
    }

    std::vector<pollfd> fds;
    std::vector<int> ids;
    fds.push_back({listen_fd_, static_cast<short>(finished ? 0 : POLLIN), 0});
    ids.push_back(0);
    for (auto& [id, c] : conns) {
      short ev = POLLIN;
      if (!c.outbox.empty()) ev |= POLLOUT;
      fds.push_back({c.fd, ev, 0});
      ids.push_back(id);
    }
    const double wait = std::max(0.0, next_tick - clock());
    const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(std::ceil(wait * 1000.0)));
    if (rc < 0 && errno != EINTR) throw NetError(std::string("poll failed: ") + std::strerror(errno));

    if (rc > 0 && (fds[0].revents & POLLIN)) {
      while (true) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        const int id = session.connect();
        conns.emplace(id, Connection{fd, id, {}, {}, false, false});
      }
    }

    for (std::size_t i = 1; rc > 0 && i < fds.size(); ++i) {
      Connection& c = conns.at(ids[i]);
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        while (true) {
          const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
          if (n > 0) {
            c.inbox.append(buf, static_cast<std::size_t>(n));
            continue;
          }
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) c.dead = true;
          break;
        }
        std::size_t nl;
        while (!c.closing && (nl = c.inbox.find('\n')) != std::string::npos) {
          std::string line = c.inbox.substr(0, nl);
          c.inbox.erase(0, nl + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) route(session.receive(c.client, line, clock()));
        }
        if (c.inbox.size() > kMaxLine) {
          c.outbox += R"({"type":"error","code":"line_too_long","message":"inbound line exceeds limit"})";
          c.outbox += '\n';
          c.closing = true;
          c.inbox.clear();
        }
      }
      if (!c.dead && !c.outbox.empty() && (fds[i].revents & POLLOUT)) {
        const ssize_t n = ::send(c.fd, c.outbox.data(), c.outbox.size(), MSG_NOSIGNAL);
        if (n > 0) {
          c.outbox.erase(0, static_cast<std::size_t>(n));
        } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          c.dead = true;
        }
      }
    }

    const double now = clock();
    if (now >= next_tick) {
      route(session.tick(now));
      next_tick = std::max(next_tick + tick_seconds, now);
    }

    for (auto it = conns.begin(); it != conns.end();) {
      Connection& c = it->second;
      if (c.dead || (c.closing && c.outbox.empty())) {
        ::close(c.fd);
        const int id = c.client;
        it = conns.erase(it);
        route(session.disconnect(id, clock()));
      } else {
        ++it;
      }
    }
  }
  for (auto& [id, c] : conns) ::close(c.fd);
}

}  // namespace dogfight
