#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace aw {

// One request line out, one reply line in. Parties never share memory; every
// exchange crosses a link so the wire bytes are the interface.
class PeerLink {
public:
    virtual ~PeerLink() = default;
    virtual std::string request(const std::string& line) = 0;
};

using LineHandler = std::function<std::string(const std::string&)>;

// In-process link. The handler stands in for the remote party; adversary
// scenarios wrap it to tamper with traffic without touching session code.
class LocalLink final : public PeerLink {
public:
    explicit LocalLink(LineHandler handler) : handler_(std::move(handler)) {}
    std::string request(const std::string& line) override { return handler_(line); }

private:
    LineHandler handler_;
};

// Newline-delimited request/reply server over a localhost TCP socket. Each
// connection gets its own thread so several parties can hold persistent links
// open at once; handler calls are serialized behind one mutex, so the wrapped
// session never sees concurrent messages.
class TcpServer {
public:
    // Binds 127.0.0.1:port (0 picks a free port) and starts the accept loop.
    TcpServer(std::uint16_t port, LineHandler handler);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    std::string address() const;
    void stop();

private:
    void serve();
    void serve_client(int fd);

    LineHandler handler_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
    std::mutex handler_mutex_;
    std::mutex clients_mutex_;
    std::vector<int> client_fds_; // live connections, for unblocking on stop
};

// Client side of the newline protocol. Connects lazily on first request and
// keeps the connection for the session.
class TcpClientLink final : public PeerLink {
public:
    TcpClientLink(std::string host, std::uint16_t port);
    ~TcpClientLink();

    TcpClientLink(const TcpClientLink&) = delete;
    TcpClientLink& operator=(const TcpClientLink&) = delete;

    std::string request(const std::string& line) override;

private:
    void connect_now();

    std::string host_;
    std::uint16_t port_ = 0;
    int fd_ = -1;
    std::string inbuf_;
};

} // namespace aw
