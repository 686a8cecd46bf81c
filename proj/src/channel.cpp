#include "aw/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace aw {

namespace {

void throw_errno(const char* what) {
    throw std::runtime_error(std::string(what) + ": " + std::strerror(errno));
}

// Blocking full write; sockets may take the buffer in pieces.
void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("write");
        }
        off += static_cast<std::size_t>(n);
    }
}

// Reads up to the next newline, buffering any overshoot for the next call.
// Empty optional on orderly shutdown before a full line arrived.
bool read_line(int fd, std::string& buffer, std::string& line) {
    for (;;) {
        auto pos = buffer.find('\n');
        if (pos != std::string::npos) {
            line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            return true;
        }
        char chunk[4096];
        ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("read");
        }
        if (n == 0) return false;
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

} // namespace

TcpServer::TcpServer(std::uint16_t port, LineHandler handler) : handler_(std::move(handler)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw_errno("socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(listen_fd_);
        throw_errno("bind");
    }
    socklen_t len = sizeof addr;
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
        ::close(listen_fd_);
        throw_errno("getsockname");
    }
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 4) < 0) {
        ::close(listen_fd_);
        throw_errno("listen");
    }
    thread_ = std::thread([this] { serve(); });
}

TcpServer::~TcpServer() { stop(); }

std::string TcpServer::address() const { return "127.0.0.1:" + std::to_string(port_); }

void TcpServer::stop() {
    if (stopping_.exchange(true)) {
        if (thread_.joinable()) thread_.join();
        return;
    }
    // Closing the listener unblocks accept(); shutting down live connections
    // unblocks their reads. Workers close their own fds after delisting them,
    // so nothing here races a descriptor reuse.
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    {
        std::lock_guard<std::mutex> lock(clients_mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (thread_.joinable()) thread_.join();
}

void TcpServer::serve() {
    std::vector<std::thread> workers;
    while (!stopping_.load()) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break; // listener closed
        }
        {
            std::lock_guard<std::mutex> lock(clients_mutex_);
            client_fds_.push_back(fd);
        }
        workers.emplace_back([this, fd] { serve_client(fd); });
    }
    for (std::thread& w : workers) w.join();
}

void TcpServer::serve_client(int fd) {
    std::string buffer;
    std::string line;
    try {
        while (read_line(fd, buffer, line)) {
            std::string reply;
            {
                std::lock_guard<std::mutex> lock(handler_mutex_);
                reply = handler_(line);
            }
            write_all(fd, reply + "\n");
        }
    } catch (const std::exception&) {
        // Connection-level failure; drop this client, keep the rest.
    }
    {
        std::lock_guard<std::mutex> lock(clients_mutex_);
        std::erase(client_fds_, fd);
    }
    ::close(fd);
}

TcpClientLink::TcpClientLink(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {}

TcpClientLink::~TcpClientLink() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpClientLink::connect_now() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw_errno("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw std::runtime_error("bad address: " + host_);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd_);
        fd_ = -1;
        throw_errno("connect");
    }
}

std::string TcpClientLink::request(const std::string& line) {
    if (fd_ < 0) connect_now();
    write_all(fd_, line + "\n");
    std::string reply;
    if (!read_line(fd_, inbuf_, reply)) {
        throw std::runtime_error("peer closed the connection mid-request");
    }
    return reply;
}

} // namespace aw
