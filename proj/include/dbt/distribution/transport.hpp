#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dbt/distribution/message.hpp"

namespace dbt::distribution {

/// Point-to-point message delivery between executors.
class Transport {
public:
    virtual ~Transport() = default;
    virtual const std::string& address() const = 0;
    /// Throws TransportError when the destination cannot be reached.
    virtual void send(const std::string& to, const Message& m) = 0;
    /// Everything received since the last call, in arrival order.
    virtual std::vector<Message> receive() = 0;
};

/// Simulation transport. Sent messages stay in flight until deliver() is
/// called, so a scheduler decides when delivery happens. Messages still pass
/// through the frame encoding.
class InProcessNetwork : public std::enable_shared_from_this<InProcessNetwork> {
public:
    static std::shared_ptr<InProcessNetwork> create() { return std::shared_ptr<InProcessNetwork>(new InProcessNetwork); }

    /// Throws TransportError if the address is taken.
    std::shared_ptr<Transport> endpoint(const std::string& address);
    /// Moves every in-flight message to its inbox. Returns how many moved.
    std::size_t deliver();
    std::size_t in_flight() const;
    /// Messages to an unreachable address are dropped at send time.
    void set_reachable(const std::string& address, bool reachable);

private:
    InProcessNetwork() = default;
    friend class InProcessEndpoint;

    void post(const std::string& to, const Message& m);
    std::vector<Message> take(const std::string& address);
    void detach(const std::string& address);

    mutable std::mutex mu_;
    std::map<std::string, std::deque<Message>> inbox_;
    std::deque<std::pair<std::string, std::string>> flight_; ///< (to, frame)
    std::set<std::string> unreachable_;
};

namespace net {

/// Owning file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.release()) {}
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept {
        const int f = fd_;
        fd_ = -1;
        return f;
    }
    void close() noexcept;
    /// Wakes up a thread blocked reading or accepting on this socket.
    void shutdown() noexcept;

private:
    int fd_ = -1;
};

/// Listening socket on 127.0.0.1; port 0 picks a free port.
Socket listen_local(std::uint16_t port, std::uint16_t* bound_port = nullptr);
Socket connect(const std::string& host, std::uint16_t port);
/// "host:port"; throws TransportError when malformed.
std::pair<std::string, std::uint16_t> split_address(const std::string& address);
void write_all(int fd, const std::string& bytes);

/// Blocking framed JSON stream over one connection.
class FrameStream {
public:
    explicit FrameStream(Socket s) : sock_(std::move(s)) {}
    void send(const nlohmann::json& body);
    /// Empty when the peer closed the connection or the timeout passed.
    std::optional<nlohmann::json> receive(std::optional<std::chrono::milliseconds> timeout = std::nullopt);
    Socket& socket() noexcept { return sock_; }

private:
    Socket sock_;
    FrameDecoder decoder_;
    std::mutex write_mu_;
};

} // namespace net

/// TCP transport: one listener, one outgoing connection per destination,
/// a reader thread per accepted connection.
class TcpTransport : public Transport {
public:
    explicit TcpTransport(std::uint16_t port = 0);
    ~TcpTransport() override;

    const std::string& address() const override { return address_; }
    void send(const std::string& to, const Message& m) override;
    std::vector<Message> receive() override;

    std::uint64_t received_count() const noexcept { return received_; }
    std::uint64_t sent_count() const noexcept { return sent_; }

private:
    void accept_loop();
    void read_loop(int fd);

    std::string address_;
    net::Socket listener_;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;

    std::mutex mu_;
    std::vector<std::thread> readers_;
    std::vector<int> reader_fds_;
    std::deque<Message> inbox_;
    std::map<std::string, net::Socket> outgoing_;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> sent_{0};
};

} // namespace dbt::distribution
