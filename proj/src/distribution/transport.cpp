#include "dbt/distribution/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dbt/error.hpp"

namespace dbt::distribution {

using nlohmann::json;

class InProcessEndpoint : public Transport {
public:
    InProcessEndpoint(std::shared_ptr<InProcessNetwork> net, std::string address)
        : net_(std::move(net)), address_(std::move(address)) {}
    ~InProcessEndpoint() override { net_->detach(address_); }

    const std::string& address() const override { return address_; }
    void send(const std::string& to, const Message& m) override { net_->post(to, m); }
    std::vector<Message> receive() override { return net_->take(address_); }

private:
    std::shared_ptr<InProcessNetwork> net_;
    std::string address_;
};

std::shared_ptr<Transport> InProcessNetwork::endpoint(const std::string& address) {
    {
        std::lock_guard lock(mu_);
        if (!inbox_.try_emplace(address).second) {
            throw TransportError("address '" + address + "' is already in use");
        }
    }
    return std::make_shared<InProcessEndpoint>(shared_from_this(), address);
}

void InProcessNetwork::post(const std::string& to, const Message& m) {
    std::lock_guard lock(mu_);
    if (inbox_.find(to) == inbox_.end()) {
        throw TransportError("no endpoint at '" + to + "'");
    }
    if (unreachable_.count(to) != 0) {
        return;
    }
    flight_.emplace_back(to, encode_frame(m));
}

std::size_t InProcessNetwork::deliver() {
    std::lock_guard lock(mu_);
    const std::size_t n = flight_.size();
    for (auto& [to, frame] : flight_) {
        auto it = inbox_.find(to);
        if (it == inbox_.end()) {
            continue;
        }
        FrameDecoder d;
        d.feed(frame);
        it->second.push_back(Message::from_json(*d.next()));
    }
    flight_.clear();
    return n;
}

std::size_t InProcessNetwork::in_flight() const {
    std::lock_guard lock(mu_);
    return flight_.size();
}

void InProcessNetwork::set_reachable(const std::string& address, bool reachable) {
    std::lock_guard lock(mu_);
    if (reachable) {
        unreachable_.erase(address);
    } else {
        unreachable_.insert(address);
    }
}

std::vector<Message> InProcessNetwork::take(const std::string& address) {
    std::lock_guard lock(mu_);
    auto& q = inbox_[address];
    std::vector<Message> out(std::make_move_iterator(q.begin()), std::make_move_iterator(q.end()));
    q.clear();
    return out;
}

void InProcessNetwork::detach(const std::string& address) {
    std::lock_guard lock(mu_);
    inbox_.erase(address);
}

namespace net {

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.release();
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw TransportError(what + ": " + std::strerror(errno)); }

} // namespace

Socket listen_local(std::uint16_t port, std::uint16_t* bound_port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) fail("socket");
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        fail("bind to port " + std::to_string(port));
    }
    if (::listen(s.fd(), 16) != 0) fail("listen");
    if (bound_port != nullptr) {
        socklen_t len = sizeof addr;
        ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
        *bound_port = ntohs(addr.sin_port);
    }
    return s;
}

Socket connect(const std::string& host, std::uint16_t port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw TransportError("bad IPv4 address '" + host + "'");
    }
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        fail("connect to " + host + ":" + std::to_string(port));
    }
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        throw TransportError("address '" + address + "' is not host:port");
    }
    int port = 0;
    try {
        port = std::stoi(address.substr(colon + 1));
    } catch (const std::exception&) {
        throw TransportError("address '" + address + "' has a bad port");
    }
    if (port <= 0 || port > 65535) {
        throw TransportError("address '" + address + "' has a bad port");
    }
    return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

void write_all(int fd, const std::string& bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send");
        }
        done += static_cast<std::size_t>(n);
    }
}

void FrameStream::send(const json& body) {
    std::lock_guard lock(write_mu_);
    write_all(sock_.fd(), encode_frame(body));
}

std::optional<json> FrameStream::receive(std::optional<std::chrono::milliseconds> timeout) {
    const auto deadline = timeout ? std::chrono::steady_clock::now() + *timeout : std::chrono::steady_clock::time_point{};
    char buf[4096];
    while (true) {
        if (auto j = decoder_.next()) {
            return j;
        }
        if (timeout) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                return std::nullopt;
            }
            pollfd p{sock_.fd(), POLLIN, 0};
            const int r = ::poll(&p, 1, static_cast<int>(left.count()));
            if (r == 0) return std::nullopt;
            if (r < 0 && errno != EINTR) fail("poll");
        }
        const ssize_t n = ::recv(sock_.fd(), buf, sizeof buf, 0);
        if (n == 0) return std::nullopt;
        if (n < 0) {
            if (errno == EINTR) continue;
            return std::nullopt;
        }
        decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    }
}

} // namespace net

TcpTransport::TcpTransport(std::uint16_t port) {
    std::uint16_t bound = 0;
    listener_ = net::listen_local(port, &bound);
    address_ = "127.0.0.1:" + std::to_string(bound);
    acceptor_ = std::thread([this] { accept_loop(); });
}

TcpTransport::~TcpTransport() {
    stopping_ = true;
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> readers;
    {
        std::lock_guard lock(mu_);
        for (int fd : reader_fds_) ::shutdown(fd, SHUT_RDWR);
        readers.swap(readers_);
        outgoing_.clear();
    }
    for (auto& t : readers) t.join();
}

void TcpTransport::accept_loop() {
    while (!stopping_) {
        const int fd = ::accept(listener_.fd(), nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return;
        }
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        reader_fds_.push_back(fd);
        readers_.emplace_back([this, fd] { read_loop(fd); });
    }
}

void TcpTransport::read_loop(int fd) {
    net::FrameStream stream{net::Socket(fd)};
    while (true) {
        std::optional<json> body;
        try {
            body = stream.receive();
        } catch (const Error&) {
            break; // garbage on the wire: drop the connection
        }
        if (!body) break;
        try {
            Message m = Message::from_json(*body);
            std::lock_guard lock(mu_);
            inbox_.push_back(std::move(m));
            ++received_;
        } catch (const DeserializationError&) {
        }
    }
    std::lock_guard lock(mu_);
    std::erase(reader_fds_, fd);
}

void TcpTransport::send(const std::string& to, const Message& m) {
    const std::string frame = encode_frame(m);
    std::lock_guard lock(mu_);
    auto it = outgoing_.find(to);
    if (it == outgoing_.end()) {
        auto [host, port] = net::split_address(to);
        it = outgoing_.emplace(to, net::connect(host, port)).first;
    }
    try {
        net::write_all(it->second.fd(), frame);
    } catch (const TransportError&) {
        outgoing_.erase(it);
        throw;
    }
    ++sent_;
}

std::vector<Message> TcpTransport::receive() {
    std::lock_guard lock(mu_);
    std::vector<Message> out(std::make_move_iterator(inbox_.begin()), std::make_move_iterator(inbox_.end()));
    inbox_.clear();
    return out;
}

} // namespace dbt::distribution
