#include "dbt/control/server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>

#include "dbt/error.hpp"

namespace dbt::control {

using distribution::Message;
using nlohmann::json;
namespace net = distribution::net;

ControlServer::ControlServer(ControlSession& session, std::uint16_t port) : session_(session) {
    listener_ = net::listen_local(port, &port_);
    session_.simulation().on_line([this, alive = alive_](const std::string& line) {
        if (*alive) broadcast({event_type, "", server_id, {{"line", line}}});
    });
    acceptor_ = std::thread([this] { accept_loop(); });
}

ControlServer::~ControlServer() {
    *alive_ = false;
    stop();
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> readers;
    {
        std::lock_guard lock(mu_);
        for (auto& [id, c] : connections_) {
            c.stream->socket().shutdown();
            readers.push_back(std::move(c.reader));
        }
    }
    for (auto& t : readers) {
        if (t.joinable()) t.join();
    }
}

void ControlServer::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    wake_.notify_all();
}

std::size_t ControlServer::connections() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [id, c] : connections_) n += c.closed ? 0 : 1;
    return n;
}

void ControlServer::accept_loop() {
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
        const int id = next_id_++;
        Connection& c = connections_[id];
        c.stream = std::make_unique<net::FrameStream>(net::Socket(fd));
        c.reader = std::thread([this, id, s = c.stream.get()] { read_loop(id, s); });
    }
}

void ControlServer::read_loop(int id, net::FrameStream* stream) {
    while (true) {
        std::optional<json> body;
        try {
            body = stream->receive();
        } catch (const Error&) {
            break;
        }
        if (!body) break;
        try {
            Message m = Message::from_json(*body);
            std::lock_guard lock(mu_);
            queue_.push_back({id, std::move(m)});
        } catch (const Error& e) {
            send_to(id, {error, body->value("correlationId", std::string()), server_id, {{"message", e.what()}}});
            continue;
        }
        wake_.notify_all();
    }
    std::lock_guard lock(mu_);
    connections_[id].closed = true;
}

void ControlServer::send_to(int id, const Message& m) {
    net::FrameStream* s = nullptr;
    {
        std::lock_guard lock(mu_);
        auto it = connections_.find(id);
        if (it == connections_.end() || it->second.closed) return;
        s = it->second.stream.get();
    }
    try {
        s->send(m.to_json());
    } catch (const Error&) {
        // the reader notices the broken connection
    }
}

void ControlServer::broadcast(const Message& m) {
    std::vector<int> ids;
    {
        std::lock_guard lock(mu_);
        for (const auto& [id, c] : connections_) {
            if (!c.closed) ids.push_back(id);
        }
    }
    for (int id : ids) send_to(id, m);
}

void ControlServer::run(std::chrono::milliseconds period) {
    auto next = std::chrono::steady_clock::now();
    while (true) {
        std::deque<Pending> batch;
        {
            std::unique_lock lock(mu_);
            if (!session_.auto_running()) {
                wake_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            } else {
                wake_.wait_until(lock, next, [&] { return stopping_.load() || !queue_.empty(); });
            }
            if (stopping_) return;
            batch.swap(queue_);
        }
        for (const auto& p : batch) {
            for (const auto& reply : session_.handle(p.command)) {
                if (reply.type == snapshot_type) {
                    broadcast(reply);
                } else {
                    send_to(p.connection, reply);
                }
            }
        }
        if (session_.auto_running() && std::chrono::steady_clock::now() >= next) {
            if (auto snap = session_.advance()) broadcast(*snap);
            next = std::chrono::steady_clock::now() + period;
        }
    }
}

} // namespace dbt::control
