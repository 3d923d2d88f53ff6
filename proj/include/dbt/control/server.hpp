#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "dbt/control/session.hpp"
#include "dbt/distribution/transport.hpp"

namespace dbt::control {

inline constexpr const char* event_type = "EVENT";

/// Serves a ControlSession over TCP with the distribution framing. Each
/// connection gets replies to its own commands; snapshots and event-log
/// lines (EVENT, payload {line}) go to every connection. Commands are only
/// executed by run(), between cycles.
class ControlServer {
public:
    /// Port 0 picks a free port.
    ControlServer(ControlSession& session, std::uint16_t port = 0);
    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;
    ~ControlServer();

    std::uint16_t port() const noexcept { return port_; }

    /// Tick loop on the calling thread until stop(): queued commands, then
    /// one auto-run cycle per period while tickUntilResult is in effect.
    void run(std::chrono::milliseconds period);
    /// Safe from any thread.
    void stop();

    std::size_t connections() const;

private:
    struct Connection {
        std::unique_ptr<distribution::net::FrameStream> stream;
        std::thread reader;
        bool closed = false;
    };
    struct Pending {
        int connection;
        distribution::Message command;
    };

    void accept_loop();
    void read_loop(int id, distribution::net::FrameStream* stream);
    void send_to(int id, const distribution::Message& m);
    void broadcast(const distribution::Message& m);

    ControlSession& session_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true); ///< guards the session's log sink
    std::uint16_t port_ = 0;
    distribution::net::Socket listener_;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;

    mutable std::mutex mu_;
    std::condition_variable wake_;
    std::map<int, Connection> connections_;
    int next_id_ = 0;
    std::deque<Pending> queue_;
};

} // namespace dbt::control
