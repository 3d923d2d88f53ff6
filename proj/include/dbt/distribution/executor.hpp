#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/core/behavior_tree.hpp"
#include "dbt/distribution/message.hpp"
#include "dbt/distribution/transport.hpp"

namespace dbt::distribution {

class Slot;

struct ExecutorConfig {
    std::string id;
    double hz = 10.0;
    /// Logical milliseconds a Shovable waits for utility replies and for a shove ack.
    std::int64_t query_timeout_ms = 500;
    std::int64_t ack_timeout_ms = 500;
    /// Announce slot availability every this many cycles (and whenever it changes).
    int announce_every = 10;
    /// Called on the main tree and on every tree built to answer a utility
    /// query, to hand nodes their services.
    std::function<void(BehaviorTree&)> provision;
};

/// One robot's runtime: a tick loop over its tree plus a mailbox. Messages
/// are only handled in drain(), between tick cycles. Time is logical:
/// 1000 / hz milliseconds per cycle.
class Executor {
public:
    using MessageObserver = std::function<void(const Message& m, const std::string& peer, bool outgoing)>;

    Executor(ExecutorConfig config, std::shared_ptr<Transport> transport, std::shared_ptr<const NodeLibrary> library);
    Executor(const Executor&) = delete;
    Executor& operator=(const Executor&) = delete;
    ~Executor();

    const std::string& id() const noexcept { return config_.id; }
    const std::string& address() const { return transport_->address(); }
    const ExecutorConfig& config() const noexcept { return config_; }
    std::shared_ptr<const NodeLibrary> library() const noexcept { return library_; }

    /// Replaces the tree and sets it up.
    void load(TreeEnvironment env);
    BehaviorTree* tree() noexcept { return tree_.get(); }
    const BehaviorTree* tree() const noexcept { return tree_.get(); }

    void add_peer(ExecutorDescriptor peer);
    const std::vector<ExecutorDescriptor>& peers() const noexcept { return peers_; }

    /// drain(), then one tick cycle unless the root is uninitialized, in error or
    /// shut down. Returns the root state.
    std::optional<NodeState> cycle();
    void drain();
    void announce();

    std::uint64_t cycles() const noexcept { return cycles_; }
    std::int64_t now_ms() const;

    std::string next_correlation_id();
    /// Throws UnknownNode for peers that were never added, TransportError from the transport.
    void send(const std::string& peer, std::string_view type, const std::string& correlation_id,
              nlohmann::json payload);
    /// Oldest unclaimed reply with this correlation id.
    std::optional<Message> take_reply(const std::string& correlation_id);
    /// Drops queued and future replies for the id.
    void forget(const std::string& correlation_id);
    std::size_t pending_replies() const;

    /// Utility of a subtree shape on this executor: all-infeasible when no
    /// slot is free or the shape does not fit the local library.
    utility::UtilityBounds answer_query(const nlohmann::json& shape, std::string* reason = nullptr) const;

    bool slot_free() const;
    /// Slot nodes of the tree by id.
    std::vector<std::pair<std::string, Slot*>> slots() const;

    void on_message(MessageObserver o) { observers_.push_back(std::move(o)); }
    /// Attached to every tree this executor loads.
    void on_tree_event(BehaviorTree::EventSink s);
    void on_state_change(BehaviorTree::StateListener l);

private:
    void handle(const Message& m);
    void handle_shove(const Message& m);
    void refresh_neighbors();
    void notify(const Message& m, const std::string& peer, bool outgoing) const;

    ExecutorConfig config_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<const NodeLibrary> library_;
    std::unique_ptr<BehaviorTree> tree_;

    std::vector<ExecutorDescriptor> peers_;
    std::map<std::string, std::deque<Message>> replies_;
    std::set<std::string> forgotten_;
    std::uint64_t cycles_ = 0;
    std::uint64_t next_cid_ = 0;
    std::optional<bool> announced_free_;

    std::vector<MessageObserver> observers_;
    std::vector<BehaviorTree::EventSink> tree_sinks_;
    std::vector<BehaviorTree::StateListener> state_listeners_;
};

} // namespace dbt::distribution
