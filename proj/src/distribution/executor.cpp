#include "dbt/distribution/executor.hpp"

#include <algorithm>

#include "dbt/distribution/envelope.hpp"
#include "dbt/distribution/nodes.hpp"
#include "dbt/error.hpp"

namespace dbt::distribution {

using nlohmann::json;
using utility::UtilityBounds;

Executor::Executor(ExecutorConfig config, std::shared_ptr<Transport> transport,
                   std::shared_ptr<const NodeLibrary> library)
    : config_(std::move(config)), transport_(std::move(transport)), library_(std::move(library)) {
    if (config_.id.empty()) {
        throw std::invalid_argument("executor needs an id");
    }
    if (!transport_ || !library_) {
        throw std::invalid_argument("executor needs a transport and a node library");
    }
    if (config_.hz <= 0) {
        throw std::invalid_argument("hz must be positive");
    }
}

Executor::~Executor() = default;

std::int64_t Executor::now_ms() const {
    return static_cast<std::int64_t>(static_cast<double>(cycles_) * 1000.0 / config_.hz);
}

void Executor::load(TreeEnvironment env) {
    tree_.reset();
    EngineConfig ec;
    ec.hz = config_.hz;
    ec.clock = [this] { return now_ms(); };
    tree_ = std::make_unique<BehaviorTree>(std::move(env), library_, ec);
    tree_->provide<Executor>(this);
    if (config_.provision) {
        config_.provision(*tree_);
    }
    for (const auto& s : tree_sinks_) tree_->on_event(s);
    for (const auto& l : state_listeners_) tree_->on_state_change(l);
    refresh_neighbors();
    tree_->setup();
    announced_free_.reset();
}

void Executor::on_tree_event(BehaviorTree::EventSink s) {
    if (tree_) tree_->on_event(s);
    tree_sinks_.push_back(std::move(s));
}

void Executor::on_state_change(BehaviorTree::StateListener l) {
    if (tree_) tree_->on_state_change(l);
    state_listeners_.push_back(std::move(l));
}

void Executor::add_peer(ExecutorDescriptor peer) {
    if (peer.id == config_.id) {
        return;
    }
    auto it = std::find_if(peers_.begin(), peers_.end(), [&](const auto& p) { return p.id == peer.id; });
    if (it != peers_.end()) {
        *it = std::move(peer);
    } else {
        peers_.push_back(std::move(peer));
        std::sort(peers_.begin(), peers_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    }
    refresh_neighbors();
}

void Executor::refresh_neighbors() {
    if (tree_) {
        tree_->set_neighbors(peers_);
    }
}

std::optional<NodeState> Executor::cycle() {
    drain();
    std::optional<NodeState> out;
    if (tree_) {
        const NodeState s = tree_->root_state();
        if (s != NodeState::uninitialized && s != NodeState::error && s != NodeState::shutdown) {
            out = tree_->tick_cycle();
        } else {
            out = s;
        }
    }
    const bool free = slot_free();
    if (!announced_free_ || *announced_free_ != free ||
        (config_.announce_every > 0 && cycles_ % static_cast<std::uint64_t>(config_.announce_every) == 0)) {
        announce();
    }
    ++cycles_;
    return out;
}

void Executor::announce() {
    const bool free = slot_free();
    announced_free_ = free;
    for (const auto& p : peers_) {
        try {
            send(p.id, msg::announce, id() + "-announce", {{"slotAvailable", free}, {"address", address()}});
        } catch (const TransportError&) {
            // peer gone; it will miss this announcement
        }
    }
}

std::string Executor::next_correlation_id() { return config_.id + "-" + std::to_string(++next_cid_); }

void Executor::send(const std::string& peer, std::string_view type, const std::string& correlation_id, json payload) {
    auto it = std::find_if(peers_.begin(), peers_.end(), [&](const auto& p) { return p.id == peer; });
    if (it == peers_.end()) {
        throw UnknownNode(peer);
    }
    Message m{std::string(type), correlation_id, config_.id, std::move(payload)};
    transport_->send(it->address, m);
    notify(m, peer, true);
}

std::optional<Message> Executor::take_reply(const std::string& correlation_id) {
    auto it = replies_.find(correlation_id);
    if (it == replies_.end() || it->second.empty()) {
        return std::nullopt;
    }
    Message m = std::move(it->second.front());
    it->second.pop_front();
    if (it->second.empty()) {
        replies_.erase(it);
    }
    return m;
}

void Executor::forget(const std::string& correlation_id) {
    replies_.erase(correlation_id);
    forgotten_.insert(correlation_id);
}

std::size_t Executor::pending_replies() const {
    std::size_t n = 0;
    for (const auto& [cid, q] : replies_) n += q.size();
    return n;
}

void Executor::notify(const Message& m, const std::string& peer, bool outgoing) const {
    for (const auto& o : observers_) {
        o(m, peer, outgoing);
    }
}

void Executor::drain() {
    for (const auto& m : transport_->receive()) {
        notify(m, m.sender, false);
        handle(m);
    }
}

void Executor::handle(const Message& m) {
    if (m.type == msg::utility_query) {
        std::string reason;
        const UtilityBounds u = answer_query(m.payload.value("shape", json()), &reason);
        json payload{{"utility", u.to_json()}};
        if (!reason.empty()) payload["reason"] = reason;
        try {
            send(m.sender, msg::utility_reply, m.correlation_id, std::move(payload));
        } catch (const Error&) {
        }
    } else if (m.type == msg::shove) {
        handle_shove(m);
    } else if (m.type == msg::cancel) {
        if (tree_) {
            for (auto& [sid, slot] : slots()) {
                slot->cancel(*tree_, sid, m.correlation_id);
            }
        }
    } else if (m.type == msg::announce) {
        auto it = std::find_if(peers_.begin(), peers_.end(), [&](const auto& p) { return p.id == m.sender; });
        if (it != peers_.end()) {
            it->slot_available = m.payload.value("slotAvailable", false);
        } else if (m.payload.contains("address")) {
            add_peer({m.sender, m.payload.value("address", ""), m.payload.value("slotAvailable", false)});
        }
        refresh_neighbors();
    } else if (m.type == msg::utility_reply || m.type == msg::shove_ack || m.type == msg::shove_reject ||
               m.type == msg::result) {
        if (forgotten_.count(m.correlation_id) == 0) {
            replies_[m.correlation_id].push_back(m);
        }
    }
}

void Executor::handle_shove(const Message& m) {
    std::optional<std::string> reject = std::string("SlotOccupied");
    if (tree_) {
        for (auto& [sid, slot] : slots()) {
            if (!slot->occupied()) {
                reject = slot->receive(*tree_, sid, m.payload, m.sender);
                break;
            }
        }
    }
    try {
        if (reject) {
            send(m.sender, msg::shove_reject, m.correlation_id, {{"reason", *reject}});
        } else {
            send(m.sender, msg::shove_ack, m.correlation_id, json::object());
        }
    } catch (const Error&) {
    }
}

std::vector<std::pair<std::string, Slot*>> Executor::slots() const {
    std::vector<std::pair<std::string, Slot*>> out;
    if (!tree_) return out;
    for (const auto& id : tree_->nodes_of_kind("Slot")) {
        if (auto* s = tree_->behavior_as<Slot>(id)) {
            out.emplace_back(id, s);
        }
    }
    return out;
}

bool Executor::slot_free() const {
    for (const auto& [id, s] : slots()) {
        if (!s->occupied()) return true;
    }
    return false;
}

UtilityBounds Executor::answer_query(const json& shape, std::string* reason) const {
    auto refuse = [&](std::string why) {
        if (reason) *reason = std::move(why);
        return UtilityBounds::infeasible();
    };
    if (!slot_free()) {
        return refuse("no free slot");
    }
    try {
        TreeEnvironment env = decode_shape(shape, *library_, tree_->env().types);
        EngineConfig ec;
        ec.hz = config_.hz;
        ec.clock = [this] { return now_ms(); };
        BehaviorTree probe(std::move(env), library_, ec);
        if (config_.provision) {
            config_.provision(probe);
        }
        return probe.tree_utility();
    } catch (const Error& e) {
        return refuse(e.what());
    }
}

} // namespace dbt::distribution
