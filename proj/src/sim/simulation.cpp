#include "dbt/sim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <utility>

#include "dbt/error.hpp"
#include "dbt/treefile/treefile.hpp"

namespace dbt::sim {

using distribution::Executor;
using distribution::Message;

namespace {

std::string clean(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string describe(const Message& m, const std::string& peer, bool outgoing) {
    std::string d = (outgoing ? "to=" : "from=") + peer + " cid=" + m.correlation_id;
    if (m.type == distribution::msg::utility_reply && m.payload.contains("utility")) {
        try {
            d += " utility=" + utility::UtilityBounds::from_json(m.payload.at("utility")).to_string();
        } catch (const std::exception&) {
        }
    } else if (m.type == distribution::msg::result) {
        d += " state=" + m.payload.value("finalState", std::string("?"));
    } else if (m.type == distribution::msg::shove_reject) {
        d += " reason=" + m.payload.value("reason", std::string());
    }
    return d;
}

/// Holds TCP arrivals until the step's delivery point, so a message is never
/// seen in the step it was sent, and orders them like the in-process
/// network: by sender in id order, FIFO per sender.
class GatedTcp : public distribution::Transport {
public:
    explicit GatedTcp(std::uint16_t port) : inner_(port) {}

    const std::string& address() const override { return inner_.address(); }
    void send(const std::string& to, const Message& m) override { inner_.send(to, m); }
    std::vector<Message> receive() override { return std::exchange(released_, {}); }

    void release() {
        auto batch = inner_.receive();
        std::stable_sort(batch.begin(), batch.end(), [](const Message& a, const Message& b) { return a.sender < b.sender; });
        released_.insert(released_.end(), batch.begin(), batch.end());
    }
    std::uint64_t sent() const { return inner_.sent_count(); }
    std::uint64_t received() const { return inner_.received_count(); }

private:
    distribution::TcpTransport inner_;
    std::vector<Message> released_;
};

} // namespace

Simulation::Simulation(Scenario scenario, std::shared_ptr<const NodeLibrary> library, SimulationOptions options)
    : scenario_(std::move(scenario)),
      library_(std::move(library)),
      options_(std::move(options)),
      world_(scenario_.make_world()),
      hz_(options_.hz.value_or(scenario_.hz.value_or(10.0))) {
    if (scenario_.robots.empty()) {
        throw ScenarioError("scenario has no robots");
    }
    if (hz_ <= 0) {
        throw ScenarioError("hz must be positive");
    }
    mission_robot_ = scenario_.robots.front().id;
    world_.on_event([this](std::string_view actor, std::string_view event, std::string_view detail) {
        record(actor, event, detail);
        for (std::size_t i = 0; i < scenario_.triggered.size(); ++i) {
            const auto& t = scenario_.triggered[i];
            if (!trigger_at_[i] && !trigger_done_[i] && t.event == event && t.subject == detail) {
                trigger_at_[i] = world_.clock() + t.delay;
            }
        }
    });
    trigger_at_.assign(scenario_.triggered.size(), std::nullopt);
    trigger_done_.assign(scenario_.triggered.size(), false);

    std::vector<const RobotSpec*> chosen;
    for (const auto& r : scenario_.robots) {
        const bool listed = std::find(options_.executors.begin(), options_.executors.end(), r.id) != options_.executors.end();
        const bool has_tree = !r.tree.empty() || options_.trees.count(r.id) != 0;
        if (options_.executors.empty() ? has_tree : listed) {
            if (!has_tree) throw ScenarioError("robot '" + r.id + "' has no tree");
            chosen.push_back(&r);
        }
    }
    for (const auto& id : options_.executors) {
        world_.robot(id);
    }
    if (chosen.empty() || chosen.front()->id != mission_robot_) {
        throw ScenarioError("the first robot '" + mission_robot_ + "' needs a tree");
    }

    if (options_.transport == TransportKind::in_process) {
        net_ = distribution::InProcessNetwork::create();
    }
    std::uint16_t port = options_.base_port;
    for (const RobotSpec* r : chosen) {
        Member m;
        m.handle = std::make_unique<RobotHandle>(RobotHandle{&world_, r->id});
        if (net_) {
            m.transport = net_->endpoint(r->id);
        } else {
            m.transport = std::make_shared<GatedTcp>(port);
            if (port != 0) ++port;
        }
        distribution::ExecutorConfig cfg;
        cfg.id = r->id;
        cfg.hz = hz_;
        RobotHandle* h = m.handle.get();
        cfg.provision = [h](BehaviorTree& t) { t.provide<RobotHandle>(h); };
        m.executor = std::make_unique<Executor>(cfg, m.transport, library_);
        const std::string id = r->id;
        m.executor->on_message([this, id](const Message& msg, const std::string& peer, bool outgoing) {
            if (outgoing) {
                record(id, msg.type, describe(msg, peer, true));
            } else if (options_.trace) {
                record(id, "RECV", msg.type + " " + describe(msg, peer, false));
            }
        });
        m.executor->on_tree_event([this, id](std::string_view node, std::string_view event, std::string_view detail) {
            record(id, event, std::string(node) + (detail.empty() ? "" : " ") + std::string(detail));
        });
        if (options_.trace) {
            m.executor->on_state_change([this, id](const std::string& node, NodeState from, NodeState to) {
                record(id, "STATE", node + " " + std::string(to_string(from)) + "->" + std::string(to_string(to)));
            });
        }
        auto tree = options_.trees.find(r->id);
        m.executor->load(tree != options_.trees.end() ? tree->second : treefile::load_tree_file(r->tree, *library_));
        members_.emplace(r->id, std::move(m));
    }
    for (auto& [a, ma] : members_) {
        for (auto& [b, mb] : members_) {
            if (a == b) continue;
            ma.executor->add_peer({b, mb.executor->address(), !mb.executor->tree()->nodes_of_kind("Slot").empty()});
        }
    }
}

Simulation::~Simulation() = default;

Executor& Simulation::executor(std::string_view robot) {
    auto it = members_.find(robot);
    if (it == members_.end()) throw UnknownRobot("no executor for robot '" + std::string(robot) + "'");
    return *it->second.executor;
}

const Executor& Simulation::executor(std::string_view robot) const {
    auto it = members_.find(robot);
    if (it == members_.end()) throw UnknownRobot("no executor for robot '" + std::string(robot) + "'");
    return *it->second.executor;
}

std::vector<std::string> Simulation::executor_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : members_) out.push_back(id);
    return out;
}

NodeState Simulation::mission_state() const { return executor(mission_robot_).tree()->root_state(); }

void Simulation::record(std::string_view actor, std::string_view event, std::string_view detail) {
    std::string line = std::to_string(world_.clock()) + "," + clean(actor) + "," + clean(event) + "," + clean(detail);
    for (const auto& s : sinks_) s(line);
    log_.push_back(std::move(line));
}

void Simulation::apply(const ForceDoor& a) { world_.force_door(a.door, a.open); }

void Simulation::step() {
    for (const auto& t : scenario_.timed) {
        if (t.tick == world_.clock()) apply(t.action);
    }
    for (std::size_t i = 0; i < scenario_.triggered.size(); ++i) {
        if (trigger_at_[i] && !trigger_done_[i] && *trigger_at_[i] <= world_.clock()) {
            trigger_done_[i] = true;
            apply(scenario_.triggered[i].action);
        }
    }
    world_.step();
    for (auto& [id, m] : members_) {
        m.executor->cycle();
    }
    deliver();
    ++steps_;
}

void Simulation::deliver() {
    if (net_) {
        net_->deliver();
        return;
    }
    // every message sent this step is in its receiver's queue before the next one
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    for (;;) {
        std::uint64_t sent = 0;
        std::uint64_t received = 0;
        for (const auto& [id, m] : members_) {
            const auto& t = static_cast<const GatedTcp&>(*m.transport);
            sent += t.sent();
            received += t.received();
        }
        if (received >= sent) {
            for (auto& [id, m] : members_) static_cast<GatedTcp&>(*m.transport).release();
            return;
        }
        if (std::chrono::steady_clock::now() > deadline) {
            throw TransportError("messages still in flight after 5 s");
        }
        std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
}

std::optional<NodeState> Simulation::run_until_result(std::uint64_t max_cycles) {
    for (std::uint64_t i = 0; i < max_cycles; ++i) {
        step();
        const NodeState s = mission_state();
        if (s == NodeState::succeeded || s == NodeState::failed || s == NodeState::error) {
            record(mission_robot_, "MISSION", to_string(s));
            return s;
        }
    }
    return std::nullopt;
}

} // namespace dbt::sim
