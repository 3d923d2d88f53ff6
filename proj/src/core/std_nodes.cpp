#include "dbt/core/std_nodes.hpp"

#include <chrono>
#include <thread>

#include "dbt/core/behavior_tree.hpp"
#include "dbt/error.hpp"
#include "dbt/utility/aggregate.hpp"

namespace dbt {
namespace {

using utility::UtilityBounds;

ParamSpec option(std::string name, std::string type, std::optional<Value> def = std::nullopt) {
    ParamSpec s;
    s.name = std::move(name);
    s.type = TypeRef::parse(type);
    s.default_value = std::move(def);
    return s;
}

ParamSpec port(std::string name, std::string type, bool required = true) {
    ParamSpec s;
    s.name = std::move(name);
    s.type = TypeRef::parse(type);
    s.required = required;
    return s;
}

void require_children(const NodeContext& ctx, const std::vector<std::string>& children) {
    if (children.empty()) {
        throw TreeStructureError("flow control node '" + ctx.id() + "' has no children");
    }
}

class Sequence : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const auto children = ctx.children();
        require_children(ctx, children);
        for (const auto& c : children) {
            const NodeState s = effective_result(ctx.tick_child(c));
            if (s != NodeState::succeeded) {
                return s;
            }
        }
        return NodeState::succeeded;
    }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const auto u = ctx.children_utility();
        return u.empty() ? UtilityBounds::unknown() : utility::aggregate_sequence(u);
    }
};

class Fallback : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const auto children = ctx.children();
        require_children(ctx, children);
        for (const auto& c : children) {
            const NodeState s = effective_result(ctx.tick_child(c));
            if (s != NodeState::failed) {
                return s;
            }
        }
        return NodeState::failed;
    }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const auto u = ctx.children_utility();
        return u.empty() ? UtilityBounds::unknown() : utility::aggregate_fallback(u);
    }
};

class Parallel : public Node {
public:
    void on_setup(NodeContext& ctx) override {
        const auto k = ctx.option("success_threshold").as<std::int64_t>();
        const auto n = static_cast<std::int64_t>(ctx.children().size());
        if (k < 1 || k > n) {
            throw Error("success_threshold " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
        }
    }

    NodeState on_tick(NodeContext& ctx) override {
        const auto children = ctx.children();
        require_children(ctx, children);
        if (ctx.state() != NodeState::running) {
            resolved_.clear();
        }
        const auto k = static_cast<std::size_t>(ctx.option("success_threshold").as<std::int64_t>());
        const std::size_t n = children.size();
        std::size_t succeeded = 0;
        std::size_t failed = 0;
        for (const auto& c : children) {
            NodeState s;
            if (auto it = resolved_.find(c); it != resolved_.end()) {
                s = it->second;
            } else {
                s = effective_result(ctx.tick_child(c));
                if (s != NodeState::running) {
                    resolved_[c] = s;
                }
            }
            if (s == NodeState::succeeded) {
                ++succeeded;
            } else if (s == NodeState::failed) {
                ++failed;
            }
        }
        NodeState result = NodeState::running;
        if (succeeded >= k) {
            result = NodeState::succeeded;
        } else if (failed > n - k) {
            result = NodeState::failed;
        }
        if (result != NodeState::running) {
            for (const auto& c : children) {
                const NodeState s = ctx.tree().state(c);
                if (s == NodeState::running || s == NodeState::paused) {
                    ctx.untick_child(c);
                }
            }
            resolved_.clear();
        }
        return result;
    }

    void on_reset(NodeContext&) override { resolved_.clear(); }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const auto u = ctx.children_utility();
        if (u.empty()) {
            return UtilityBounds::unknown();
        }
        const auto k = ctx.option("success_threshold").as<std::int64_t>();
        if (k < 1 || static_cast<std::size_t>(k) > u.size()) {
            return UtilityBounds::infeasible();
        }
        return utility::aggregate_parallel(u, static_cast<std::size_t>(k));
    }

private:
    std::map<std::string, NodeState> resolved_;
};

class Inverter : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const auto children = ctx.children();
        require_children(ctx, children);
        switch (effective_result(ctx.tick_child(children.front()))) {
        case NodeState::succeeded: return NodeState::failed;
        case NodeState::failed: return NodeState::succeeded;
        default: return NodeState::running;
        }
    }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const auto children = ctx.children();
        if (children.empty()) {
            return UtilityBounds::unknown();
        }
        const auto u = ctx.child_utility(children.front());
        return {u.fail_min, u.fail_max, u.succ_min, u.succ_max};
    }
};

class Constant : public Node {
public:
    explicit Constant(NodeState result) : result_(result) {}
    NodeState on_tick(NodeContext&) override { return result_; }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(0, 0, 0, 0); }

private:
    NodeState result_;
};

/// Returns the listed states one per tick of an activation, repeating the last.
class Scripted : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        if (ctx.state() != NodeState::running) {
            ticks_ = 0;
        }
        const auto& script = ctx.option("script").as<List>();
        if (script.empty()) {
            throw Error("empty script");
        }
        const auto i = std::min<std::size_t>(ticks_, script.size() - 1);
        ++ticks_;
        const auto s = parse_state(script[i].as<std::string>());
        if (!s) {
            throw Error("script entry '" + script[i].as<std::string>() + "' is not a state");
        }
        ctx.set_output("ticks", static_cast<std::int64_t>(ticks_));
        return *s;
    }

    void on_reset(NodeContext&) override { ticks_ = 0; }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        if (ctx.option("infeasible").as<bool>()) {
            return UtilityBounds::infeasible();
        }
        const auto& b = ctx.option("utility").as<List>();
        if (b.size() != 4) {
            return UtilityBounds::unknown();
        }
        return UtilityBounds::constant(b[0].as_number(), b[1].as_number(), b[2].as_number(), b[3].as_number());
    }

private:
    std::size_t ticks_ = 0;
};

/// Sleeps in a background task.
class Wait : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        TaskHandle* t = ctx.task();
        if (t == nullptr) {
            const auto ms = ctx.option("duration_ms").as<std::int64_t>();
            t = &ctx.start_task(
                [ms](TaskControl& control) {
                    for (std::int64_t done = 0; done < ms; ++done) {
                        if (!control.checkpoint()) {
                            return false;
                        }
                        std::this_thread::sleep_for(std::chrono::milliseconds(1));
                    }
                    return true;
                },
                ctx.option("pausable").as<bool>());
        }
        switch (t->status()) {
        case TaskStatus::running: return NodeState::running;
        case TaskStatus::done_success: return NodeState::succeeded;
        default: return NodeState::failed;
        }
    }
};

class ConstantValue : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        ctx.set_output("value", ctx.option("value"));
        return NodeState::succeeded;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(0, 0, 0, 0); }
};

class Log : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        std::string line = ctx.option("message").as<std::string>();
        const Value& v = ctx.input("value");
        if (!v.is_none()) {
            line += line.empty() ? v.to_string() : " " + v.to_string();
        }
        ctx.emit("LOG", line);
        return NodeState::succeeded;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(0, 0, 0, 0); }
};

class AddInt : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        ctx.set_output("sum", ctx.input("a").as<std::int64_t>() + ctx.input("b").as<std::int64_t>());
        return NodeState::succeeded;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(1, 1, 1, 1); }
};

class CheckFlag : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const Value* v = ctx.tree().external(ctx.option("key").as<std::string>());
        return v != nullptr && v->is<bool>() && v->as<bool>() ? NodeState::succeeded : NodeState::failed;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(0, 0, 0, 0); }
};

class DetectBall : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const Value* v = ctx.tree().external("ball." + ctx.option("color").as<std::string>());
        if (v != nullptr && v->is<std::string>() && v->as<std::string>() == "searching") {
            return NodeState::running;
        }
        if (v == nullptr || !v->is<Pose2d>()) {
            return NodeState::failed;
        }
        ctx.set_output("ballPos", *v);
        return NodeState::succeeded;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(1, 1, 1, 1); }
};

class PickUpBall : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        if (ctx.state() != NodeState::running) {
            ticks_ = 0;
        }
        if (++ticks_ < ctx.option("ticks").as<std::int64_t>()) {
            return NodeState::running;
        }
        ctx.emit("PICKED_BALL", ctx.input("ballPos").to_string());
        return NodeState::succeeded;
    }

private:
    std::int64_t ticks_ = 0;
};

template <class T>
NodeFactory make() {
    return [](const NodeRecord&) { return std::make_unique<T>(); };
}

} // namespace

void register_standard_nodes(NodeLibrary& lib) {
    lib.add({"Sequence", unbounded_children, {}, {}, {}, "Ticks children in order until one does not succeed."},
            make<Sequence>());
    lib.add({"Fallback", unbounded_children, {}, {}, {}, "Ticks children in order until one does not fail."},
            make<Fallback>());
    lib.add({"Parallel",
             unbounded_children,
             {option("success_threshold", "int", Value(1))},
             {},
             {},
             "Ticks all children; succeeds once success_threshold of them succeeded."},
            make<Parallel>());
    lib.add({"Inverter", 1, {}, {}, {}, "Swaps success and failure of its child."}, make<Inverter>());
    lib.add({"Succeed", 0, {}, {}, {}, "Always succeeds."},
            [](const NodeRecord&) { return std::make_unique<Constant>(NodeState::succeeded); });
    lib.add({"Fail", 0, {}, {}, {}, "Always fails."},
            [](const NodeRecord&) { return std::make_unique<Constant>(NodeState::failed); });
    lib.add({"Scripted",
             0,
             {option("script", "list<string>", Value(List{Value("succeeded")})),
              option("utility", "list<float>", Value(List{})), option("infeasible", "bool", Value(false))},
             {},
             {port("ticks", "int")},
             "Plays back a fixed sequence of tick results."},
            make<Scripted>());
    lib.add({"Wait",
             0,
             {option("duration_ms", "int", Value(100)), option("pausable", "bool", Value(true))},
             {},
             {},
             "Waits in a background task."},
            make<Wait>());
    lib.add({"ConstantValue",
             0,
             {option("type", "type", Value("string")), option("value", "@type")},
             {},
             {port("value", "@type")},
             "Publishes its value option on the value output."},
            make<ConstantValue>());
    lib.add({"Log",
             0,
             {option("type", "type", Value("string")), option("message", "string", Value(""))},
             {port("value", "@type", false)},
             {},
             "Emits a LOG event with the message and the input value."},
            make<Log>());
    lib.add({"AddInt", 0, {}, {port("a", "int"), port("b", "int")}, {port("sum", "int")}, "sum = a + b"},
            make<AddInt>());
    lib.add({"CheckFlag", 0, {option("key", "string")}, {}, {}, "Succeeds when the external flag is true."},
            make<CheckFlag>());
}

void register_demo_nodes(NodeLibrary& lib) {
    lib.add({"DetectBall", 0, {option("color", "string")}, {}, {port("ballPos", "pose2d")},
             "Succeeds when a ball of the color is visible."},
            make<DetectBall>());
    lib.add({"PickUpBall", 0, {option("ticks", "int", Value(2))}, {port("ballPos", "pose2d")}, {},
             "Picks up the ball at ballPos over a few ticks."},
            make<PickUpBall>());
}

std::shared_ptr<NodeLibrary> standard_library() {
    auto lib = std::make_shared<NodeLibrary>();
    register_standard_nodes(*lib);
    register_demo_nodes(*lib);
    return lib;
}

} // namespace dbt
