#pragma once

#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "builder.hpp"
#include "random_tree.hpp"
#include "dbt/dataflow/ops.hpp"
#include "dbt/distribution/executor.hpp"
#include "dbt/distribution/nodes.hpp"

namespace dbt::test {

/// What an executor can do and at which cost. Provided to trees as a service.
struct Skills {
    std::string who;
    std::map<std::string, double> cost;
};

/// Leaf that needs a skill: infeasible without it, otherwise the skill's
/// cost. Runs for `ticks` ticks, then succeeds and reports who ran it.
class SkillNode : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const Skills* s = ctx.service<Skills>();
        if (s == nullptr || s->cost.count(ctx.option("skill").as<std::string>()) == 0) {
            return NodeState::failed;
        }
        if (ctx.state() != NodeState::running) ticks_ = 0;
        if (++ticks_ < ctx.option("ticks").as<std::int64_t>()) return NodeState::running;
        ctx.set_output("by", s->who);
        return NodeState::succeeded;
    }
    void on_reset(NodeContext&) override { ticks_ = 0; }
    utility::UtilityBounds utility(const UtilityContext& ctx) const override {
        const Skills* s = ctx.service<Skills>();
        const auto& skill = ctx.option("skill").as<std::string>();
        if (s == nullptr || s->cost.count(skill) == 0) return utility::UtilityBounds::infeasible();
        const double c = s->cost.at(skill);
        return utility::UtilityBounds::constant(c, c, c, c);
    }

private:
    std::int64_t ticks_ = 0;
};

inline std::shared_ptr<NodeLibrary> dist_library() {
    auto lib = standard_library();
    distribution::register_distribution_nodes(*lib);
    ParamSpec skill{"skill", TypeRef::concrete("string"), std::nullopt, true, ""};
    ParamSpec ticks{"ticks", TypeRef::concrete("int"), Value(1), true, ""};
    ParamSpec by{"by", TypeRef::concrete("string"), std::nullopt, true, ""};
    lib->add({"Skill", 0, {skill, ticks}, {}, {by}, "test leaf"},
             [](const NodeRecord&) { return std::make_unique<SkillNode>(); });
    return lib;
}

/// Executors on one in-process network, stepped in id order.
struct Team {
    std::shared_ptr<NodeLibrary> lib = dist_library();
    std::shared_ptr<distribution::InProcessNetwork> net = distribution::InProcessNetwork::create();
    std::map<std::string, std::unique_ptr<Skills>> skills;
    std::map<std::string, std::unique_ptr<distribution::Executor>> ex;
    std::vector<std::string> log; ///< "sender>receiver TYPE cid" at send time

    distribution::Executor& add(const std::string& id, TreeEnvironment env, std::map<std::string, double> cost = {}) {
        auto& s = skills[id];
        s = std::make_unique<Skills>(Skills{id, std::move(cost)});
        distribution::ExecutorConfig cfg;
        cfg.id = id;
        Skills* sp = s.get();
        cfg.provision = [sp](BehaviorTree& t) { t.provide<Skills>(sp); };
        auto e = std::make_unique<distribution::Executor>(cfg, net->endpoint(id), lib);
        e->on_message([this, id](const distribution::Message& m, const std::string& peer, bool out) {
            if (out) log.push_back(id + ">" + peer + " " + m.type + " " + m.correlation_id);
        });
        e->load(std::move(env));
        auto& ref = *e;
        ex[id] = std::move(e);
        return ref;
    }

    void connect_all() {
        for (auto& [a, ea] : ex) {
            for (auto& [b, eb] : ex) {
                if (a != b) ea->add_peer({b, b, !eb->tree()->nodes_of_kind("Slot").empty()});
            }
        }
    }

    void step() {
        for (auto& [id, e] : ex) e->cycle();
        net->deliver();
    }

    /// Steps until `main`'s root leaves running; returns its state.
    NodeState run(const std::string& main, int max_steps = 200) {
        for (int i = 0; i < max_steps; ++i) {
            step();
            const NodeState s = ex.at(main)->tree()->root_state();
            if (s != NodeState::running) return s;
        }
        return NodeState::running;
    }

    int count(const std::string& type) const {
        int n = 0;
        for (const auto& l : log) n += l.find(" " + type + " ") != std::string::npos;
        return n;
    }
};

inline TreeEnvironment slot_tree(const std::shared_ptr<NodeLibrary>& lib) {
    return Builder(lib).node("slot", "Slot").env();
}

struct Outcome {
    NodeState state = NodeState::running;
    std::map<ParamId, Value> public_outputs;
    bool operator==(const Outcome&) const = default;
};

/// A random subtree behind a Shovable, with producers before it and
/// consumers after it in a root Sequence, so wirings cross the boundary.
struct EquivalenceCase {
    TreeEnvironment env;
    std::set<ParamId> public_outputs;
};

inline EquivalenceCase equivalence_case(std::mt19937& rng, const std::shared_ptr<NodeLibrary>& lib, int max_nodes = 12) {
    auto sub = random_tree(rng, max_nodes, lib);
    const TreeEnvironment senv = sub.builder.env();
    Builder b(lib);
    b.node("root", "Sequence");

    std::set<ParamId> wired_inputs;
    for (const auto& w : senv.data.wirings()) wired_inputs.insert(w.target);
    std::vector<Wiring> cross;
    int producers = 0;
    for (const auto& [pid, p] : senv.data.parameters()) {
        if (pid.kind != ParamKind::input || wired_inputs.count(pid) != 0 || rng() % 2 == 0) continue;
        const auto type = dataflow::resolve(p, senv);
        const std::string id = "p" + std::to_string(producers++);
        b.node(id, "ConstantValue", {{"type", Value(*type)}, {"value", random_value(rng, *type)}}, "root");
        cross.push_back({ParamId{id, ParamKind::output, "value"}, pid});
    }
    b.node("shv", "Shovable", {{"mode", Value("auto")}}, "root");
    for (const auto& id : senv.tree.preorder()) {
        const auto& r = senv.tree.node(id);
        const auto parent = senv.tree.parent(id);
        b.node(id, r.kind, r.options, parent ? *parent : "shv");
    }
    for (const auto& w : senv.data.wirings()) b.wire(w.source.node, w.source.name, w.target.node, w.target.name);
    std::set<ParamId> outs;
    int consumers = 0;
    for (const auto& [pid, p] : senv.data.parameters()) {
        if (pid.kind != ParamKind::output || rng() % 2 == 0) continue;
        const auto type = dataflow::resolve(p, senv);
        const std::string id = "c" + std::to_string(consumers++);
        b.node(id, "Log", {{"type", Value(*type)}}, "root");
        cross.push_back({pid, ParamId{id, ParamKind::input, "value"}});
        outs.insert(pid);
    }
    for (const auto& w : cross) b.wire(w.source.node, w.source.name, w.target.node, w.target.name);
    return {b.env(), outs};
}

inline TreeEnvironment with_mode(TreeEnvironment env, const std::string& node, const std::string& mode) {
    env.tree.node_mut(node).options["mode"] = Value(mode);
    env.world.param_values[ParamId{node, ParamKind::option, "mode"}] = Value(mode);
    return env;
}

/// Runs the case on one executor (local) or shoved to a slot executor (remote).
inline Outcome run_equivalence(const EquivalenceCase& c, bool remote, int* shoves = nullptr) {
    Team team;
    team.add("a", with_mode(c.env, "shv", remote ? "remote" : "local"));
    if (remote) {
        team.add("b", slot_tree(team.lib));
        team.connect_all();
    }
    Outcome o;
    o.state = team.run("a", 100);
    for (const auto& p : c.public_outputs) o.public_outputs[p] = team.ex.at("a")->tree()->value(p);
    if (shoves) *shoves = team.count("SHOVE");
    return o;
}

} // namespace dbt::test
