#include "dbt/control/session.hpp"

#include <algorithm>

#include "dbt/dataflow/ops.hpp"
#include "dbt/distribution/nodes.hpp"
#include "dbt/error.hpp"
#include "dbt/treefile/treefile.hpp"

namespace dbt::control {

using distribution::Executor;
using distribution::Message;
using distribution::Shovable;
using distribution::Slot;
using nlohmann::json;

namespace {

const char* phase_name(Shovable::Phase p) {
    switch (p) {
    case Shovable::Phase::inactive: return "inactive";
    case Shovable::Phase::querying: return "querying";
    case Shovable::Phase::local: return "local";
    case Shovable::Phase::awaiting_ack: return "awaitingAck";
    case Shovable::Phase::remote: return "remote";
    }
    return "?";
}

ParamId port(const json& end, ParamKind kind) {
    return ParamId{end.at("node").get<std::string>(), kind, end.at("name").get<std::string>()};
}

Wiring wiring_of(const json& args) {
    return {port(args.at("source"), ParamKind::output), port(args.at("target"), ParamKind::input)};
}

json params_json(const std::vector<ParamSpec>& specs) {
    json out = json::array();
    for (const auto& p : specs) {
        json j{{"name", p.name}, {"type", p.type.to_string()}, {"required", p.required}};
        if (p.default_value) j["default"] = p.default_value->to_json();
        out.push_back(std::move(j));
    }
    return out;
}

NodeAction action_of(const std::string& type) {
    if (type == cmd::untick) return NodeAction::untick;
    if (type == cmd::reset) return NodeAction::reset;
    return NodeAction::shutdown;
}

} // namespace

ControlSession::ControlSession(std::unique_ptr<sim::Simulation> simulation) : sim_(std::move(simulation)) {
    if (!sim_) throw std::invalid_argument("control session needs a simulation");
}

Executor& ControlSession::target(const json& args) {
    return sim_->executor(args.value("robot", sim_->mission_robot()));
}

std::vector<Message> ControlSession::handle(const Message& command) {
    sim_->record("control", "COMMAND", command.type + " cid=" + command.correlation_id);
    std::vector<Message> out;
    bool changed = false;
    try {
        json result = dispatch(command.type, command.payload.is_null() ? json::object() : command.payload, changed);
        result["command"] = command.type;
        out.push_back({ack, command.correlation_id, server_id, std::move(result)});
    } catch (const ValidationError& e) {
        json v = json::array();
        for (const auto& item : e.violations()) v.push_back({{"where", item.where}, {"what", item.what}});
        out.push_back({error, command.correlation_id, server_id,
                       {{"command", command.type}, {"message", e.what()}, {"violations", v}}});
    } catch (const std::exception& e) {
        out.push_back({error, command.correlation_id, server_id, {{"command", command.type}, {"message", e.what()}}});
    }
    if (changed || command.type == cmd::snapshot) {
        out.push_back(snapshot_message());
    }
    return out;
}

json ControlSession::dispatch(const std::string& type, const json& args, bool& changed) {
    if (type == cmd::snapshot) {
        return json::object();
    }
    if (type == cmd::node_types) {
        json types = json::array();
        const auto& lib = *sim_->library();
        for (const auto& name : lib.names()) {
            const auto& info = lib.info(name);
            types.push_back({{"name", name},
                             {"maxChildren", info.max_children == unbounded_children ? json(nullptr) : json(info.max_children)},
                             {"options", params_json(info.options)},
                             {"inputs", params_json(info.inputs)},
                             {"outputs", params_json(info.outputs)},
                             {"doc", info.doc}});
        }
        return {{"nodeTypes", types}};
    }
    if (type == cmd::load_tree) {
        Executor& ex = target(args);
        TreeEnvironment env = args.contains("path")
                                  ? treefile::load_tree_file(args.at("path").get<std::string>(), *sim_->library())
                                  : treefile::load_tree_json(args.at("tree"), *sim_->library());
        ex.load(std::move(env));
        auto_run_ = false;
        changed = true;
        return {{"robot", ex.id()}, {"root", ex.tree()->root()}};
    }
    if (type == cmd::tick) {
        const auto count = args.value("count", std::int64_t{1});
        if (count < 1) throw std::invalid_argument("count must be at least 1");
        for (std::int64_t i = 0; i < count; ++i) sim_->step();
        changed = true;
        return {{"cycle", sim_->steps()}, {"rootState", to_string(sim_->mission_state())}};
    }
    if (type == cmd::tick_until_result) {
        const NodeState s = sim_->mission_state();
        if (s == NodeState::uninitialized || s == NodeState::error || s == NodeState::shutdown) {
            throw Error("mission root is " + std::string(to_string(s)) + "; reset or reload it first");
        }
        auto_run_ = true;
        auto_budget_ = args.value("maxCycles", sim_->max_cycles());
        return {{"running", true}, {"maxCycles", auto_budget_}};
    }
    if (type == cmd::untick || type == cmd::reset || type == cmd::shutdown) {
        Executor& ex = target(args);
        const std::string node = args.value("node", ex.tree()->root());
        const NodeState s = ex.tree()->update(node, action_of(type));
        if (node == ex.tree()->root() && ex.id() == sim_->mission_robot()) auto_run_ = false;
        changed = true;
        return {{"node", node}, {"state", to_string(s)}};
    }
    if (type == cmd::set_option) {
        Executor& ex = target(args);
        const std::string node = args.at("node").get<std::string>();
        const std::string name = args.at("name").get<std::string>();
        json doc = treefile::to_document(ex.tree()->env());
        auto it = std::find_if(doc["nodes"].begin(), doc["nodes"].end(),
                               [&](const json& n) { return n.at("id") == node; });
        if (it == doc["nodes"].end()) throw UnknownNode(node);
        (*it)["options"][name] = args.at("value");
        TreeEnvironment env = treefile::load_tree_json(doc, *sim_->library(), {}, ex.tree()->env().types);
        ex.load(std::move(env));
        auto_run_ = auto_run_ && ex.id() != sim_->mission_robot();
        changed = true;
        return {{"node", node}, {"name", name}};
    }
    if (type == cmd::add_wiring) {
        target(args).tree()->add_wiring(wiring_of(args));
        changed = true;
        return json::object();
    }
    if (type == cmd::remove_wiring) {
        BehaviorTree& tree = *target(args).tree();
        const Wiring w = wiring_of(args);
        const auto& all = tree.env().data.wirings();
        if (std::find(all.begin(), all.end(), w) == all.end()) {
            throw Error("no wiring " + w.source.to_string() + " -> " + w.target.to_string());
        }
        tree.remove_wiring(w);
        changed = true;
        return json::object();
    }
    if (type == cmd::force_door) {
        const std::string state = args.at("state").get<std::string>();
        if (state != "open" && state != "closed") throw std::invalid_argument("state must be open or closed");
        sim_->world().force_door(args.at("door").get<std::string>(), state == "open");
        changed = true;
        return json::object();
    }
    if (type == cmd::shove_status) {
        json shovables = json::array();
        json slots = json::array();
        for (const auto& id : sim_->executor_ids()) {
            const BehaviorTree& tree = *sim_->executor(id).tree();
            for (const auto& n : tree.nodes_of_kind("Shovable")) {
                const auto* s = tree.behavior_as<Shovable>(n);
                json u = json::object();
                for (const auto& [peer, b] : s->last_utilities()) u[peer] = b.to_json();
                shovables.push_back({{"robot", id},
                                     {"node", n},
                                     {"phase", phase_name(s->phase())},
                                     {"executor", s->executor()},
                                     {"correlationId", s->correlation_id()},
                                     {"utilities", u}});
            }
            for (const auto& [n, s] : sim_->executor(id).slots()) {
                slots.push_back({{"robot", id},
                                 {"node", n},
                                 {"occupied", s->occupied()},
                                 {"hostedRoot", s->hosted_root()},
                                 {"correlationId", s->correlation_id()},
                                 {"sender", s->sender()}});
            }
        }
        return {{"shovables", shovables}, {"slots", slots}};
    }
    throw Error("unknown command '" + type + "'");
}

std::optional<Message> ControlSession::advance() {
    if (!auto_run_) return std::nullopt;
    sim_->step();
    const NodeState s = sim_->mission_state();
    if (auto_budget_ > 0) --auto_budget_;
    if (s != NodeState::running) {
        auto_run_ = false;
        sim_->record(sim_->mission_robot(), "MISSION", to_string(s));
    } else if (auto_budget_ == 0) {
        auto_run_ = false;
        sim_->record(sim_->mission_robot(), "MISSION", "max-cycles");
    }
    return snapshot_message();
}

json ControlSession::snapshot() const {
    json states = json::object(), params = json::object(), utilities = json::object(), slots = json::object(),
         roots = json::object();
    for (const auto& id : sim_->executor_ids()) {
        const BehaviorTree& tree = *sim_->executor(id).tree();
        const auto& env = tree.env();
        json s = json::object(), p = json::object(), u = json::object(), sl = json::object();
        for (const auto& [n, st] : env.world.node_states) s[n] = to_string(st);
        for (const auto& [pid, v] : env.world.param_values) p[pid.to_string()] = v.to_json();
        for (const auto& n : env.tree.preorder()) {
            try {
                u[n] = tree.utility(n).to_json();
            } catch (const std::exception&) {
                u[n] = nullptr;
            }
        }
        for (const auto& [n, slot] : sim_->executor(id).slots()) {
            sl[n] = {{"occupied", slot->occupied()},
                     {"hostedRoot", slot->hosted_root()},
                     {"correlationId", slot->correlation_id()},
                     {"sender", slot->sender()}};
        }
        states[id] = std::move(s);
        params[id] = std::move(p);
        utilities[id] = std::move(u);
        slots[id] = std::move(sl);
        roots[id] = to_string(tree.root_state());
    }
    const auto& w = sim_->world();
    json doors = json::object(), objects = json::object(), robots = json::object();
    for (const auto& [id, d] : w.doors()) doors[id] = {{"x", d.cell.x}, {"y", d.cell.y}, {"open", d.open}};
    for (const auto& [id, o] : w.objects()) objects[id] = {{"x", o.cell.x}, {"y", o.cell.y}, {"pickedUp", o.picked_up}};
    for (const auto& [id, r] : w.robots()) robots[id] = {{"x", r.pose.x}, {"y", r.pose.y}, {"services", r.services}};
    return {{"cycle", sim_->steps()},
            {"missionRobot", sim_->mission_robot()},
            {"autoRun", auto_run_},
            {"nodeStates", states},
            {"paramValues", params},
            {"utilityCache", utilities},
            {"slotStatus", slots},
            {"rootStates", roots},
            {"world", {{"clock", w.clock()}, {"doors", doors}, {"objects", objects}, {"robots", robots}}}};
}

Message ControlSession::snapshot_message() const {
    return {snapshot_type, "snapshot-" + std::to_string(sim_->steps()), server_id, snapshot()};
}

} // namespace dbt::control
