#include "dbt/core/behavior_tree.hpp"

#include "dbt/dataflow/ops.hpp"
#include "dbt/error.hpp"

namespace dbt {
namespace {

std::string transition_text(NodeState from, NodeAction action) {
    return std::string(to_string(action)) + " is not allowed in state " + std::string(to_string(from));
}

} // namespace

BehaviorTree::BehaviorTree(TreeEnvironment env, std::shared_ptr<const NodeLibrary> library, EngineConfig config)
    : env_(std::move(env)), library_(std::move(library)), config_(std::move(config)),
      epoch_(std::chrono::steady_clock::now()) {
    if (!library_) {
        throw std::invalid_argument("behavior tree needs a node library");
    }
    for (const auto& [id, record] : env_.tree.nodes()) {
        instantiate(id);
        env_.world.node_states.try_emplace(id, NodeState::uninitialized);
    }
}

BehaviorTree::BehaviorTree(BehaviorTree&&) noexcept = default;
BehaviorTree& BehaviorTree::operator=(BehaviorTree&&) noexcept = default;

BehaviorTree::~BehaviorTree() {
    // join workers before the behaviours they may reference go away
    tasks_.clear();
}

void BehaviorTree::instantiate(const std::string& id) {
    behaviors_[id] = library_->create(env_.tree.node(id));
}

std::int64_t BehaviorTree::now_ms() const {
    if (config_.clock) {
        return config_.clock();
    }
    auto d = std::chrono::steady_clock::now() - epoch_;
    return std::chrono::duration_cast<std::chrono::milliseconds>(d).count();
}

Node& BehaviorTree::behavior(std::string_view node) const {
    auto it = behaviors_.find(node);
    if (it == behaviors_.end()) {
        throw UnknownNode(std::string(node));
    }
    return *it->second;
}

std::vector<std::string> BehaviorTree::nodes_of_kind(std::string_view kind) const {
    std::vector<std::string> out;
    for (const auto& [id, record] : env_.tree.nodes()) {
        if (record.kind == kind) {
            out.push_back(id);
        }
    }
    return out;
}

const TaskHandle* BehaviorTree::task(std::string_view node) const {
    auto it = tasks_.find(node);
    return it == tasks_.end() ? nullptr : it->second.get();
}

bool BehaviorTree::holds_live_task(std::string_view node) const {
    const auto* t = task(node);
    return t != nullptr && t->live();
}

void BehaviorTree::emit(std::string_view node, std::string_view event, std::string_view detail) const {
    for (const auto& sink : event_sinks_) {
        sink(node, event, detail);
    }
}

void BehaviorTree::set_state(const std::string& id, NodeState to) {
    auto& slot = env_.world.node_states[id];
    const NodeState from = slot;
    if (from == to) {
        return;
    }
    slot = to;
    for (const auto& l : state_listeners_) {
        l(id, from, to);
    }
}

NodeState BehaviorTree::fail(const std::string& id, std::string message) {
    stop_task(id);
    diagnostics_.push_back({id, message});
    emit(id, "ERROR", message);
    set_state(id, NodeState::error);
    return NodeState::error;
}

void BehaviorTree::stop_task(const std::string& id) {
    tasks_.erase(id);
}

bool BehaviorTree::missing_required_input(const std::string& id) const {
    for (const auto& p : env_.data.parameters_of(id)) {
        if (p.kind != ParamKind::input || !env_.data.parameter(p).required) {
            continue;
        }
        if (env_.world.value(p).is_none()) {
            return true;
        }
    }
    return false;
}

NodeState BehaviorTree::update(std::string_view node, NodeAction action) {
    auto it = behaviors_.find(node);
    if (it == behaviors_.end()) {
        throw UnknownNode(std::string(node));
    }
    const std::string id = it->first;
    Node& behavior = *it->second;

    if (action == NodeAction::tick) {
        visited_.insert(id);
    }
    try {
        NodeContext ctx(*this, id);
        behavior.before_update(ctx, action);
    } catch (const std::exception& e) {
        return fail(id, e.what());
    }

    const NodeState from = state(id);
    if (from == NodeState::error && action != NodeAction::reset && action != NodeAction::shutdown) {
        return NodeState::error;
    }
    if (allowed_transitions(from, action).empty()) {
        return fail(id, transition_text(from, action));
    }

    NodeState to;
    try {
        to = apply(id, action, from, behavior);
    } catch (const std::exception& e) {
        return fail(id, e.what());
    }
    if (!is_legal_transition(from, action, to)) {
        return fail(id, std::string(to_string(action)) + " from " + std::string(to_string(from)) + " returned " +
                            std::string(to_string(to)));
    }
    if (is_rest_state(to)) {
        stop_task(id);
    }
    set_state(id, to);
    return to;
}

NodeState BehaviorTree::apply(const std::string& id, NodeAction action, NodeState from, Node& behavior) {
    NodeContext ctx(*this, id);
    switch (action) {
    case NodeAction::setup:
        behavior.on_setup(ctx);
        for (const auto& c : env_.tree.children(id)) {
            const NodeState cs = state(c);
            if (cs == NodeState::uninitialized || cs == NodeState::shutdown) {
                update(c, NodeAction::setup);
            }
        }
        return NodeState::idle;
    case NodeAction::tick:
        return do_tick(id, from, behavior);
    case NodeAction::untick:
        return do_untick(id, from, behavior);
    case NodeAction::reset:
        stop_task(id);
        for (const auto& c : env_.tree.children(id)) {
            const NodeState cs = state(c);
            if (cs != NodeState::uninitialized && cs != NodeState::shutdown) {
                update(c, NodeAction::reset);
            }
        }
        behavior.on_reset(ctx);
        return NodeState::idle;
    case NodeAction::shutdown:
        stop_task(id);
        for (const auto& c : env_.tree.children(id)) {
            update(c, NodeAction::shutdown);
        }
        behavior.on_shutdown(ctx);
        return NodeState::shutdown;
    }
    return NodeState::error;
}

NodeState BehaviorTree::do_tick(const std::string& id, NodeState from, Node& behavior) {
    (void)from;
    if (missing_required_input(id)) {
        return NodeState::failed;
    }
    if (auto it = tasks_.find(id); it != tasks_.end() && it->second->suspended()) {
        it->second->resume();
    }

    struct Guard {
        BehaviorTree& t;
        ~Guard() {
            t.frames_.pop_back();
            t.tick_stack_.pop_back();
        }
    };
    frames_.emplace_back();
    tick_stack_.push_back(id);
    const auto start = std::chrono::steady_clock::now();
    NodeState result;
    std::chrono::steady_clock::duration self{};
    {
        Guard guard{*this};
        NodeContext ctx(*this, id);
        result = behavior.on_tick(ctx);
        const auto total = std::chrono::steady_clock::now() - start;
        self = total - frames_.back().children;
        if (frames_.size() > 1) {
            frames_[frames_.size() - 2].children += total;
        }
    }
    if (self > config_.tick_budget) {
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(self).count();
        throw Error("tick took " + std::to_string(us) + " us, over the budget of " +
                    std::to_string(config_.tick_budget.count()) + " us");
    }
    return result;
}

NodeState BehaviorTree::do_untick(const std::string& id, NodeState from, Node& behavior) {
    untick_active_children(id);
    if (from == NodeState::running) {
        NodeContext ctx(*this, id);
        const NodeState to = behavior.on_untick(ctx);
        if (to == NodeState::idle) {
            stop_task(id);
        }
        return to;
    }
    if (from == NodeState::paused) {
        return NodeState::paused;
    }
    return NodeState::idle;
}

void BehaviorTree::untick_active_children(const std::string& id) {
    for (const auto& c : env_.tree.children(id)) {
        const NodeState cs = state(c);
        if (cs == NodeState::running || cs == NodeState::paused) {
            update(c, NodeAction::untick);
        }
    }
}

NodeState BehaviorTree::tick_cycle() {
    const std::string r = root();
    const NodeState s = state(r);
    if (s == NodeState::uninitialized || s == NodeState::error) {
        throw RootUninitialized("root '" + r + "' is " + std::string(to_string(s)));
    }
    visited_.clear();
    ++cycle_;
    update(r, NodeAction::tick);
    for (const auto& id : env_.tree.preorder(r)) {
        if (visited_.count(id) != 0 || !env_.tree.contains(id)) {
            continue;
        }
        const NodeState ns = state(id);
        if (ns == NodeState::running || ns == NodeState::paused) {
            update(id, NodeAction::untick);
        }
    }
    return state(r);
}

void BehaviorTree::write(const ParamId& p, Value v) {
    dataflow::propagate(p, std::move(v), env_);
}

void BehaviorTree::set_external(const std::string& key, Value v) {
    env_.world.externals[key] = std::move(v);
}

void BehaviorTree::erase_external(std::string_view key) {
    if (auto it = env_.world.externals.find(key); it != env_.world.externals.end()) {
        env_.world.externals.erase(it);
    }
}

const Value* BehaviorTree::external(std::string_view key) const {
    auto it = env_.world.externals.find(key);
    return it == env_.world.externals.end() ? nullptr : &it->second;
}

void BehaviorTree::set_neighbors(std::vector<ExecutorDescriptor> neighbors) {
    env_.world.neighbors = std::move(neighbors);
}

void BehaviorTree::add_wiring(const Wiring& w) {
    dataflow::wire(w, env_);
}

void BehaviorTree::remove_wiring(const Wiring& w) {
    env_.data.remove_wiring(w);
}

std::string BehaviorTree::graft(std::string_view parent, const TreeEnvironment& sub, std::string_view prefix) {
    const NodeRecord& parent_record = env_.tree.node(parent);
    const auto siblings = env_.tree.children(parent);
    if (siblings.size() >= parent_record.max_children) {
        throw TreeStructureError("node '" + std::string(parent) + "' has no free child position");
    }
    const std::string p(prefix);
    auto renamed = [&](const std::string& id) { return p + id; };

    std::map<std::string, std::unique_ptr<Node>, std::less<>> fresh;
    for (const auto& [id, record] : sub.tree.nodes()) {
        if (env_.tree.contains(renamed(id))) {
            throw TreeStructureError("node id '" + renamed(id) + "' already exists");
        }
        NodeRecord copy = record;
        copy.id = renamed(id);
        fresh[copy.id] = library_->create(copy);
    }

    const std::string sub_root = renamed(sub.tree.root());
    for (const auto& [id, record] : sub.tree.nodes()) {
        NodeRecord copy = record;
        copy.id = renamed(id);
        env_.tree.add_node(std::move(copy));
        env_.world.node_states[renamed(id)] = NodeState::uninitialized;
    }
    for (const auto& e : sub.tree.edges()) {
        env_.tree.add_edge(renamed(e.parent), renamed(e.child), e.order);
    }
    for (const auto& [pid, param] : sub.data.parameters()) {
        Parameter q = param;
        q.id.node = renamed(pid.node);
        env_.data.add_parameter(q);
        auto it = sub.world.param_values.find(pid);
        env_.world.param_values[q.id] = it == sub.world.param_values.end() ? Value() : it->second;
    }
    for (const auto& w : sub.data.wirings()) {
        Wiring rw = w;
        rw.source.node = renamed(w.source.node);
        rw.target.node = renamed(w.target.node);
        env_.data.add_wiring(rw);
    }
    int order = 0;
    if (!siblings.empty()) {
        order = *env_.tree.order(parent, siblings.back()) + 1;
    }
    env_.tree.add_edge(parent, sub_root, order);
    for (auto& [id, behavior] : fresh) {
        behaviors_[id] = std::move(behavior);
    }
    return sub_root;
}

void BehaviorTree::prune(std::string_view node) {
    const auto ids = env_.tree.preorder(node);
    if (auto parent = env_.tree.parent(node)) {
        env_.tree.remove_edge(*parent, node);
    }
    for (const auto& id : ids) {
        stop_task(id);
        behaviors_.erase(id);
        dataflow::remove_node_parameters(env_, id);
        env_.world.node_states.erase(id);
        env_.tree.remove_node(id);
        visited_.erase(id);
    }
}

utility::UtilityBounds BehaviorTree::utility(std::string_view node) const {
    UtilityContext ctx(*this, std::string(node));
    return behavior(node).utility(ctx);
}

// NodeContext

const NodeRecord& NodeContext::record() const { return tree_.env_.tree.node(id_); }

NodeState NodeContext::state() const { return tree_.state(id_); }

const Value& NodeContext::option(const std::string& name) const {
    return tree_.env_.world.value(ParamId{id_, ParamKind::option, name});
}

const Value& NodeContext::input(const std::string& name) const {
    return tree_.env_.world.value(ParamId{id_, ParamKind::input, name});
}

const Value& NodeContext::output(const std::string& name) const {
    return tree_.env_.world.value(ParamId{id_, ParamKind::output, name});
}

void NodeContext::set_output(const std::string& name, Value v) const {
    tree_.write(ParamId{id_, ParamKind::output, name}, std::move(v));
}

std::vector<std::string> NodeContext::children() const { return tree_.env_.tree.children(id_); }

NodeState NodeContext::tick_child(std::string_view child) const { return tree_.update(child, NodeAction::tick); }

NodeState NodeContext::untick_child(std::string_view child) const {
    return tree_.update(child, NodeAction::untick);
}

NodeState NodeContext::reset_child(std::string_view child) const { return tree_.update(child, NodeAction::reset); }

TaskHandle& NodeContext::start_task(TaskWork work, bool pausable) const {
    if (tree_.tick_stack_.empty() || tree_.tick_stack_.back() != id_) {
        throw StartOutsideRunning("node '" + id_ + "' may only start a background task while ticking");
    }
    auto& slot = tree_.tasks_[id_];
    slot = std::make_unique<TaskHandle>(std::move(work), pausable);
    return *slot;
}

TaskHandle* NodeContext::task() const {
    auto it = tree_.tasks_.find(id_);
    return it == tree_.tasks_.end() ? nullptr : it->second.get();
}

std::int64_t NodeContext::now_ms() const { return tree_.now_ms(); }

void NodeContext::emit(std::string_view event, std::string_view detail) const { tree_.emit(id_, event, detail); }

// UtilityContext

const NodeRecord& UtilityContext::record() const { return tree_.env().tree.node(id_); }

const Value& UtilityContext::option(const std::string& name) const {
    return tree_.env().world.value(ParamId{id_, ParamKind::option, name});
}

std::vector<std::string> UtilityContext::children() const { return tree_.env().tree.children(id_); }

utility::UtilityBounds UtilityContext::child_utility(std::string_view child) const { return tree_.utility(child); }

std::vector<utility::UtilityBounds> UtilityContext::children_utility() const {
    std::vector<utility::UtilityBounds> out;
    for (const auto& c : children()) {
        out.push_back(tree_.utility(c));
    }
    return out;
}

} // namespace dbt
