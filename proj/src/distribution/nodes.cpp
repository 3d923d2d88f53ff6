#include "dbt/distribution/nodes.hpp"

#include "dbt/core/behavior_tree.hpp"
#include "dbt/dataflow/ops.hpp"
#include "dbt/distribution/executor.hpp"
#include "dbt/error.hpp"
#include "dbt/utility/aggregate.hpp"

namespace dbt::distribution {

using nlohmann::json;
using utility::UtilityBounds;

namespace {

const std::string local_key = "local";

std::string only_child(const NodeContext& ctx) {
    const auto c = ctx.children();
    if (c.size() != 1) {
        throw TreeStructureError("'" + ctx.id() + "' needs exactly one child, has " + std::to_string(c.size()));
    }
    return c.front();
}

/// Writes result values back to the outputs they came from; values that no
/// longer fit are skipped.
void merge_outputs(NodeContext& ctx, const SubtreeResult& r) {
    BehaviorTree& tree = ctx.tree();
    for (const auto& [p, j] : r.public_outputs) {
        if (p.kind != ParamKind::output || !tree.env().data.contains(p) || j.is_null()) {
            continue;
        }
        const auto type = dataflow::resolve(tree.env().data.parameter(p), tree.env());
        if (!type) continue;
        try {
            tree.write(p, tree.env().types.decode(*type, j));
        } catch (const Error& e) {
            ctx.emit("MERGE_FAILED", p.to_string() + ": " + e.what());
        }
    }
}

} // namespace

// Shovable

void Shovable::on_setup(NodeContext& ctx) {
    const auto& mode = ctx.option("mode").as<std::string>();
    if (mode != "auto" && mode != "local" && mode != "remote") {
        throw Error("mode must be auto, local or remote, not '" + mode + "'");
    }
}

NodeState Shovable::on_tick(NodeContext& ctx) {
    const std::string child = only_child(ctx);
    Executor* ex = ctx.service<Executor>();
    if (ctx.state() != NodeState::running) {
        phase_ = Phase::inactive;
    }
    switch (phase_) {
    case Phase::inactive: return start(ctx, ex, child);
    case Phase::querying: return poll_queries(ctx, ex, child);
    case Phase::local: return tick_local(ctx, child);
    case Phase::awaiting_ack: {
        if (auto m = ex->take_reply(cid_)) {
            if (m->type == msg::shove_ack) {
                phase_ = Phase::remote;
            } else if (m->type == msg::shove_reject) {
                ctx.emit("SHOVE_REJECTED", winner_ + " " + m->payload.value("reason", ""));
                ex->forget(cid_);
                phase_ = Phase::inactive;
                return NodeState::failed;
            } else if (m->type == msg::result) {
                return finish(ctx, *m);
            }
        } else if (ctx.now_ms() >= deadline_) {
            ctx.emit("SHOVE_TIMEOUT", winner_);
            ex->forget(cid_);
            phase_ = Phase::inactive;
            return NodeState::failed;
        }
        if (phase_ != Phase::remote) {
            return NodeState::running;
        }
        [[fallthrough]];
    }
    case Phase::remote:
        while (auto m = ex->take_reply(cid_)) {
            if (m->type == msg::result) {
                return finish(ctx, *m);
            }
        }
        return NodeState::running;
    }
    return NodeState::running;
}

NodeState Shovable::start(NodeContext& ctx, Executor* ex, const std::string& child) {
    queries_.clear();
    utilities_.clear();
    winner_.clear();
    cid_.clear();
    const auto& mode = ctx.option("mode").as<std::string>();
    utilities_[local_key] = mode == "remote" ? UtilityBounds::infeasible() : ctx.tree().utility(child);
    if (ex != nullptr && mode != "local") {
        const json shape = subtree_shape(dataflow::extract_subtree(child, ctx.tree().env()));
        for (const auto& peer : ex->peers()) {
            if (!peer.slot_available) continue;
            const std::string cid = ex->next_correlation_id();
            try {
                ex->send(peer.id, msg::utility_query, cid, {{"shape", shape}});
                queries_[cid] = peer.id;
            } catch (const Error&) {
                utilities_[peer.id] = UtilityBounds::infeasible();
            }
        }
        deadline_ = ctx.now_ms() + ex->config().query_timeout_ms;
    }
    phase_ = Phase::querying;
    return poll_queries(ctx, ex, child);
}

NodeState Shovable::poll_queries(NodeContext& ctx, Executor* ex, const std::string& child) {
    for (auto it = queries_.begin(); it != queries_.end();) {
        std::optional<Message> m = ex->take_reply(it->first);
        if (!m) {
            ++it;
            continue;
        }
        try {
            utilities_[it->second] = UtilityBounds::from_json(m->payload.at("utility"));
        } catch (const std::exception&) {
            utilities_[it->second] = UtilityBounds::infeasible();
        }
        it = queries_.erase(it);
    }
    if (!queries_.empty() && ctx.now_ms() < deadline_) {
        return NodeState::running;
    }
    for (const auto& [cid, peer] : queries_) {
        utilities_[peer] = UtilityBounds::infeasible();
        ex->forget(cid);
    }
    queries_.clear();
    return decide(ctx, ex, child);
}

NodeState Shovable::decide(NodeContext& ctx, Executor* ex, const std::string& child) {
    // local ranks first on ties: its key is empty
    std::string best = local_key;
    UtilityBounds best_u = utilities_[local_key];
    for (const auto& [peer, u] : utilities_) {
        if (peer == local_key) continue;
        const std::string_view best_key = best == local_key ? std::string_view{} : std::string_view{best};
        if (utility::compare_utility(u, best_u, peer, best_key) < 0) {
            best = peer;
            best_u = u;
        }
    }
    std::string seen;
    for (const auto& [peer, u] : utilities_) {
        seen += (seen.empty() ? "" : " ") + peer + "=" + u.to_string();
    }
    ctx.emit("UTILITIES", seen);
    if (best_u.is_infeasible()) {
        ctx.emit("NO_EXECUTOR", "no executor can run " + child);
        phase_ = Phase::inactive;
        return NodeState::failed;
    }
    winner_ = best;
    if (best == local_key) {
        ctx.emit("EXECUTE_LOCAL", child);
        phase_ = Phase::local;
        return tick_local(ctx, child);
    }
    cid_ = ex->next_correlation_id();
    const ShoveEnvelope env = make_envelope(ctx.tree().env(), child, cid_);
    try {
        ex->send(best, msg::shove, cid_, envelope_to_json(env));
    } catch (const Error& e) {
        ctx.emit("SHOVE_FAILED", best + " " + e.what());
        phase_ = Phase::inactive;
        return NodeState::failed;
    }
    deadline_ = ctx.now_ms() + ex->config().ack_timeout_ms;
    phase_ = Phase::awaiting_ack;
    return NodeState::running;
}

NodeState Shovable::tick_local(NodeContext& ctx, const std::string& child) {
    const NodeState s = effective_result(ctx.tick_child(child));
    if (s != NodeState::running) {
        phase_ = Phase::inactive;
    }
    return s;
}

NodeState Shovable::finish(NodeContext& ctx, const Message& result) {
    phase_ = Phase::inactive;
    try {
        last_result_ = SubtreeResult::from_json(result.payload);
    } catch (const Error& e) {
        ctx.emit("BAD_RESULT", e.what());
        return NodeState::failed;
    }
    merge_outputs(ctx, *last_result_);
    return effective_result(last_result_->final_state);
}

void Shovable::abort(NodeContext& ctx) {
    Executor* ex = ctx.service<Executor>();
    if (ex == nullptr) {
        phase_ = Phase::inactive;
        return;
    }
    for (const auto& [cid, peer] : queries_) {
        ex->forget(cid);
    }
    queries_.clear();
    if (phase_ == Phase::awaiting_ack || phase_ == Phase::remote) {
        bool done = false;
        while (auto m = ex->take_reply(cid_)) {
            if (m->type == msg::result) {
                // finished before the tick moved on: keep its outputs
                try {
                    last_result_ = SubtreeResult::from_json(m->payload);
                    merge_outputs(ctx, *last_result_);
                } catch (const Error&) {
                }
                done = true;
            }
        }
        if (!done) {
            try {
                ex->send(winner_, msg::cancel, cid_, json::object());
            } catch (const Error& e) {
                ctx.emit("CANCEL_FAILED", winner_ + " " + e.what());
            }
        }
        ex->forget(cid_);
    }
    phase_ = Phase::inactive;
}

NodeState Shovable::on_untick(NodeContext& ctx) {
    abort(ctx);
    return NodeState::idle;
}

void Shovable::on_reset(NodeContext& ctx) { abort(ctx); }

void Shovable::on_shutdown(NodeContext& ctx) { abort(ctx); }

// Slot

std::optional<std::string> Slot::receive(BehaviorTree& tree, const std::string& slot_id, const json& envelope,
                                         const std::string& sender) {
    if (finished_) {
        purge(tree);
    }
    if (hosting()) {
        return "SlotOccupied";
    }
    ShoveEnvelope e;
    try {
        e = envelope_from_json(envelope, tree.library(), tree.env().types);
    } catch (const Error& err) {
        return std::string("DeserializationError: ") + err.what();
    }
    prefix_ = slot_id + "/";
    try {
        hosted_ = tree.graft(slot_id, e.subtree, prefix_);
    } catch (const Error& err) {
        return std::string("graft failed: ") + err.what();
    }
    cid_ = e.correlation_id;
    sender_ = sender;
    outputs_ = e.public_outputs;
    finished_ = false;
    pending_result_.reset();
    backoff_ = 1;
    retry_wait_ = 0;
    try {
        for (const auto& [p, v] : e.public_inputs) {
            if (v.is_none()) continue;
            tree.write(ParamId{prefix_ + p.node, p.kind, p.name}, v);
        }
    } catch (const Error& err) {
        purge(tree);
        return std::string("bad public input: ") + err.what();
    }
    if (tree.update(hosted_, NodeAction::setup) != NodeState::idle) {
        purge(tree);
        return "hosted subtree failed to set up";
    }
    ++received_;
    return std::nullopt;
}

bool Slot::cancel(BehaviorTree& tree, const std::string& slot_id, const std::string& correlation_id) {
    (void)slot_id;
    if (!hosting() || correlation_id != cid_) {
        return false;
    }
    if (!finished_) {
        const NodeState s = tree.state(hosted_);
        if (s == NodeState::running || s == NodeState::paused) {
            tree.update(hosted_, NodeAction::untick);
        }
    }
    tree.emit(slot_id, "CANCELLED", correlation_id);
    purge(tree);
    return true;
}

void Slot::purge(BehaviorTree& tree) {
    if (!hosted_.empty() && tree.env().tree.contains(hosted_)) {
        tree.prune(hosted_);
    }
    hosted_.clear();
    prefix_.clear();
    cid_.clear();
    sender_.clear();
    outputs_.clear();
    finished_ = false;
    pending_result_.reset();
}

void Slot::before_update(NodeContext& ctx, NodeAction) {
    if (finished_) {
        purge(ctx.tree());
    }
}

bool Slot::try_send_result(NodeContext& ctx) {
    Executor* ex = ctx.service<Executor>();
    if (ex == nullptr) {
        return true; // nobody to tell
    }
    if (retry_wait_ > 0) {
        --retry_wait_;
        return false;
    }
    try {
        ex->send(sender_, msg::result, cid_, *pending_result_);
        return true;
    } catch (const Error& e) {
        ctx.emit("RESULT_RETRY", sender_ + " " + e.what());
        retry_wait_ = backoff_;
        backoff_ = std::min(backoff_ * 2, 64);
        return false;
    }
}

NodeState Slot::on_tick(NodeContext& ctx) {
    if (!hosting()) {
        return NodeState::succeeded;
    }
    if (!pending_result_) {
        const NodeState s = ctx.tick_child(hosted_);
        if (s == NodeState::running) {
            return NodeState::running;
        }
        SubtreeResult r;
        r.correlation_id = cid_;
        r.final_state = s == NodeState::error ? NodeState::error : s;
        const auto& env = ctx.tree().env();
        for (const auto& p : outputs_) {
            const Value& v = env.world.value(ParamId{prefix_ + p.node, p.kind, p.name});
            r.public_outputs.emplace_back(p, v.to_json());
        }
        for (const auto& id : env.tree.preorder(hosted_)) {
            r.node_states[id.substr(prefix_.size())] = env.world.state(id);
        }
        pending_result_ = r.to_json();
    }
    if (!try_send_result(ctx)) {
        return NodeState::running;
    }
    finished_ = true;
    return NodeState::succeeded;
}

void Slot::on_shutdown(NodeContext& ctx) {
    if (occupied()) {
        Executor* ex = ctx.service<Executor>();
        if (ex != nullptr) {
            SubtreeResult r;
            r.correlation_id = cid_;
            r.final_state = NodeState::error;
            try {
                ex->send(sender_, msg::result, cid_, r.to_json());
            } catch (const Error&) {
            }
        }
    }
    purge(ctx.tree());
}

void register_distribution_nodes(NodeLibrary& lib) {
    ParamSpec mode;
    mode.name = "mode";
    mode.type = TypeRef::concrete("string");
    mode.default_value = Value("auto");
    lib.add({"Shovable", 1, {mode}, {}, {}, "Runs its child locally or on the nearby executor with the best utility."},
            [](const NodeRecord&) { return std::make_unique<Shovable>(); });
    lib.add({"Slot", 1, {}, {}, {}, "Hosts one subtree shoved here by another executor."},
            [](const NodeRecord&) { return std::make_unique<Slot>(); });
}

} // namespace dbt::distribution
