#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dbt/core/node.hpp"
#include "dbt/distribution/envelope.hpp"
#include "dbt/distribution/message.hpp"
#include "json.hpp"

namespace dbt {
class BehaviorTree;
}

namespace dbt::distribution {

class Executor;

/// Decorator that runs its child here or ships it to the nearby executor
/// with the best utility. Option `mode`: auto, local or remote.
class Shovable : public Node {
public:
    enum class Phase { inactive, querying, local, awaiting_ack, remote };

    void on_setup(NodeContext& ctx) override;
    NodeState on_tick(NodeContext& ctx) override;
    NodeState on_untick(NodeContext& ctx) override;
    void on_reset(NodeContext& ctx) override;
    void on_shutdown(NodeContext& ctx) override;

    Phase phase() const noexcept { return phase_; }
    /// "local", a peer id, or empty before the first decision.
    const std::string& executor() const noexcept { return winner_; }
    const std::string& correlation_id() const noexcept { return cid_; }
    /// Utilities seen at the last decision, "local" included.
    const std::map<std::string, utility::UtilityBounds>& last_utilities() const noexcept { return utilities_; }
    const std::optional<SubtreeResult>& last_result() const noexcept { return last_result_; }

private:
    NodeState start(NodeContext& ctx, Executor* ex, const std::string& child);
    NodeState poll_queries(NodeContext& ctx, Executor* ex, const std::string& child);
    NodeState decide(NodeContext& ctx, Executor* ex, const std::string& child);
    NodeState tick_local(NodeContext& ctx, const std::string& child);
    NodeState finish(NodeContext& ctx, const Message& result);
    void abort(NodeContext& ctx);

    Phase phase_ = Phase::inactive;
    std::string winner_;
    std::string cid_;
    std::int64_t deadline_ = 0;
    std::map<std::string, std::string> queries_; ///< correlation id -> peer
    std::map<std::string, utility::UtilityBounds> utilities_;
    std::optional<SubtreeResult> last_result_;
};

/// Hosts at most one shoved subtree, grafted below itself with node ids
/// prefixed "<slot id>/". An empty slot succeeds on tick.
class Slot : public Node {
public:
    /// Empty on success, otherwise why the envelope was rejected.
    std::optional<std::string> receive(BehaviorTree& tree, const std::string& slot_id, const nlohmann::json& envelope,
                                       const std::string& sender);
    /// Stops and drops the hosted subtree if it belongs to `correlation_id`.
    bool cancel(BehaviorTree& tree, const std::string& slot_id, const std::string& correlation_id);

    NodeState on_tick(NodeContext& ctx) override;
    void before_update(NodeContext& ctx, NodeAction action) override;
    void on_shutdown(NodeContext& ctx) override;
    utility::UtilityBounds utility(const UtilityContext&) const override { return utility::UtilityBounds::unknown(); }

    /// Holds a subtree that has not finished yet.
    bool occupied() const noexcept { return !hosted_.empty() && !finished_; }
    bool hosting() const noexcept { return !hosted_.empty(); }
    const std::string& hosted_root() const noexcept { return hosted_; }
    const std::string& correlation_id() const noexcept { return cid_; }
    const std::string& sender() const noexcept { return sender_; }
    std::uint64_t received_count() const noexcept { return received_; }

private:
    void purge(BehaviorTree& tree);
    bool try_send_result(NodeContext& ctx);

    std::string hosted_;
    std::string prefix_;
    std::string cid_;
    std::string sender_;
    std::vector<ParamId> outputs_; ///< original ids
    bool finished_ = false;
    std::optional<nlohmann::json> pending_result_;
    int retry_wait_ = 0;
    int backoff_ = 1;
    std::uint64_t received_ = 0;
};

void register_distribution_nodes(NodeLibrary& lib);

} // namespace dbt::distribution
