#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbt/distribution/message.hpp"
#include "dbt/sim/simulation.hpp"
#include "json.hpp"

namespace dbt::control {

namespace cmd {
inline constexpr const char* load_tree = "loadTree";
inline constexpr const char* tick = "tick";
inline constexpr const char* tick_until_result = "tickUntilResult";
inline constexpr const char* untick = "untick";
inline constexpr const char* reset = "reset";
inline constexpr const char* shutdown = "shutdown";
inline constexpr const char* set_option = "setOption";
inline constexpr const char* add_wiring = "addWiring";
inline constexpr const char* remove_wiring = "removeWiring";
inline constexpr const char* force_door = "forceDoor";
inline constexpr const char* shove_status = "shoveStatus";
inline constexpr const char* snapshot = "snapshot";
inline constexpr const char* node_types = "nodeTypes";
} // namespace cmd

inline constexpr const char* ack = "ACK";
inline constexpr const char* error = "ERROR";
inline constexpr const char* snapshot_type = "SNAPSHOT";
inline constexpr const char* server_id = "server";

/// Debugger/editor commands against a running simulation. Commands are
/// messages (type = command name, payload = arguments) and are answered
/// with ACK or ERROR under the same correlation id. Commands that change
/// the tree or the world are followed by a SNAPSHOT. `robot` defaults to
/// the mission robot in every command. Every command is logged as a
/// COMMAND event.
///
/// Not thread-safe: the server calls it from its tick loop only.
class ControlSession {
public:
    explicit ControlSession(std::unique_ptr<sim::Simulation> simulation);

    std::vector<distribution::Message> handle(const distribution::Message& command);
    /// One step while tickUntilResult is in effect; returns the snapshot.
    std::optional<distribution::Message> advance();
    bool auto_running() const noexcept { return auto_run_; }

    /// {cycle, nodeStates, paramValues, utilityCache, slotStatus, rootStates, world},
    /// per-robot maps keyed by robot id.
    nlohmann::json snapshot() const;
    distribution::Message snapshot_message() const;

    sim::Simulation& simulation() noexcept { return *sim_; }

private:
    nlohmann::json dispatch(const std::string& type, const nlohmann::json& args, bool& changed);
    distribution::Executor& target(const nlohmann::json& args);

    std::unique_ptr<sim::Simulation> sim_;
    bool auto_run_ = false;
    std::uint64_t auto_budget_ = 0;
};

} // namespace dbt::control
