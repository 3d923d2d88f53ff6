#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/sim/world.hpp"

namespace dbt::sim {

/// Only scripted world perturbation so far.
struct ForceDoor {
    std::string door;
    bool open = false;
};

struct RobotSpec {
    std::string id;
    Cell pose;
    std::set<std::string> services;
    std::filesystem::path tree; ///< absolute, or empty for a robot without executor
};

/// `at tick N: ...`
struct TimedAction {
    std::uint64_t tick = 0;
    ForceDoor action;
};

/// `on EVENT subject +K: ...`, fires once, K ticks after the first matching event.
struct TriggeredAction {
    std::string event;
    std::string subject;
    std::uint64_t delay = 0;
    ForceDoor action;
};

struct WallSpec {
    Cell from;
    Cell to;
};

struct DoorSpec {
    std::string id;
    Cell cell;
    bool open = false;
};

struct ObjectSpec {
    std::string id;
    Cell cell;
};

/// Line-based scenario description. Lines, '#' starts a comment:
///
///     grid 20 20
///     wall 10 0 10 19
///     door d1 10 10 closed
///     object o1 15 10
///     robot r1 2 10 services=pickupObject tree=mission.bt
///     hz 10
///     max-cycles 10000
///     at tick 40: forceDoor d1 closed
///     on DOOR_OPENED d1 +3: forceDoor d1 closed
///
/// The first robot owns the mission. Tree paths are relative to the file.
struct Scenario {
    int width = 20;
    int height = 20;
    std::vector<WallSpec> walls;
    std::vector<DoorSpec> doors;
    std::vector<ObjectSpec> objects;
    std::vector<RobotSpec> robots;
    std::optional<double> hz;
    std::optional<std::uint64_t> max_cycles;
    std::vector<TimedAction> timed;
    std::vector<TriggeredAction> triggered;

    SimWorld make_world() const;
};

/// Throws ScenarioError naming the line.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

} // namespace dbt::sim
