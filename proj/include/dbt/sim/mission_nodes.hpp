#pragma once

#include <memory>
#include <string>

#include "dbt/core/node.hpp"
#include "dbt/sim/world.hpp"

namespace dbt::sim {

/// Service handed to a tree: the robot its leaves drive.
struct RobotHandle {
    SimWorld* world = nullptr;
    std::string robot;
};

/// MoveTo, OpenDoorService, PickupObjectService and IsDoorOpen.
///
/// MoveTo(goal: pose2d) costs its path length and is infeasible when the goal
/// cannot be reached. The two service leaves cost 1 and are infeasible on a
/// robot without the service; calling them there fails the node with an
/// ERROR event. OpenDoorService writes the id of the robot that opened the
/// door to its openedBy output.
void register_mission_nodes(NodeLibrary& lib);

/// Standard, demo, distribution and mission nodes.
std::shared_ptr<NodeLibrary> mission_library();

} // namespace dbt::sim
