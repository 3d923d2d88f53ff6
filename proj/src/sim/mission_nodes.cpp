#include "dbt/sim/mission_nodes.hpp"

#include <cmath>

#include "dbt/core/behavior_tree.hpp"
#include "dbt/core/std_nodes.hpp"
#include "dbt/distribution/nodes.hpp"
#include "dbt/error.hpp"

namespace dbt::sim {

using utility::UtilityBounds;

namespace {

ParamSpec param(std::string name, std::string type) {
    ParamSpec s;
    s.name = std::move(name);
    s.type = TypeRef::parse(type);
    return s;
}

Cell to_cell(const Value& v) {
    const auto& p = v.as<Pose2d>();
    return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

const RobotHandle* handle(const RobotHandle* h) { return h != nullptr && h->world != nullptr ? h : nullptr; }

class MoveTo : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const RobotHandle* h = handle(ctx.service<RobotHandle>());
        if (h == nullptr) {
            ctx.emit("ERROR", "no robot");
            return NodeState::failed;
        }
        const Cell goal = to_cell(ctx.option("goal"));
        const Cell here = h->world->robot(h->robot).pose;
        if (here == goal) {
            return NodeState::succeeded;
        }
        if (!h->world->distance(here, goal)) {
            ctx.emit("ERROR", "goal " + to_string(goal) + " unreachable");
            return NodeState::failed;
        }
        h->world->command_move(h->robot, goal);
        return NodeState::running;
    }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const RobotHandle* h = handle(ctx.service<RobotHandle>());
        if (h == nullptr) return UtilityBounds::infeasible();
        const auto d = h->world->distance(h->world->robot(h->robot).pose, to_cell(ctx.option("goal")));
        if (!d) return UtilityBounds::infeasible();
        const double l = *d;
        return UtilityBounds::constant(l, l, 0, l);
    }
};

/// Leaf calling one robot service once per tick.
class ServiceLeaf : public Node {
public:
    explicit ServiceLeaf(std::string service) : service_(std::move(service)) {}

    NodeState on_tick(NodeContext& ctx) override {
        const RobotHandle* h = handle(ctx.service<RobotHandle>());
        if (h == nullptr) {
            ctx.emit("ERROR", "no robot");
            return NodeState::failed;
        }
        try {
            if (!call(*h, ctx)) return NodeState::failed;
        } catch (const ServiceUnavailable& e) {
            ctx.emit("ERROR", e.what());
            return NodeState::failed;
        }
        return NodeState::succeeded;
    }

    UtilityBounds utility(const UtilityContext& ctx) const override {
        const RobotHandle* h = handle(ctx.service<RobotHandle>());
        if (h == nullptr || !h->world->has_service(h->robot, service_)) return UtilityBounds::infeasible();
        return UtilityBounds::constant(1, 1, 1, 1);
    }

protected:
    virtual bool call(const RobotHandle& h, NodeContext& ctx) = 0;

private:
    std::string service_;
};

class OpenDoorService : public ServiceLeaf {
public:
    OpenDoorService() : ServiceLeaf(open_door_service) {}

protected:
    bool call(const RobotHandle& h, NodeContext& ctx) override {
        if (!h.world->call_open_door(h.robot, ctx.option("door").as<std::string>()).success) return false;
        ctx.set_output("openedBy", h.robot);
        return true;
    }
};

class PickupObjectService : public ServiceLeaf {
public:
    PickupObjectService() : ServiceLeaf(pickup_object_service) {}

protected:
    bool call(const RobotHandle& h, NodeContext& ctx) override {
        return h.world->call_pickup_object(h.robot, ctx.option("object").as<std::string>()).success;
    }
};

class IsDoorOpen : public Node {
public:
    NodeState on_tick(NodeContext& ctx) override {
        const RobotHandle* h = handle(ctx.service<RobotHandle>());
        if (h == nullptr) return NodeState::failed;
        return h->world->door(ctx.option("door").as<std::string>()).open ? NodeState::succeeded : NodeState::failed;
    }
    UtilityBounds utility(const UtilityContext&) const override { return UtilityBounds::constant(0, 0, 0, 0); }
};

template <class T>
NodeFactory make() {
    return [](const NodeRecord&) { return std::make_unique<T>(); };
}

} // namespace

void register_mission_nodes(NodeLibrary& lib) {
    lib.add({"MoveTo", 0, {param("goal", "pose2d")}, {}, {}, "Drives the robot to the goal cell."}, make<MoveTo>());
    lib.add({"OpenDoorService", 0, {param("door", "string")}, {}, {param("openedBy", "string")},
             "Asks the door to open; succeeds when the robot is next to it."},
            make<OpenDoorService>());
    lib.add({"PickupObjectService", 0, {param("object", "string")}, {}, {},
             "Picks up the object; succeeds when the robot is next to it."},
            make<PickupObjectService>());
    lib.add({"IsDoorOpen", 0, {param("door", "string")}, {}, {}, "Succeeds while the door is open."},
            make<IsDoorOpen>());
}

std::shared_ptr<NodeLibrary> mission_library() {
    auto lib = standard_library();
    distribution::register_distribution_nodes(*lib);
    register_mission_nodes(*lib);
    return lib;
}

} // namespace dbt::sim
