#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dbt::sim {

struct Cell {
    int x = 0;
    int y = 0;

    auto operator<=>(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) { return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y); }

inline constexpr const char* open_door_service = "openDoor";
inline constexpr const char* pickup_object_service = "pickupObject";

struct Robot {
    Cell pose;
    std::set<std::string> services;
};

struct Door {
    Cell cell;
    bool open = false;
};

struct Object {
    Cell cell;
    bool picked_up = false;
};

struct ServiceReply {
    bool success = false;
};

/// Grid world with walls, doors and objects. Robots move one cell per step
/// towards their commanded goal; nothing here is random.
class SimWorld {
public:
    /// actor, event, detail
    using Listener = std::function<void(std::string_view, std::string_view, std::string_view)>;

    /// Cells a robot may be within (Manhattan) to use a door or an object.
    static constexpr int proximity = 1;

    SimWorld(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool on_grid(Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

    void add_wall(Cell from, Cell to);
    /// Doors sit on any cell, walls included, and make it passable while open.
    void add_door(const std::string& id, Cell cell, bool open);
    void add_object(const std::string& id, Cell cell);
    void add_robot(const std::string& id, Cell pose, std::set<std::string> services);

    bool is_wall(Cell c) const;
    /// Closed doors count as free: they are planned through and waited at.
    bool is_free(Cell c) const;
    const Door* door_at(Cell c) const;

    /// Throws UnknownRobot / UnknownDoor / UnknownObject.
    const Robot& robot(std::string_view id) const;
    const Door& door(std::string_view id) const;
    const Object& object(std::string_view id) const;
    const std::map<std::string, Robot, std::less<>>& robots() const noexcept { return robots_; }
    const std::map<std::string, Door, std::less<>>& doors() const noexcept { return doors_; }
    const std::map<std::string, Object, std::less<>>& objects() const noexcept { return objects_; }
    bool has_service(std::string_view robot, std::string_view service) const;

    /// Throws UnknownRobot, UnknownDoor, ServiceUnavailable.
    ServiceReply call_open_door(const std::string& robot, const std::string& door);
    /// Throws UnknownRobot, UnknownObject, ServiceUnavailable.
    ServiceReply call_pickup_object(const std::string& robot, const std::string& object);
    /// Throws UnknownDoor.
    void force_door(const std::string& door, bool open);

    /// Shortest path length ignoring door states; empty if unreachable.
    std::optional<int> distance(Cell from, Cell to) const;

    /// Goal for the next step; the latest command of a step wins.
    void command_move(const std::string& robot, Cell goal);
    const std::map<std::string, Cell>& pending_moves() const noexcept { return moves_; }
    /// Moves every commanded robot one cell and advances the clock.
    void step();
    std::uint64_t clock() const noexcept { return clock_; }

    void on_event(Listener l) { listeners_.push_back(std::move(l)); }

private:
    Robot& robot_mut(std::string_view id);
    void emit(std::string_view actor, std::string_view event, std::string_view detail) const;
    std::vector<int> distance_field(Cell goal) const;
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x); }

    int width_;
    int height_;
    std::vector<bool> walls_;
    std::map<std::string, Robot, std::less<>> robots_;
    std::map<std::string, Door, std::less<>> doors_;
    std::map<std::string, Object, std::less<>> objects_;
    std::map<std::string, Cell> moves_;
    std::uint64_t clock_ = 0;
    std::vector<Listener> listeners_;
};

std::string to_string(Cell c);

} // namespace dbt::sim
