#include "dbt/sim/world.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "dbt/error.hpp"

namespace dbt::sim {

namespace {

constexpr Cell directions[] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}}; // N E S W
constexpr int unreachable = -1;

} // namespace

std::string to_string(Cell c) { return std::to_string(c.x) + " " + std::to_string(c.y); }

SimWorld::SimWorld(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("grid must be non-empty");
    }
    walls_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), false);
}

void SimWorld::add_wall(Cell from, Cell to) {
    if (!on_grid(from) || !on_grid(to)) {
        throw std::invalid_argument("wall off grid");
    }
    for (int y = std::min(from.y, to.y); y <= std::max(from.y, to.y); ++y) {
        for (int x = std::min(from.x, to.x); x <= std::max(from.x, to.x); ++x) {
            walls_[index({x, y})] = true;
        }
    }
}

void SimWorld::add_door(const std::string& id, Cell cell, bool open) {
    if (!on_grid(cell)) throw std::invalid_argument("door " + id + " off grid");
    if (!doors_.emplace(id, Door{cell, open}).second) throw std::invalid_argument("duplicate door " + id);
}

void SimWorld::add_object(const std::string& id, Cell cell) {
    if (!on_grid(cell)) throw std::invalid_argument("object " + id + " off grid");
    if (!objects_.emplace(id, Object{cell, false}).second) throw std::invalid_argument("duplicate object " + id);
}

void SimWorld::add_robot(const std::string& id, Cell pose, std::set<std::string> services) {
    if (!on_grid(pose)) throw std::invalid_argument("robot " + id + " off grid");
    if (!robots_.emplace(id, Robot{pose, std::move(services)}).second) {
        throw std::invalid_argument("duplicate robot " + id);
    }
}

const Door* SimWorld::door_at(Cell c) const {
    for (const auto& [id, d] : doors_) {
        if (d.cell == c) return &d;
    }
    return nullptr;
}

bool SimWorld::is_wall(Cell c) const { return !on_grid(c) || (walls_[index(c)] && door_at(c) == nullptr); }

bool SimWorld::is_free(Cell c) const { return on_grid(c) && !is_wall(c); }

const Robot& SimWorld::robot(std::string_view id) const {
    auto it = robots_.find(id);
    if (it == robots_.end()) throw UnknownRobot("unknown robot '" + std::string(id) + "'");
    return it->second;
}

Robot& SimWorld::robot_mut(std::string_view id) {
    auto it = robots_.find(id);
    if (it == robots_.end()) throw UnknownRobot("unknown robot '" + std::string(id) + "'");
    return it->second;
}

const Door& SimWorld::door(std::string_view id) const {
    auto it = doors_.find(id);
    if (it == doors_.end()) throw UnknownDoor("unknown door '" + std::string(id) + "'");
    return it->second;
}

const Object& SimWorld::object(std::string_view id) const {
    auto it = objects_.find(id);
    if (it == objects_.end()) throw UnknownObject("unknown object '" + std::string(id) + "'");
    return it->second;
}

bool SimWorld::has_service(std::string_view robot_id, std::string_view service) const {
    return robot(robot_id).services.count(std::string(service)) != 0;
}

ServiceReply SimWorld::call_open_door(const std::string& robot_id, const std::string& door_id) {
    const Robot& r = robot(robot_id);
    door(door_id);
    if (r.services.count(open_door_service) == 0) {
        throw ServiceUnavailable("robot '" + robot_id + "' has no " + open_door_service + " service");
    }
    Door& d = doors_.find(door_id)->second;
    if (manhattan(r.pose, d.cell) > proximity) {
        return {false};
    }
    if (!d.open) {
        d.open = true;
        emit(robot_id, "DOOR_OPENED", door_id);
    }
    return {true};
}

ServiceReply SimWorld::call_pickup_object(const std::string& robot_id, const std::string& object_id) {
    const Robot& r = robot(robot_id);
    object(object_id);
    if (r.services.count(pickup_object_service) == 0) {
        throw ServiceUnavailable("robot '" + robot_id + "' has no " + pickup_object_service + " service");
    }
    Object& o = objects_.find(object_id)->second;
    if (o.picked_up || manhattan(r.pose, o.cell) > proximity) {
        return {false};
    }
    o.picked_up = true;
    emit(robot_id, "OBJECT_PICKED", object_id);
    return {true};
}

void SimWorld::force_door(const std::string& door_id, bool open) {
    door(door_id);
    doors_.find(door_id)->second.open = open;
    emit("world", "DOOR_FORCED", door_id + (open ? " open" : " closed"));
}

std::vector<int> SimWorld::distance_field(Cell goal) const {
    std::vector<int> dist(walls_.size(), unreachable);
    if (!is_free(goal)) return dist;
    std::deque<Cell> queue{goal};
    dist[index(goal)] = 0;
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        for (const Cell d : directions) {
            const Cell n{c.x + d.x, c.y + d.y};
            if (is_free(n) && dist[index(n)] == unreachable) {
                dist[index(n)] = dist[index(c)] + 1;
                queue.push_back(n);
            }
        }
    }
    return dist;
}

std::optional<int> SimWorld::distance(Cell from, Cell to) const {
    if (!is_free(from)) return std::nullopt;
    const int d = distance_field(to)[index(from)];
    if (d == unreachable) return std::nullopt;
    return d;
}

void SimWorld::command_move(const std::string& robot_id, Cell goal) {
    robot(robot_id);
    moves_[robot_id] = goal;
}

void SimWorld::step() {
    for (const auto& [id, goal] : moves_) {
        Robot& r = robot_mut(id);
        const auto field = distance_field(goal);
        if (!is_free(r.pose) || field[index(r.pose)] <= 0) continue;
        const int here = field[index(r.pose)];
        for (const Cell d : directions) {
            const Cell n{r.pose.x + d.x, r.pose.y + d.y};
            if (!is_free(n) || field[index(n)] != here - 1) continue;
            const Door* door = door_at(n);
            if (door != nullptr && !door->open) {
                emit(id, "BLOCKED", to_string(n));
            } else {
                r.pose = n;
                emit(id, "MOVE", to_string(n));
            }
            break;
        }
    }
    moves_.clear();
    ++clock_;
}

void SimWorld::emit(std::string_view actor, std::string_view event, std::string_view detail) const {
    for (const auto& l : listeners_) l(actor, event, detail);
}

} // namespace dbt::sim
