#include "dbt/sim/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dbt/error.hpp"

namespace dbt::sim {

namespace {

struct LineError {
    std::string what;
};

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

template <class T>
T number(const std::string& text, const char* what) {
    T v{};
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw LineError{std::string("bad ") + what + " '" + text + "'"};
    return v;
}

Cell cell(const std::vector<std::string>& w, std::size_t at) {
    if (w.size() < at + 2) throw LineError{"missing coordinates"};
    return {number<int>(w[at], "x"), number<int>(w[at + 1], "y")};
}

void arity(const std::vector<std::string>& w, std::size_t n) {
    if (w.size() != n) throw LineError{"'" + w[0] + "' takes " + std::to_string(n - 1) + " arguments"};
}

bool door_state(const std::string& s) {
    if (s == "open") return true;
    if (s == "closed") return false;
    throw LineError{"door state must be open or closed, got '" + s + "'"};
}

ForceDoor action(std::string_view text) {
    const auto w = split(text);
    if (w.empty() || w[0] != "forceDoor") throw LineError{"unknown action '" + std::string(text) + "'"};
    arity(w, 3);
    return {w[1], door_state(w[2])};
}

std::set<std::string> services(const std::string& list) {
    std::set<std::string> out;
    std::istringstream in(list);
    for (std::string s; std::getline(in, s, ',');) {
        if (s.empty()) continue;
        if (s != open_door_service && s != pickup_object_service) throw LineError{"unknown service '" + s + "'"};
        out.insert(s);
    }
    return out;
}

void parse_line(Scenario& s, std::string_view line, const std::filesystem::path& base_dir) {
    // scripted events carry their action after the colon
    const auto colon = line.find(':');
    auto w = split(line.substr(0, colon));
    const std::string& kw = w[0];
    if (kw == "at" || kw == "on") {
        if (colon == std::string_view::npos) throw LineError{"missing ':' before the action"};
        const ForceDoor a = action(line.substr(colon + 1));
        if (kw == "at") {
            if (w.size() != 3 || w[1] != "tick") throw LineError{"expected 'at tick N:'"};
            s.timed.push_back({number<std::uint64_t>(w[2], "tick"), a});
        } else {
            if (w.size() != 4 || w[3].size() < 2 || w[3][0] != '+') throw LineError{"expected 'on EVENT subject +K:'"};
            s.triggered.push_back({w[1], w[2], number<std::uint64_t>(w[3].substr(1), "delay"), a});
        }
        return;
    }
    if (colon != std::string_view::npos) throw LineError{"unexpected ':'"};
    if (kw == "grid") {
        arity(w, 3);
        s.width = number<int>(w[1], "width");
        s.height = number<int>(w[2], "height");
    } else if (kw == "wall") {
        arity(w, 5);
        s.walls.push_back({cell(w, 1), cell(w, 3)});
    } else if (kw == "door") {
        arity(w, 5);
        s.doors.push_back({w[1], cell(w, 2), door_state(w[4])});
    } else if (kw == "object") {
        arity(w, 4);
        s.objects.push_back({w[1], cell(w, 2)});
    } else if (kw == "robot") {
        if (w.size() < 4) throw LineError{"expected 'robot id x y [services=...] [tree=...]'"};
        RobotSpec r{w[1], cell(w, 2), {}, {}};
        for (std::size_t i = 4; i < w.size(); ++i) {
            const auto eq = w[i].find('=');
            const std::string key = w[i].substr(0, eq);
            const std::string value = eq == std::string::npos ? "" : w[i].substr(eq + 1);
            if (key == "services") {
                r.services = services(value);
            } else if (key == "tree" && !value.empty()) {
                r.tree = base_dir / value;
            } else {
                throw LineError{"unknown robot attribute '" + w[i] + "'"};
            }
        }
        for (const auto& other : s.robots) {
            if (other.id == r.id) throw LineError{"duplicate robot '" + r.id + "'"};
        }
        s.robots.push_back(std::move(r));
    } else if (kw == "hz") {
        arity(w, 2);
        s.hz = number<double>(w[1], "hz");
        if (*s.hz <= 0) throw LineError{"hz must be positive"};
    } else if (kw == "max-cycles") {
        arity(w, 2);
        s.max_cycles = number<std::uint64_t>(w[1], "max-cycles");
    } else {
        throw LineError{"unknown keyword '" + kw + "'"};
    }
}

} // namespace

SimWorld Scenario::make_world() const {
    SimWorld world(width, height);
    for (const auto& wall : walls) world.add_wall(wall.from, wall.to);
    for (const auto& d : doors) world.add_door(d.id, d.cell, d.open);
    for (const auto& o : objects) world.add_object(o.id, o.cell);
    for (const auto& r : robots) world.add_robot(r.id, r.pose, r.services);
    return world;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    Scenario s;
    std::istringstream in{std::string(text)};
    int n = 0;
    for (std::string line; std::getline(in, line);) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (split(line).empty()) continue;
        try {
            parse_line(s, line, base_dir);
        } catch (const LineError& e) {
            throw ScenarioError("line " + std::to_string(n) + ": " + e.what);
        }
    }
    try {
        s.make_world();
    } catch (const std::exception& e) {
        throw ScenarioError(e.what());
    }
    auto check_door = [&](const ForceDoor& a) {
        for (const auto& d : s.doors) {
            if (d.id == a.door) return;
        }
        throw ScenarioError("unknown door '" + a.door + "' in scripted event");
    };
    for (const auto& t : s.timed) check_door(t.action);
    for (const auto& t : s.triggered) check_door(t.action);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot read scenario " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.parent_path());
}

} // namespace dbt::sim
