#include <algorithm>
#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "dbt/control/server.hpp"
#include "dbt/control/session.hpp"
#include "dbt/error.hpp"
#include "dbt/treefile/treefile.hpp"

using namespace dbt;
using namespace dbt::control;
using distribution::Message;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path missions = DBT_MISSIONS_DIR;

std::unique_ptr<sim::Simulation> team(const char* scenario = "two_robot.scn") {
    return std::make_unique<sim::Simulation>(sim::load_scenario(missions / scenario), sim::mission_library());
}

struct Client {
    ControlSession& s;
    int n = 0;

    std::vector<Message> send(const std::string& type, json payload = json::object()) {
        return s.handle({type, "c-" + std::to_string(++n), "ui", std::move(payload)});
    }
    /// The ACK or ERROR of a command.
    Message reply(const std::string& type, json payload = json::object()) { return send(type, std::move(payload)).at(0); }
};

bool has_command(const std::vector<std::string>& log, const std::string& type, const std::string& cid) {
    const std::string needle = ",control,COMMAND," + type + " cid=" + cid;
    return std::any_of(log.begin(), log.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

} // namespace

TEST_CASE("snapshot carries every node, parameter, utility and slot") {
    ControlSession s(team());
    const json snap = s.snapshot();
    for (const char* key : {"cycle", "nodeStates", "paramValues", "utilityCache", "slotStatus"}) {
        CHECK(snap.contains(key));
    }
    CHECK(snap["cycle"] == 0);
    CHECK(snap["nodeStates"]["r1"].size() == 11);
    CHECK(snap["nodeStates"]["r1"]["mission"] == "idle");
    CHECK(snap["nodeStates"]["r2"]["slot"] == "idle");
    CHECK(snap["paramValues"]["r1"].contains("open.output.openedBy"));
    CHECK(snap["paramValues"]["r1"]["go_to_door.option.goal"] == json({{"x", 9.0}, {"y", 10.0}}));
    CHECK(snap["utilityCache"]["r1"]["open"] == json::array({"x", "x", "x", "x"}));
    CHECK(snap["utilityCache"]["r1"]["go_to_door"] == json::array({7.0, 7.0, 0.0, 7.0}));
    CHECK(snap["slotStatus"]["r2"]["slot"]["occupied"] == false);
    CHECK(snap["world"]["doors"]["d1"]["open"] == false);
}

TEST_CASE("tick, tickUntilResult and the command log") {
    ControlSession s(team());
    Client c{s};
    auto out = c.send(cmd::tick, {{"count", 3}});
    REQUIRE(out.size() == 2);
    CHECK(out[0].type == ack);
    CHECK(out[0].correlation_id == "c-1");
    CHECK(out[0].payload["cycle"] == 3);
    CHECK(out[0].payload["rootState"] == "running");
    CHECK(out[1].type == snapshot_type);
    CHECK(out[1].payload["cycle"] == 3);

    CHECK(c.reply(cmd::tick_until_result).type == ack);
    CHECK(s.auto_running());
    int steps = 0;
    while (auto snap = s.advance()) {
        ++steps;
        REQUIRE(steps < 500);
    }
    CHECK_FALSE(s.auto_running());
    CHECK(s.simulation().mission_state() == NodeState::succeeded);
    CHECK(s.simulation().log().back().find(",r1,MISSION,succeeded") != std::string::npos);
    CHECK(has_command(s.simulation().log(), "tick", "c-1"));
    CHECK(has_command(s.simulation().log(), "tickUntilResult", "c-2"));
}

TEST_CASE("tickUntilResult honours maxCycles") {
    ControlSession s(team());
    Client c{s};
    c.reply(cmd::tick_until_result, {{"maxCycles", 4}});
    int steps = 0;
    while (s.advance()) ++steps;
    CHECK(steps == 4);
    CHECK(s.simulation().log().back().find("MISSION,max-cycles") != std::string::npos);
}

TEST_CASE("loadTree validates server-side") {
    ControlSession s(team());
    Client c{s};
    auto bad = c.send(cmd::load_tree, {{"tree", {{"schema_version", 1}, {"nodes", json::array()}}}});
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].type == error);
    CHECK(bad[0].payload["violations"].at(0)["where"] == "/nodes");
    CHECK(s.simulation().executor("r1").tree()->root() == "mission");

    const json doc = json::parse(R"({"schema_version":1,"nodes":[{"id":"only","kind":"Succeed"}],"edges":[],"wirings":[]})");
    auto ok = c.send(cmd::load_tree, {{"tree", doc}});
    CHECK(ok.at(0).type == ack);
    CHECK(ok.at(1).type == snapshot_type);
    CHECK(s.simulation().executor("r1").tree()->root() == "only");
    CHECK(c.reply(cmd::load_tree, {{"path", (missions / "mission.bt").string()}}).type == ack);
    CHECK(s.simulation().executor("r1").tree()->root() == "mission");
    CHECK(c.reply(cmd::load_tree, {{"robot", "r9"}, {"tree", doc}}).type == error);
}

TEST_CASE("setOption rebuilds the tree with the new value") {
    ControlSession s(team());
    Client c{s};
    auto r = c.reply(cmd::set_option, {{"node", "go_to_object"}, {"name", "goal"}, {"value", {{"x", 14}, {"y", 9}}}});
    CHECK(r.type == ack);
    const auto& env = s.simulation().executor("r1").tree()->env();
    CHECK(env.tree.node("go_to_object").options.at("goal") == Value(Pose2d{14, 9}));
    CHECK(env.world.state("mission") == NodeState::idle);
    CHECK(env.data.wirings().size() == 1);

    CHECK(c.reply(cmd::set_option, {{"node", "go_to_object"}, {"name", "goal"}, {"value", "north"}}).type == error);
    CHECK(c.reply(cmd::set_option, {{"node", "nobody"}, {"name", "goal"}, {"value", 1}}).type == error);
    CHECK(s.simulation().executor("r1").tree()->env().tree.node("go_to_object").options.at("goal") ==
          Value(Pose2d{14, 9}));
}

TEST_CASE("addWiring and removeWiring") {
    ControlSession s(team());
    Client c{s};
    const json w{{"source", {{"node", "open"}, {"name", "openedBy"}}}, {"target", {{"node", "report"}, {"name", "value"}}}};
    CHECK(c.reply(cmd::remove_wiring, w).type == ack);
    CHECK(s.simulation().executor("r1").tree()->env().data.wirings().empty());
    CHECK(c.reply(cmd::remove_wiring, w).type == error);
    CHECK(c.reply(cmd::add_wiring, w).type == ack);
    CHECK(s.simulation().executor("r1").tree()->env().data.wirings().size() == 1);
    const json wrong{{"source", {{"node", "open"}, {"name", "nope"}}}, {"target", {{"node", "report"}, {"name", "value"}}}};
    CHECK(c.reply(cmd::add_wiring, wrong).type == error);
}

TEST_CASE("untick, reset and shutdown act on a node or the root") {
    ControlSession s(team());
    Client c{s};
    c.send(cmd::tick, {{"count", 2}});
    REQUIRE(s.simulation().mission_state() == NodeState::running);
    auto r = c.reply(cmd::untick);
    CHECK(r.payload["state"] == "idle");
    CHECK(c.reply(cmd::reset, {{"node", "pickup"}}).payload["node"] == "pickup");
    r = c.reply(cmd::shutdown);
    CHECK(r.payload["state"] == "shutdown");
    c.send(cmd::tick);
    CHECK(s.simulation().mission_state() == NodeState::shutdown);
    CHECK(c.reply(cmd::tick_until_result).type == error);
}

TEST_CASE("forceDoor, shoveStatus, nodeTypes and unknown commands") {
    ControlSession s(team());
    Client c{s};
    auto out = c.send(cmd::force_door, {{"door", "d1"}, {"state", "open"}});
    CHECK(out.at(1).payload["world"]["doors"]["d1"]["open"] == true);
    CHECK(c.reply(cmd::force_door, {{"door", "d9"}, {"state", "open"}}).type == error);
    CHECK(c.reply(cmd::force_door, {{"door", "d1"}, {"state", "ajar"}}).type == error);
    c.send(cmd::force_door, {{"door", "d1"}, {"state", "closed"}});

    c.send(cmd::tick, {{"count", 5}});
    auto st = c.reply(cmd::shove_status).payload;
    REQUIRE(st["shovables"].size() == 1);
    CHECK(st["shovables"][0]["phase"] == "remote");
    CHECK(st["shovables"][0]["executor"] == "r2");
    CHECK(st["shovables"][0]["utilities"]["local"] == json::array({"x", "x", "x", "x"}));
    REQUIRE(st["slots"].size() == 1);
    CHECK(st["slots"][0]["occupied"] == true);
    CHECK(st["slots"][0]["correlationId"] == st["shovables"][0]["correlationId"]);
    CHECK(st["slots"][0]["sender"] == "r1");

    auto types = c.reply(cmd::node_types).payload["nodeTypes"];
    CHECK(std::any_of(types.begin(), types.end(), [](const json& t) { return t["name"] == "Shovable"; }));
    CHECK(c.reply("teleport").type == error);
    CHECK(has_command(s.simulation().log(), "teleport", "c-" + std::to_string(c.n)));
}

TEST_CASE("a scripted client steers a live server over TCP") {
    ControlSession session(team());
    ControlServer server(session);
    std::thread loop([&] { server.run(std::chrono::milliseconds(1)); });

    distribution::net::FrameStream stream(distribution::net::connect("127.0.0.1", server.port()));
    int n = 0;
    std::vector<std::string> sent;
    auto send = [&](const std::string& type, json payload = json::object()) {
        const std::string cid = "ui-" + std::to_string(++n);
        sent.push_back(type + " cid=" + cid);
        stream.send(Message{type, cid, "ui", std::move(payload)}.to_json());
        return cid;
    };
    std::vector<Message> seen;
    auto wait_for = [&](const std::function<bool(const Message&)>& pred) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
        while (std::chrono::steady_clock::now() < deadline) {
            auto j = stream.receive(std::chrono::milliseconds(200));
            if (!j) continue;
            seen.push_back(Message::from_json(*j));
            if (pred(seen.back())) return true;
        }
        return false;
    };
    auto event_has = [](const std::string& text) {
        return [text](const Message& m) {
            return m.type == event_type && m.payload.value("line", "").find(text) != std::string::npos;
        };
    };

    const std::string load = send(cmd::load_tree, {{"path", (missions / "mission.bt").string()}});
    CHECK(wait_for([&](const Message& m) { return m.type == ack && m.correlation_id == load; }));
    send(cmd::tick_until_result);
    REQUIRE(wait_for(event_has(",r2,DOOR_OPENED,d1")));
    send(cmd::force_door, {{"door", "d1"}, {"state", "closed"}});
    CHECK(wait_for(event_has(",r1,SHOVE,to=r2 cid=r1-4")));
    CHECK(wait_for(event_has(",r1,MISSION,succeeded")));
    send(cmd::snapshot);
    CHECK(wait_for([](const Message& m) { return m.type == snapshot_type && m.payload["rootStates"]["r1"] == "succeeded"; }));

    server.stop();
    loop.join();
    const auto& log = session.simulation().log();
    for (const auto& s : sent) {
        CHECK(std::any_of(log.begin(), log.end(), [&](const std::string& l) { return l.find(",control,COMMAND," + s) != std::string::npos; }));
    }
    CHECK(std::count_if(seen.begin(), seen.end(), [](const Message& m) { return m.type == snapshot_type; }) > 10);
}

TEST_CASE("the server answers malformed messages and survives disconnects") {
    ControlSession session(team());
    ControlServer server(session);
    std::thread loop([&] { server.run(std::chrono::milliseconds(1)); });
    {
        distribution::net::FrameStream a(distribution::net::connect("127.0.0.1", server.port()));
        a.send(json{{"hello", 1}});
        auto j = a.receive(std::chrono::seconds(5));
        REQUIRE(j);
        CHECK(Message::from_json(*j).type == error);
    }
    distribution::net::FrameStream b(distribution::net::connect("127.0.0.1", server.port()));
    b.send(Message{cmd::shove_status, "x", "ui", json::object()}.to_json());
    std::optional<json> j;
    do {
        j = b.receive(std::chrono::seconds(5));
        REQUIRE(j);
    } while (Message::from_json(*j).type == event_type);
    CHECK(Message::from_json(*j).type == ack);
    server.stop();
    loop.join();
}
