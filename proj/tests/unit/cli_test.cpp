#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dbt/cli/cli.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path missions = DBT_MISSIONS_DIR;

struct Result {
    int code;
    std::vector<std::string> lines;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dbt::cli::run_cli(args, out, err);
    Result r{code, {}, err.str()};
    std::istringstream in(out.str());
    for (std::string l; std::getline(in, l);) r.lines.push_back(l);
    return r;
}

std::string m(const char* name) { return (missions / name).string(); }

std::ptrdiff_t find(const Result& r, const std::string& text) {
    auto it = std::find_if(r.lines.begin(), r.lines.end(), [&](const std::string& l) { return l.find(text) != std::string::npos; });
    return it == r.lines.end() ? -1 : it - r.lines.begin();
}

fs::path temp_file(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("validate reports violations as JSON with exit 2") {
    auto r = cli({"validate", m("broken.bt")});
    CHECK(r.code == dbt::cli::invalid_input);
    REQUIRE(r.lines.size() == 1);
    const json j = json::parse(r.lines[0]);
    CHECK(j["valid"] == false);
    std::vector<std::string> where;
    for (const auto& e : j["errors"]) where.push_back(e["where"]);
    CHECK(where == std::vector<std::string>{"/nodes/1/options/goal", "/nodes/4/kind", "/edges/2"});

    r = cli({"validate", m("mission.bt")});
    CHECK(r.code == dbt::cli::success);
    CHECK(json::parse(r.lines.at(0))["nodes"] == 11);
}

TEST_CASE("validate with a manifest rejects types outside it") {
    const auto manifest = temp_file("dbt_cli_manifest.txt", "Sequence\nFallback\n");
    auto r = cli({"validate", m("mission.bt"), "--manifest", manifest.string()});
    CHECK(r.code == dbt::cli::invalid_input);
    CHECK(cli({"validate", m("mission.bt"), "--manifest", m("nodes.manifest")}).code == dbt::cli::success);
}

TEST_CASE("validate tolerates unreadable input") {
    const auto junk = temp_file("dbt_cli_junk.bt", "{ not json");
    auto r = cli({"validate", junk.string()});
    CHECK(r.code == dbt::cli::invalid_input);
    CHECK(json::parse(r.lines.at(0))["valid"] == false);
}

TEST_CASE("run the single-robot mission") {
    const fs::path final_state = fs::temp_directory_path() / "dbt_cli_final.json";
    fs::remove(final_state);
    auto r = cli({"run", m("mission.bt"), "--scenario", m("single.scn"), "--until-result", "--final-state",
                  final_state.string()});
    CHECK(r.code == dbt::cli::success);
    const auto opened = find(r, ",r1,DOOR_OPENED,d1");
    const auto picked = find(r, ",r1,OBJECT_PICKED,o1");
    REQUIRE(opened >= 0);
    REQUIRE(picked >= 0);
    CHECK(opened < picked);
    CHECK(find(r, ",r1,MISSION,succeeded") >= 0);
    CHECK(find(r, ",r1,FINAL,mission succeeded") >= 0);
    CHECK(find(r, ",r1,FINAL,report succeeded") >= 0);

    for (const auto& l : r.lines) {
        CHECK(std::count(l.begin(), l.end(), ',') == 3);
    }

    std::ifstream in(final_state);
    REQUIRE(in.good());
    const json snap = json::parse(in);
    CHECK(snap["rootStates"]["r1"] == "succeeded");
    CHECK(snap["paramValues"]["r1"]["report.input.value"] == "r1");
}

TEST_CASE("run exit codes") {
    // r1 lacks openDoor here and nobody else runs a tree
    CHECK(cli({"run", m("mission.bt"), "--scenario", m("two_robot.scn"), "--until-result"}).code ==
          dbt::cli::mission_failed);
    auto r = cli({"run", m("mission.bt"), "--scenario", m("single.scn"), "--until-result", "--max-cycles", "3"});
    CHECK(r.code == dbt::cli::runtime_error);
    CHECK(json::parse(r.err)["error"] == "MaxCycles");
    r = cli({"run", m("mission.bt"), "--scenario", m("single.scn"), "--cycles", "2"});
    CHECK(r.code == dbt::cli::success);
    CHECK(find(r, "FINAL,mission running") >= 0);
    r = cli({"run", m("broken.bt")});
    CHECK(r.code == dbt::cli::invalid_input);
    CHECK(json::parse(r.err)["error"] == "ValidationError");
    const auto bad_scn = temp_file("dbt_cli_bad.scn", "grid 5 5\nteleporter 1 1\n");
    r = cli({"run", m("mission.bt"), "--scenario", bad_scn.string()});
    CHECK(r.code == dbt::cli::invalid_input);
    CHECK(json::parse(r.err)["error"] == "ScenarioError");
    CHECK(cli({"run", m("no_such.bt")}).code == dbt::cli::invalid_input);
}

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).code == dbt::cli::invalid_input);
    CHECK(cli({"fly"}).code == dbt::cli::invalid_input);
    CHECK(cli({"team", m("two_robot.scn"), "--transport", "pigeon"}).code == dbt::cli::invalid_input);
    CHECK(cli({"--help"}).code == dbt::cli::success);
}

TEST_CASE("team runs are identical over both transports") {
    auto a = cli({"team", m("two_robot.scn")});
    auto b = cli({"team", m("two_robot.scn"), "--transport", "tcp"});
    CHECK(a.code == dbt::cli::success);
    CHECK(b.code == dbt::cli::success);
    CHECK(a.lines == b.lines);
    const auto shove = find(a, ",r1,SHOVE,to=r2 cid=r1-2");
    const auto ack = find(a, ",r2,SHOVE_ACK,to=r1 cid=r1-2");
    const auto result = find(a, ",r2,RESULT,to=r1 cid=r1-2 state=succeeded");
    REQUIRE(shove >= 0);
    CHECK(shove < ack);
    CHECK(ack < result);
    CHECK(find(a, ",r2,DOOR_OPENED,d1") < find(a, ",r1,OBJECT_PICKED,o1"));
}
