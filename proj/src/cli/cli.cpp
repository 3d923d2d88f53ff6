#include "dbt/cli/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "dbt/control/server.hpp"
#include "dbt/control/session.hpp"
#include "dbt/error.hpp"
#include "dbt/sim/simulation.hpp"
#include "dbt/treefile/treefile.hpp"

namespace dbt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Used by run and serve when no scenario is given.
const char* bare_scenario = "grid 20 20\nrobot r1 0 0\n";

struct Flags {
    std::string tree;
    std::string scenario;
    std::string manifest;
    std::string transport = "inproc";
    std::string final_state;
    std::optional<double> hz;
    std::optional<std::uint64_t> max_cycles;
    std::optional<std::uint64_t> cycles;
    std::uint16_t base_port = 0;
    std::uint16_t port = 0;
    bool until_result = false;
    bool realtime = false;
    bool trace = false;
};

void report(std::ostream& err, const std::string& kind, const std::string& message, json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    err << extra.dump() << '\n';
}

std::shared_ptr<NodeLibrary> library_for(const Flags& f) {
    auto lib = sim::mission_library();
    if (f.manifest.empty()) return lib;
    return std::make_shared<NodeLibrary>(lib->restricted_to(NodeLibrary::read_manifest(f.manifest)));
}

sim::Scenario scenario_for(const Flags& f) {
    return f.scenario.empty() ? sim::parse_scenario(bare_scenario) : sim::load_scenario(f.scenario);
}

int exit_for(NodeState s) {
    if (s == NodeState::succeeded) return success;
    if (s == NodeState::failed) return mission_failed;
    return runtime_error;
}

/// Steps the simulation; with until_result stops once the mission finished.
int drive(control::ControlSession& session, const Flags& f, std::ostream& err) {
    sim::Simulation& s = session.simulation();
    const auto period = std::chrono::duration<double>(1.0 / s.hz());
    const std::uint64_t limit = f.until_result ? f.max_cycles.value_or(s.max_cycles()) : f.cycles.value_or(1);
    int code = success;
    bool finished = false;
    for (std::uint64_t i = 0; i < limit && !finished; ++i) {
        const auto start = std::chrono::steady_clock::now();
        s.step();
        const NodeState st = s.mission_state();
        if (f.until_result && st != NodeState::running) {
            s.record(s.mission_robot(), "MISSION", to_string(st));
            code = exit_for(st);
            finished = true;
        }
        if (f.realtime) std::this_thread::sleep_until(start + period);
    }
    if (f.until_result && !finished) {
        report(err, "MaxCycles", "mission still running after " + std::to_string(limit) + " cycles");
        code = runtime_error;
    }
    const auto& tree = *s.executor(s.mission_robot()).tree();
    for (const auto& id : tree.env().tree.preorder()) {
        s.record(s.mission_robot(), "FINAL", id + " " + std::string(to_string(tree.state(id))));
    }
    if (!f.final_state.empty()) {
        std::ofstream(f.final_state) << session.snapshot().dump(2) << '\n';
    }
    return code;
}

int cmd_validate(const Flags& f, std::ostream& out) {
    const auto lib = library_for(f);
    json r{{"file", f.tree}};
    try {
        const TreeEnvironment env = treefile::load_tree_file(f.tree, *lib);
        r["valid"] = true;
        r["nodes"] = env.tree.size();
        out << r.dump() << '\n';
        return success;
    } catch (const ValidationError& e) {
        json v = json::array();
        for (const auto& item : e.violations()) v.push_back({{"where", item.where}, {"what", item.what}});
        r["valid"] = false;
        r["errors"] = v;
    } catch (const ParseError& e) {
        r["valid"] = false;
        r["errors"] = json::array({{{"where", ""}, {"what", e.what()}}});
    } catch (const IncludeCycle& e) {
        r["valid"] = false;
        r["errors"] = json::array({{{"where", "/includes"}, {"what", e.what()}}});
    }
    out << r.dump() << '\n';
    return invalid_input;
}

std::unique_ptr<sim::Simulation> make_simulation(const Flags& f, const std::shared_ptr<NodeLibrary>& lib,
                                                 bool single, std::ostream& out) {
    sim::Scenario scn = scenario_for(f);
    sim::SimulationOptions o;
    o.trace = f.trace;
    o.hz = f.hz;
    o.base_port = f.base_port;
    o.transport = f.transport == "tcp" ? sim::TransportKind::tcp : sim::TransportKind::in_process;
    if (single) {
        const std::string robot = scn.robots.front().id;
        o.executors = {robot};
        o.trees[robot] = f.tree.empty() ? treefile::load_tree_text(R"({"schema_version":1,"nodes":[{"id":"idle","kind":"Succeed"}],"edges":[],"wirings":[]})", *lib)
                                        : treefile::load_tree_file(f.tree, *lib);
    }
    auto s = std::make_unique<sim::Simulation>(std::move(scn), lib, o);
    s->on_line([&out](const std::string& line) { out << line << '\n'; });
    return s;
}

int cmd_serve(const Flags& f, const std::shared_ptr<NodeLibrary>& lib, std::ostream& out) {
    // signals go to a waiter thread, not to the server's threads
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    const bool single = f.scenario.empty() || !f.tree.empty();
    control::ControlSession session(make_simulation(f, lib, single, out));
    control::ControlServer server(session, f.port);
    out << json{{"listening", "127.0.0.1:" + std::to_string(server.port())}}.dump() << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    const auto period = std::chrono::milliseconds(static_cast<int>(1000.0 / session.simulation().hz()));
    server.run(period);
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    return success;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed behavior tree runtime"};
    app.require_subcommand(1);
    Flags f;

    auto* validate = app.add_subcommand("validate", "Check a tree document; exit 2 with a JSON report on violations");
    validate->add_option("tree", f.tree, "Tree document")->required();
    validate->add_option("--manifest", f.manifest, "Only allow the node types listed in this file");

    auto add_run_flags = [&](CLI::App* c) {
        c->add_option("--hz", f.hz, "Tick rate (default: scenario, else 10)");
        c->add_option("--max-cycles", f.max_cycles, "Give up after this many cycles (default: scenario, else 10000)");
        c->add_flag("--realtime", f.realtime, "Sleep so cycles run at --hz");
        c->add_flag("--trace", f.trace, "Also log received messages and state changes");
        c->add_option("--final-state", f.final_state, "Write the final snapshot as JSON to this file");
        c->add_option("--manifest", f.manifest, "Only allow the node types listed in this file");
    };

    auto* run = app.add_subcommand("run", "Run one tree on the scenario's first robot");
    run->add_option("tree", f.tree, "Tree document")->required();
    run->add_option("--scenario", f.scenario, "Scenario file");
    run->add_flag("--until-result", f.until_result, "Tick until the root is no longer running");
    run->add_option("--cycles", f.cycles, "Cycles to run without --until-result (default 1)");
    add_run_flags(run);

    auto* team = app.add_subcommand("team", "Run every robot of a scenario until the mission finishes");
    team->add_option("scenario", f.scenario, "Scenario file")->required();
    team->add_option("--transport", f.transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
    team->add_option("--base-port", f.base_port, "First TCP port (default: any free port)");
    add_run_flags(team);

    auto* serve = app.add_subcommand("serve", "Serve the control API until SIGINT/SIGTERM");
    serve->add_option("--port", f.port, "TCP port (default: any free port)");
    serve->add_option("--scenario", f.scenario, "Scenario file; every robot with a tree gets an executor");
    serve->add_option("--tree", f.tree, "Tree for the first robot; then only that robot runs");
    serve->add_option("--hz", f.hz, "Rate of tickUntilResult");
    serve->add_flag("--trace", f.trace, "Also log received messages and state changes");
    serve->add_option("--manifest", f.manifest, "Only allow the node types listed in this file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return success;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return success;
    } catch (const CLI::ParseError& e) {
        report(err, "UsageError", e.what());
        return invalid_input;
    }

    try {
        if (*validate) {
            return cmd_validate(f, out);
        }
        const auto lib = library_for(f);
        if (*serve) {
            return cmd_serve(f, lib, out);
        }
        if (*team) f.until_result = true;
        control::ControlSession session(make_simulation(f, lib, static_cast<bool>(*run), out));
        return drive(session, f, err);
    } catch (const ValidationError& e) {
        json v = json::array();
        for (const auto& item : e.violations()) v.push_back({{"where", item.where}, {"what", item.what}});
        report(err, "ValidationError", e.what(), {{"violations", v}});
        return invalid_input;
    } catch (const ParseError& e) {
        report(err, "ParseError", e.what());
        return invalid_input;
    } catch (const IncludeCycle& e) {
        report(err, "IncludeCycle", e.what());
        return invalid_input;
    } catch (const ScenarioError& e) {
        report(err, "ScenarioError", e.what());
        return invalid_input;
    } catch (const UnknownNodeType& e) {
        report(err, "UnknownNodeType", e.what());
        return invalid_input;
    } catch (const std::exception& e) {
        report(err, "RuntimeError", e.what());
        return runtime_error;
    }
}

} // namespace dbt::cli
