// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "builder.hpp"
#include "cost_oracle.hpp"
#include "dist_harness.hpp"
#include "fig2.hpp"
#include "random_tree.hpp"
#include "dbt/cli/cli.hpp"
#include "dbt/dataflow/ops.hpp"
#include "dbt/sim/simulation.hpp"
#include "dbt/treefile/treefile.hpp"
#include "dbt/utility/aggregate.hpp"

using namespace dbt;
namespace fs = std::filesystem;
using S = NodeState;
using A = NodeAction;

namespace {

const fs::path missions = DBT_MISSIONS_DIR;

struct Outcome {
    bool ok;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_s > 0 && secs >= limit_s) {
        o.ok = false;
        o.detail += " too slow";
    }
    failures += !o.ok;
    std::ostringstream t;
    t.precision(3);
    t << std::fixed << secs;
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << " (" << t.str() << " s";
    if (!o.detail.empty()) std::cout << "; " << o.detail;
    std::cout << ")" << std::endl;
}

struct Line {
    std::uint64_t clock;
    std::string actor, event, detail;
};

std::vector<Line> parse_log(const std::vector<std::string>& raw) {
    std::vector<Line> out;
    for (const auto& l : raw) {
        std::istringstream in(l);
        Line x;
        std::string clock;
        std::getline(in, clock, ',');
        std::getline(in, x.actor, ',');
        std::getline(in, x.event, ',');
        std::getline(in, x.detail);
        x.clock = std::stoull(clock);
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

/// Index of the first matching line at or after `from`, -1 if none.
long find(const std::vector<Line>& log, const std::string& actor, const std::string& event,
          const std::string& detail_prefix = "", long from = 0) {
    for (long i = std::max(from, 0L); i < static_cast<long>(log.size()); ++i) {
        const auto& l = log[i];
        if (l.actor == actor && l.event == event && l.detail.rfind(detail_prefix, 0) == 0) return i;
    }
    return -1;
}

long count(const std::vector<Line>& log, const std::string& actor, const std::string& event) {
    return std::count_if(log.begin(), log.end(), [&](const Line& l) { return l.actor == actor && l.event == event; });
}

/// The diagram's cell; error is absorbing except for reset and shutdown.
std::set<S> expected_cell(const std::set<test::Triple>& edges, S from, A a) {
    if (from == S::error) return {a == A::reset ? S::idle : a == A::shutdown ? S::shutdown : S::error};
    std::set<S> out;
    for (S to : all_states) {
        if (edges.count({from, a, to})) out.insert(to);
    }
    return out;
}

Outcome state_machine() {
    const auto edges = test::diagram_edges();
    // nondeterministic cells: every allowed result must be in the diagram's cell
    int mismatches = 0;
    int cells = 0;
    int narrowed = 0;
    for (S from : all_states) {
        for (A a : all_actions) {
            ++cells;
            const auto allowed = allowed_transitions(from, a);
            const std::set<S> got(allowed.begin(), allowed.end());
            const std::set<S> want = expected_cell(edges, from, a);
            mismatches += got.empty() != want.empty() || !std::includes(want.begin(), want.end(), got.begin(), got.end());
            narrowed += got != want;
        }
    }
    // the engine's observed transitions are members of the table's cells
    auto bt = test::Builder()
                  .node("root", "Parallel")
                  .node("s", "Scripted", {{"script", test::script({"running", "failed", "succeeded"})}}, "root")
                  .node("w", "Wait", {{"duration_ms", Value(100000)}, {"pausable", Value(true)}}, "root")
                  .tree();
    std::mt19937 rng(11);
    const std::vector<std::string> ids{"root", "s", "w"};
    int off = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto& id = ids[rng() % ids.size()];
        const A a = all_actions[rng() % all_actions.size()];
        const S from = bt.state(id);
        const S to = bt.update(id, a);
        // an illegal request sends the node to error by design
        if (to == S::error && from != S::error) continue;
        off += expected_cell(edges, from, a).count(to) == 0;
    }
    return {mismatches == 0 && cells == 40 && off == 0,
            std::to_string(cells) + " cells, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(narrowed) + " narrowed, " + std::to_string(off) + " off-table engine transitions"};
}

Outcome table_ii() {
    using utility::Cost;
    using utility::PathOutcome;
    using utility::UtilityBounds;
    const UtilityBounds child = UtilityBounds::constant(1, 10, 2, 5);
    const std::vector<UtilityBounds> kids{child, child};
    const bool total = utility::aggregate_parallel(kids, 1) == UtilityBounds::constant(1, 20, 4, 10);
    using O = PathOutcome;
    struct Row {
        O c1, c2;
        S result;
        double min, max;
    };
    const Row rows[] = {
        {O::succeeded, O::succeeded, S::succeeded, 2, 20}, {O::succeeded, O::failed, S::succeeded, 3, 15},
        {O::succeeded, O::running, S::succeeded, 1, 10},   {O::running, O::succeeded, S::succeeded, 1, 10},
        {O::failed, O::succeeded, S::succeeded, 3, 15},    {O::failed, O::failed, S::failed, 4, 10},
    };
    const auto paths = utility::parallel_execution_paths(kids, 1);
    int bad = 0;
    for (const auto& r : rows) {
        auto it = std::find_if(paths.begin(), paths.end(),
                               [&](const utility::ParallelPath& p) { return p.outcomes == std::vector<O>{r.c1, r.c2}; });
        bad += it == paths.end() || it->result != r.result || !(it->min == Cost::finite(r.min)) ||
               !(it->max == Cost::finite(r.max));
    }
    return {total && bad == 0 && paths.size() == 6,
            std::string("aggregate ") + (total ? "(1,20,4,10)" : "wrong") + ", " + std::to_string(bad) + " bad rows"};
}

Outcome cost_algebra() {
    using utility::Cost;
    std::mt19937 rng(99);
    auto random_cost = [&] {
        switch (rng() % 6) {
        case 0: return Cost::infeasible();
        case 1: return Cost::unknown();
        default: return Cost::finite(static_cast<double>(static_cast<int>(rng() % 41) - 20) / 2.0);
        }
    };
    int fails = 0;
    for (int i = 0; i < 1000; ++i) {
        const Cost a = random_cost(), b = random_cost(), c = random_cost();
        fails += !(a + b == b + a);
        fails += !((a + b) + c == a + (b + c));
        fails += !(Cost::infeasible() + a == Cost::infeasible());
        if (!a.is_infeasible()) fails += !(Cost::unknown() + a == Cost::unknown());
        const auto expect = test::oadd(test::oadd(test::OCost::of(a), test::OCost::of(b)), test::OCost::of(c));
        fails += !(test::OCost::of(a + b + c) == expect);
    }
    return {fails == 0, "1000 triples, " + std::to_string(fails) + " failures"};
}

Outcome subtree_oracle() {
    std::mt19937 rng(4242);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        auto t = test::random_tree(rng, 50);
        const auto env = t.builder.env();
        const int n = static_cast<int>(t.ids.size());
        std::vector<std::vector<int>> kids(n);
        for (int i = 1; i < n; ++i) kids[t.parent[i]].push_back(i);
        const int r = static_cast<int>(rng() % n);
        std::set<std::string> reach;
        std::deque<int> q{r};
        while (!q.empty()) {
            const int x = q.front();
            q.pop_front();
            reach.insert(t.ids[x]);
            for (int c : kids[x]) q.push_back(c);
        }
        const auto sub = dataflow::extract_subtree(t.ids[r], env);
        std::set<std::string> got;
        for (const auto& [id, rec] : sub.tree.nodes()) got.insert(id);
        std::map<ParamId, Parameter> params;
        for (const auto& [id, p] : env.data.parameters()) {
            if (reach.count(id.node)) params.emplace(id, p);
        }
        std::set<Wiring> wires;
        std::set<ParamId> pub;
        for (const auto& w : env.data.wirings()) {
            const bool s = reach.count(w.source.node) != 0;
            const bool d = reach.count(w.target.node) != 0;
            if (s && d) wires.insert(w);
            if (s && !d) pub.insert(w.source);
            if (d && !s) pub.insert(w.target);
        }
        mismatches += got != reach || sub.data.parameters() != params || sub.data.wirings() != wires ||
                      dataflow::public_io(sub, env.data) != pub;
    }
    return {mismatches == 0, "500 trees, " + std::to_string(mismatches) + " mismatches"};
}

Outcome ball_dataflow() {
    auto b = test::Builder()
                 .node("seq", "Sequence")
                 .node("sel", "Fallback", {}, "seq")
                 .node("red", "DetectBall", {{"color", Value("red")}}, "sel")
                 .node("green", "DetectBall", {{"color", Value("green")}}, "sel")
                 .node("pickup", "PickUpBall", {{"ticks", Value(5)}}, "seq")
                 .wire("red", "ballPos", "pickup", "ballPos")
                 .wire("green", "ballPos", "pickup", "ballPos");
    auto bt = b.tree();
    bt.set_external("ball.red", Value(Pose2d{1, 1}));
    bt.tick_cycle();
    const bool written = bt.value(ParamId{"red", ParamKind::output, "ballPos"}) == Value(Pose2d{1, 1});
    const bool consumed = bt.value(ParamId{"pickup", ParamKind::input, "ballPos"}) == Value(Pose2d{1, 1}) &&
                          bt.state("pickup") == S::running;
    const auto env = b.env();
    const auto pub = dataflow::public_io(dataflow::extract_subtree("sel", env), env.data);
    const bool boundary = pub == std::set<ParamId>{ParamId{"red", ParamKind::output, "ballPos"},
                                                   ParamId{"green", ParamKind::output, "ballPos"}};
    return {written && consumed && boundary, std::string("written ") + (written ? "yes" : "no") + ", consumed " +
                                                 (consumed ? "yes" : "no") + ", public IO " +
                                                 std::to_string(pub.size()) + " ports"};
}

struct CliRun {
    int code;
    std::vector<Line> log;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, parse_log(lines_of(out.str()))};
}

Outcome single_robot() {
    const auto r = cli({"run", (missions / "mission.bt").string(), "--scenario", (missions / "single.scn").string(),
                        "--until-result"});
    const long opened = find(r.log, "r1", "DOOR_OPENED", "d1");
    const long picked = find(r.log, "r1", "OBJECT_PICKED", "o1");
    const bool order = opened >= 0 && picked > opened;
    return {r.code == 0 && order, "exit " + std::to_string(r.code) + ", door opened at clock " +
                                      (opened >= 0 ? std::to_string(r.log[opened].clock) : "never") +
                                      ", object picked at clock " +
                                      (picked >= 0 ? std::to_string(r.log[picked].clock) : "never")};
}

Outcome heterogeneous_shove() {
    const auto r = cli({"team", (missions / "two_robot.scn").string()});
    const auto& log = r.log;
    const long util = find(log, "r1", "UTILITIES", "shove_door local=(x;x;x;x) r2=(");
    const bool finite_r2 = util >= 0 && log[util].detail.find("r2=(x") == std::string::npos &&
                           log[util].detail.find("r2=(?") == std::string::npos;
    const long shove = find(log, "r1", "SHOVE", "to=r2 ", util);
    std::string cid;
    if (shove >= 0) cid = log[shove].detail.substr(log[shove].detail.find("cid=") + 4);
    const long opened = find(log, "r2", "DOOR_OPENED", "d1", shove);
    const long result = find(log, "r2", "RESULT", "to=r1 cid=" + cid + " state=succeeded", opened);
    const long picked = find(log, "r1", "OBJECT_PICKED", "o1", result);
    const long done = find(log, "r1", "MISSION", "succeeded", picked);
    const bool ok = r.code == 0 && finite_r2 && shove >= 0 && opened >= 0 && result >= 0 && picked >= 0 && done >= 0 &&
                    count(log, "r1", "DOOR_OPENED") == 0;
    return {ok, "exit " + std::to_string(r.code) + ", local infeasible vs finite r2: " + (finite_r2 ? "yes" : "no") +
                    ", shoved " + (shove >= 0 ? "cid " + cid : "never") + ", RESULT succeeded " +
                    (result >= 0 ? "yes" : "no")};
}

Outcome reactivity() {
    sim::Simulation s(sim::load_scenario(missions / "reactivity.scn"), sim::mission_library());
    const auto final = s.run_until_result(200);
    const auto log = parse_log(s.log());
    const long first_open = find(log, "r2", "DOOR_OPENED", "d1");
    const long forced = find(log, "world", "DOOR_FORCED", "d1 closed", first_open);
    const long reshove = forced >= 0 ? find(log, "r1", "SHOVE", "to=r2 ", forced) : -1;
    const long reopen = reshove >= 0 ? find(log, "r2", "DOOR_OPENED", "d1", reshove) : -1;
    const long picked = find(log, "r1", "OBJECT_PICKED", "o1", reopen);
    const bool ok = final == S::succeeded && first_open >= 0 && forced >= 0 && reshove >= 0 && reopen >= 0 &&
                    picked >= 0;
    return {ok, "finished in " + std::to_string(s.steps()) + " cycles, forced closed at " +
                    (forced >= 0 ? std::to_string(log[forced].clock) : "never") + ", re-opened at " +
                    (reopen >= 0 ? std::to_string(log[reopen].clock) : "never")};
}

Outcome equivalence() {
    auto lib = test::dist_library();
    std::mt19937 rng(777);
    int diffs = 0, unshoved = 0;
    for (int i = 0; i < 20; ++i) {
        const auto c = test::equivalence_case(rng, lib);
        int shoves = 0;
        const auto local = test::run_equivalence(c, false);
        const auto remote = test::run_equivalence(c, true, &shoves);
        diffs += !(local == remote) || local.state == S::running;
        unshoved += shoves != 1;
    }
    return {diffs == 0 && unshoved == 0,
            "20 subtrees, " + std::to_string(diffs) + " differences, " + std::to_string(unshoved) + " not shoved"};
}

Outcome round_trip() {
    std::mt19937 rng(31337);
    int diffs = 0;
    for (int i = 0; i < 1000; ++i) {
        auto t = test::random_tree(rng, 30);
        const auto env = t.builder.env();
        const auto back = treefile::load_tree_text(treefile::save_tree(env), *t.builder.library());
        diffs += !treefile::structurally_equal(env, back);
    }
    return {diffs == 0, "1000 trees, " + std::to_string(diffs) + " diffs"};
}

} // namespace

int main() {
    criterion("state machine conformance", 1.0, state_machine);
    criterion("parallel utility table reproduction", 0, table_ii);
    criterion("cost algebra", 0, cost_algebra);
    criterion("subtree oracle equivalence", 0, subtree_oracle);
    criterion("ball dataflow and public IO", 0, ball_dataflow);
    criterion("single-robot mission", 5.0, single_robot);
    criterion("heterogeneous shove", 10.0, heterogeneous_shove);
    criterion("reactivity to a forced door", 0, reactivity);
    criterion("local/remote equivalence", 0, equivalence);
    criterion("save/load round trip", 0, round_trip);
    return failures == 0 ? 0 : 1;
}
