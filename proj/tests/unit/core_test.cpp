#include <random>
#include <thread>

#include "builder.hpp"
#include "doctest.h"
#include "fig2.hpp"
#include "dbt/error.hpp"

using namespace dbt;
using dbt::test::Builder;
using dbt::test::script;
using S = NodeState;
using A = NodeAction;

TEST_CASE("transition table stays inside the diagram") {
    const auto edges = test::diagram_edges();
    for (S from : all_states) {
        if (from == S::error) {
            continue;
        }
        for (A a : all_actions) {
            auto allowed = allowed_transitions(from, a);
            bool diagram_has_edge = false;
            for (S to : all_states) {
                diagram_has_edge |= edges.count({from, a, to}) != 0;
            }
            CHECK_MESSAGE(allowed.empty() == !diagram_has_edge, to_string(from), " / ", to_string(a));
            for (S to : allowed) {
                CHECK(edges.count({from, a, to}) == 1);
            }
        }
    }
    CHECK(allowed_transitions(S::uninitialized, A::tick).empty());
    CHECK(is_legal_transition(S::error, A::reset, S::idle));
    CHECK(is_legal_transition(S::error, A::tick, S::error));
    CHECK_FALSE(is_legal_transition(S::error, A::tick, S::failed));
}

TEST_CASE("state and action names round-trip") {
    for (S s : all_states) {
        CHECK(parse_state(to_string(s)) == s);
    }
    for (A a : all_actions) {
        CHECK(parse_action(to_string(a)) == a);
    }
    CHECK_FALSE(parse_state("bogus"));
}

TEST_CASE("node classes follow max children") {
    CHECK(node_class(0) == NodeClass::leaf);
    CHECK(node_class(1) == NodeClass::decorator);
    CHECK(node_class(2) == NodeClass::flow_control);
    CHECK(node_class(unbounded_children) == NodeClass::flow_control);
}

TEST_CASE("update follows the diagram on single nodes") {
    auto bt = Builder().node("a", "Succeed").tree();
    CHECK(bt.state("a") == S::idle);
    CHECK(bt.update("a", A::tick) == S::succeeded);
    CHECK(bt.update("a", A::untick) == S::idle);
    CHECK(bt.update("a", A::shutdown) == S::shutdown);
    CHECK(bt.update("a", A::shutdown) == S::shutdown);
    CHECK(bt.update("a", A::setup) == S::idle);
    CHECK_THROWS_AS(bt.update("nope", A::tick), UnknownNode);

    BehaviorTree fresh(Builder().node("a", "Succeed").env(), standard_library());
    CHECK(fresh.update("a", A::shutdown) == S::shutdown);
}

TEST_CASE("illegal transition puts the node in error and the parent sees failed") {
    BehaviorTree bt(Builder().node("a", "Succeed").env(), standard_library());
    CHECK(bt.update("a", A::tick) == S::error);
    CHECK_FALSE(bt.diagnostics().empty());
    CHECK(bt.update("a", A::tick) == S::error);
    CHECK(bt.update("a", A::untick) == S::error);
    CHECK(bt.update("a", A::reset) == S::idle);

    auto seq = Builder().node("s", "Sequence").node("a", "Succeed", {}, "s").tree();
    seq.update("a", A::shutdown);
    seq.update("a", A::reset); // reset of shutdown is illegal
    CHECK(seq.state("a") == S::error);
    CHECK(seq.tick_cycle() == S::failed);
}

TEST_CASE("tick cycle requires an initialized root") {
    BehaviorTree bt(Builder().node("a", "Succeed").env(), standard_library());
    CHECK_THROWS_AS(bt.tick_cycle(), RootUninitialized);
    bt.setup();
    CHECK(bt.tick_cycle() == S::succeeded);
}

namespace {

struct RefResult {
    S state;
    std::vector<std::size_t> ticked;
};

RefResult reference(const std::string& kind, const std::vector<S>& r, std::size_t k) {
    RefResult out{S::succeeded, {}};
    if (kind == "Sequence" || kind == "Fallback") {
        const S stop_on_not = kind == "Sequence" ? S::succeeded : S::failed;
        for (std::size_t i = 0; i < r.size(); ++i) {
            out.ticked.push_back(i);
            if (r[i] != stop_on_not) {
                out.state = r[i];
                return out;
            }
        }
        out.state = stop_on_not;
        return out;
    }
    std::size_t s = 0;
    std::size_t f = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        out.ticked.push_back(i);
        s += r[i] == S::succeeded;
        f += r[i] == S::failed;
    }
    out.state = s >= k ? S::succeeded : (f > r.size() - k ? S::failed : S::running);
    return out;
}

const char* name_of(S s) {
    switch (s) {
    case S::succeeded: return "succeeded";
    case S::failed: return "failed";
    default: return "running";
    }
}

} // namespace

TEST_CASE("flow control matches the reference interpreter") {
    const S outcomes[] = {S::succeeded, S::failed, S::running};
    std::size_t checked = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<S> r(n);
        std::size_t combos = 1;
        for (std::size_t i = 0; i < n; ++i) combos *= 3;
        for (std::size_t c = 0; c < combos; ++c) {
            std::size_t x = c;
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = outcomes[x % 3];
                x /= 3;
            }
            for (const std::string kind : {"Sequence", "Fallback", "Parallel"}) {
                const std::size_t kmax = kind == "Parallel" ? n : 1;
                for (std::size_t k = 1; k <= kmax; ++k) {
                    Builder b;
                    OptionValues opts;
                    if (kind == "Parallel") opts["success_threshold"] = Value(static_cast<std::int64_t>(k));
                    b.node("root", kind, opts);
                    for (std::size_t i = 0; i < n; ++i) {
                        b.node("c" + std::to_string(i), "Scripted", {{"script", Value(List{Value(name_of(r[i]))})}},
                               "root");
                    }
                    auto bt = b.tree();
                    const auto expect = reference(kind, r, k);
                    CHECK(bt.tick_cycle() == expect.state);
                    std::set<std::string> expect_ticked{"root"};
                    for (auto i : expect.ticked) expect_ticked.insert("c" + std::to_string(i));
                    CHECK(bt.ticked_this_cycle() == expect_ticked);
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 300);
}

TEST_CASE("flow control without children goes to error") {
    auto bt = Builder().node("s", "Sequence").tree();
    CHECK(bt.tick_cycle() == S::error);
}

TEST_CASE("parallel threshold is validated at setup") {
    auto bt = Builder()
                  .node("p", "Parallel", {{"success_threshold", Value(3)}})
                  .node("a", "Succeed", {}, "p")
                  .node("b", "Succeed", {}, "p")
                  .tree();
    CHECK(bt.state("p") == S::error);
}

TEST_CASE("parallel does not re-tick resolved children within an activation") {
    auto bt = Builder()
                  .node("p", "Parallel", {{"success_threshold", Value(2)}})
                  .node("a", "Succeed", {}, "p")
                  .node("b", "Scripted", {{"script", script({"running", "running", "succeeded"})}}, "p")
                  .tree();
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.ticked_this_cycle().count("a") == 0);
    CHECK(bt.tick_cycle() == S::succeeded);
}

TEST_CASE("parallel unticks still-running children once resolved") {
    auto bt = Builder()
                  .node("p", "Parallel")
                  .node("a", "Succeed", {}, "p")
                  .node("w", "Wait", {{"duration_ms", Value(10000)}, {"pausable", Value(false)}}, "p")
                  .tree();
    CHECK(bt.tick_cycle() == S::succeeded);
    CHECK(bt.state("w") == S::idle);
    CHECK_FALSE(bt.holds_live_task("w"));
}

TEST_CASE("fallback unticks a previously running later child") {
    auto bt = Builder()
                  .node("f", "Fallback")
                  .node("flag", "CheckFlag", {{"key", Value("go")}}, "f")
                  .node("w", "Wait", {{"duration_ms", Value(10000)}}, "f")
                  .node("x", "Scripted", {{"script", script({"running"})}}, "f")
                  .tree();
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.state("w") == S::running);
    bt.set_external("go", Value(true));
    CHECK(bt.tick_cycle() == S::succeeded);
    CHECK(bt.state("w") == S::paused);
    REQUIRE(bt.task("w") != nullptr);
    CHECK(bt.task("w")->suspended());
}

TEST_CASE("reactive sequence aborts a running child when an earlier one fails") {
    auto bt = Builder()
                  .node("s", "Sequence")
                  .node("flag", "CheckFlag", {{"key", Value("ok")}}, "s")
                  .node("x", "Scripted", {{"script", script({"running"})}}, "s")
                  .tree();
    bt.set_external("ok", Value(true));
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.state("x") == S::running);
    bt.set_external("ok", Value(false));
    CHECK(bt.tick_cycle() == S::failed);
    CHECK(bt.state("x") == S::idle);
}

TEST_CASE("background tasks pause, resume and cancel") {
    auto bt = Builder()
                  .node("p", "Parallel", {{"success_threshold", Value(2)}})
                  .node("keep", "Wait", {{"duration_ms", Value(10000)}, {"pausable", Value(true)}}, "p")
                  .node("drop", "Wait", {{"duration_ms", Value(10000)}, {"pausable", Value(false)}}, "p")
                  .tree();
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.holds_live_task("keep"));
    CHECK(bt.update("p", A::untick) == S::idle);
    CHECK(bt.state("keep") == S::paused);
    CHECK(bt.task("keep")->suspended());
    CHECK(bt.state("drop") == S::idle);
    CHECK(bt.task("drop") == nullptr);

    CHECK(bt.update("keep", A::tick) == S::running);
    CHECK_FALSE(bt.task("keep")->suspended());
    CHECK(bt.update("keep", A::reset) == S::idle);
    CHECK(bt.task("keep") == nullptr);
}

TEST_CASE("background task result becomes the tick result") {
    auto bt = Builder().node("w", "Wait", {{"duration_ms", Value(5)}}).tree();
    CHECK(bt.tick_cycle() == S::running);
    S s = S::running;
    for (int i = 0; i < 200 && s == S::running; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        s = bt.tick_cycle();
    }
    CHECK(s == S::succeeded);
    CHECK(bt.task("w") == nullptr);
}

namespace {

class StartsInSetup : public Node {
public:
    void on_setup(NodeContext& ctx) override {
        ctx.start_task([](TaskControl&) { return true; }, false);
    }
    NodeState on_tick(NodeContext&) override { return NodeState::succeeded; }
};

class Slow : public Node {
public:
    NodeState on_tick(NodeContext&) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        return NodeState::succeeded;
    }
};

std::shared_ptr<NodeLibrary> with_extras() {
    auto lib = standard_library();
    lib->add<StartsInSetup>({"StartsInSetup", 0, {}, {}, {}, ""});
    lib->add<Slow>({"Slow", 0, {}, {}, {}, ""});
    return lib;
}

} // namespace

TEST_CASE("starting a task outside a tick is refused") {
    auto bt = Builder(with_extras()).node("a", "StartsInSetup").tree();
    CHECK(bt.state("a") == S::error);
    REQUIRE_FALSE(bt.diagnostics().empty());
    CHECK(bt.diagnostics().front().message.find("background task") != std::string::npos);
}

TEST_CASE("tick budget counts only the node's own time") {
    auto bt = Builder(with_extras()).node("s", "Sequence").node("slow", "Slow", {}, "s").tree();
    CHECK(bt.tick_cycle() == S::failed);
    CHECK(bt.state("slow") == S::error);
    CHECK(bt.state("s") == S::failed);

    EngineConfig relaxed;
    relaxed.tick_budget = std::chrono::milliseconds(500);
    auto ok = Builder(with_extras()).node("s", "Sequence").node("slow", "Slow", {}, "s").tree(relaxed);
    CHECK(ok.tick_cycle() == S::succeeded);
}

TEST_CASE("ball example: red detected, green unticked, pickup running") {
    auto bt = Builder()
                  .node("seq", "Sequence")
                  .node("sel", "Fallback", {}, "seq")
                  .node("red", "DetectBall", {{"color", Value("red")}}, "sel")
                  .node("green", "DetectBall", {{"color", Value("green")}}, "sel")
                  .node("pickup", "PickUpBall", {{"ticks", Value(5)}}, "seq")
                  .wire("red", "ballPos", "pickup", "ballPos")
                  .wire("green", "ballPos", "pickup", "ballPos")
                  .tree();
    bt.set_external("ball.green", Value("searching"));
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.state("green") == S::running);
    CHECK(bt.tick_cycle() == S::running);
    bt.set_external("ball.red", Value(Pose2d{1, 1}));
    CHECK(bt.tick_cycle() == S::running);
    CHECK(bt.state("red") == S::succeeded);
    CHECK(bt.state("green") == S::idle);
    CHECK(bt.state("pickup") == S::running);
    const ParamId pos{"pickup", ParamKind::input, "ballPos"};
    CHECK(bt.value(pos) == Value(Pose2d{1, 1}));
    CHECK(bt.value(ParamId{"green", ParamKind::output, "ballPos"}).is_none());
}

TEST_CASE("required None input fails the tick") {
    auto bt = Builder().node("add", "AddInt").tree();
    CHECK(bt.tick_cycle() == S::failed);
}

TEST_CASE("random actions stay on diagram edges and rest states hold no task") {
    const auto edges = test::diagram_edges();
    auto bt = Builder()
                  .node("root", "Parallel")
                  .node("s", "Scripted", {{"script", script({"running", "running", "failed", "succeeded"})}}, "root")
                  .node("wp", "Wait", {{"duration_ms", Value(100000)}, {"pausable", Value(true)}}, "root")
                  .node("wn", "Wait", {{"duration_ms", Value(100000)}, {"pausable", Value(false)}}, "root")
                  .tree();
    std::vector<std::string> ids{"root", "s", "wp", "wn"};
    std::mt19937 rng(7);
    std::size_t off_diagram = 0;
    std::size_t task_leaks = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto& id = ids[rng() % ids.size()];
        const A a = all_actions[rng() % all_actions.size()];
        const S from = bt.state(id);
        const S to = bt.update(id, a);
        if (from == S::error) {
            const bool ok = (a == A::reset && to == S::idle) || (a == A::shutdown && to == S::shutdown) ||
                            (a != A::reset && a != A::shutdown && to == S::error);
            off_diagram += !ok;
        } else if (to != S::error && edges.count({from, a, to}) == 0) {
            ++off_diagram;
        }
        for (const auto& n : ids) {
            if (is_rest_state(bt.state(n)) && bt.holds_live_task(n)) {
                ++task_leaks;
            }
        }
    }
    CHECK(off_diagram == 0);
    CHECK(task_leaks == 0);
}

TEST_CASE("unvisited nodes are stopped after every cycle") {
    std::mt19937 rng(11);
    const char* scripts[][3] = {{"running", "succeeded", "failed"},
                                {"failed", "running", "succeeded"},
                                {"succeeded", "failed", "running"},
                                {"running", "running", "running"}};
    for (int trial = 0; trial < 50; ++trial) {
        Builder b;
        std::vector<std::string> flows{"n0"};
        const char* kinds[] = {"Sequence", "Fallback", "Parallel"};
        b.node("n0", kinds[rng() % 3]);
        const int count = 3 + static_cast<int>(rng() % 12);
        std::vector<std::string> leaves;
        for (int i = 1; i < count; ++i) {
            const std::string id = "n" + std::to_string(i);
            const auto& parent = flows[rng() % flows.size()];
            if (rng() % 3 == 0) {
                b.node(id, kinds[rng() % 3], {}, parent);
                flows.push_back(id);
            } else {
                const auto* sc = scripts[rng() % 4];
                b.node(id, "Scripted", {{"script", Value(List{Value(sc[0]), Value(sc[1]), Value(sc[2])})}}, parent);
            }
        }
        // give childless flow nodes a leaf
        auto env = b.env();
        for (const auto& f : flows) {
            if (env.tree.children(f).empty()) {
                b.node(f + "_leaf", "Succeed", {}, f);
            }
        }
        auto bt = b.tree();
        for (int cycle = 0; cycle < 6; ++cycle) {
            bt.tick_cycle();
            const auto& visited = bt.ticked_this_cycle();
            CHECK(visited.count(bt.root()) == 1);
            for (const auto& id : visited) {
                if (id == bt.root()) continue;
                CHECK(visited.count(*bt.env().tree.parent(id)) == 1);
            }
            for (const auto& [id, st] : bt.env().world.node_states) {
                if (visited.count(id) == 0) {
                    CHECK(st != S::running);
                }
            }
        }
    }
}

TEST_CASE("identical environments evolve identically") {
    auto make = [] {
        return Builder()
            .node("s", "Sequence")
            .node("a", "Scripted", {{"script", script({"running", "succeeded"})}}, "s")
            .node("c", "ConstantValue", {{"type", Value("int")}, {"value", Value(4)}}, "s")
            .node("add", "AddInt", {}, "s")
            .wire("c", "value", "add", "a")
            .wire("c", "value", "add", "b")
            .tree();
    };
    auto x = make();
    auto y = make();
    for (int i = 0; i < 4; ++i) {
        x.tick_cycle();
        y.tick_cycle();
        CHECK(x.env() == y.env());
    }
    CHECK(x.value(ParamId{"add", ParamKind::output, "sum"}) == Value(8));
}

TEST_CASE("graft and prune keep the world consistent") {
    auto host = Builder().node("slot", "Inverter").tree();
    auto sub = Builder()
                   .node("s", "Sequence")
                   .node("c", "ConstantValue", {{"type", Value("int")}, {"value", Value(2)}}, "s")
                   .node("add", "AddInt", {}, "s")
                   .wire("c", "value", "add", "a")
                   .wire("c", "value", "add", "b")
                   .env();
    const auto root = host.graft("slot", sub, "slot/");
    CHECK(root == "slot/s");
    CHECK(host.state("slot/add") == S::uninitialized);
    host.update("slot/s", A::setup);
    CHECK(host.tick_cycle() == S::failed); // inverter of a success
    CHECK(host.value(ParamId{"slot/add", ParamKind::output, "sum"}) == Value(4));
    CHECK_THROWS_AS(host.graft("slot", sub, "other/"), TreeStructureError);

    host.prune(root);
    CHECK(host.env().tree.size() == 1);
    CHECK(host.env().data.parameters().empty());
    CHECK(host.env().world.param_values.empty());
    CHECK(host.env().world.node_states.size() == 1);
}

TEST_CASE("node library manifest narrowing") {
    auto lib = standard_library();
    auto narrow = lib->restricted_to({"Sequence", "Succeed"});
    CHECK(narrow.names() == std::vector<std::string>{"Sequence", "Succeed"});
    CHECK_THROWS_AS(lib->restricted_to({"NoSuchNode"}), UnknownNodeType);
    CHECK_THROWS_AS(narrow.info("Fallback"), UnknownNodeType);
}
