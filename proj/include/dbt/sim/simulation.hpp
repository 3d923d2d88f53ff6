#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/core/environment.hpp"
#include "dbt/core/node.hpp"
#include "dbt/distribution/executor.hpp"
#include "dbt/sim/mission_nodes.hpp"
#include "dbt/sim/scenario.hpp"
#include "dbt/sim/world.hpp"

namespace dbt::sim {

enum class TransportKind { in_process, tcp };

struct SimulationOptions {
    TransportKind transport = TransportKind::in_process;
    /// First TCP port; executors get consecutive ports. 0 picks free ports.
    std::uint16_t base_port = 0;
    /// Also log received messages and node state changes.
    bool trace = false;
    /// Overrides the scenario's rate.
    std::optional<double> hz;
    /// Robots that get an executor. Empty: every robot with a tree.
    std::vector<std::string> executors;
    /// Trees replacing the scenario's tree files, by robot.
    std::map<std::string, TreeEnvironment> trees;
};

inline constexpr std::uint64_t default_max_cycles = 10'000;

/// Team of executors over one SimWorld. A step: scripted events and one
/// world step, one cycle of every executor in id order, then message
/// delivery. With the in-process transport a scenario always produces the
/// same event log.
class Simulation {
public:
    using LineSink = std::function<void(const std::string&)>;

    /// Throws ScenarioError for robots without a tree, ParseError /
    /// ValidationError / IncludeCycle from tree files.
    Simulation(Scenario scenario, std::shared_ptr<const NodeLibrary> library, SimulationOptions options = {});
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;
    ~Simulation();

    void step();
    /// Steps until the mission root finished. Empty when max_cycles ran out.
    std::optional<NodeState> run_until_result(std::uint64_t max_cycles);

    /// The first robot of the scenario.
    const std::string& mission_robot() const noexcept { return mission_robot_; }
    NodeState mission_state() const;

    SimWorld& world() noexcept { return world_; }
    const SimWorld& world() const noexcept { return world_; }
    const Scenario& scenario() const noexcept { return scenario_; }
    /// Throws UnknownRobot.
    distribution::Executor& executor(std::string_view robot);
    const distribution::Executor& executor(std::string_view robot) const;
    std::vector<std::string> executor_ids() const;
    std::shared_ptr<const NodeLibrary> library() const noexcept { return library_; }

    std::uint64_t steps() const noexcept { return steps_; }
    double hz() const noexcept { return hz_; }
    std::uint64_t max_cycles() const noexcept { return scenario_.max_cycles.value_or(default_max_cycles); }

    /// Appends `tick,actor,event,detail`; commas and newlines in fields are replaced.
    void record(std::string_view actor, std::string_view event, std::string_view detail);
    const std::vector<std::string>& log() const noexcept { return log_; }
    void on_line(LineSink s) { sinks_.push_back(std::move(s)); }

private:
    struct Member {
        std::unique_ptr<RobotHandle> handle;
        std::shared_ptr<distribution::Transport> transport;
        std::unique_ptr<distribution::Executor> executor;
    };

    void apply(const ForceDoor& a);
    void deliver();

    Scenario scenario_;
    std::shared_ptr<const NodeLibrary> library_;
    SimulationOptions options_;
    SimWorld world_;
    double hz_;
    std::string mission_robot_;
    std::shared_ptr<distribution::InProcessNetwork> net_;
    std::map<std::string, Member, std::less<>> members_;
    std::vector<std::optional<std::uint64_t>> trigger_at_; ///< per triggered action, once armed
    std::vector<bool> trigger_done_;
    std::uint64_t steps_ = 0;
    std::vector<std::string> log_;
    std::vector<LineSink> sinks_;
};

} // namespace dbt::sim
