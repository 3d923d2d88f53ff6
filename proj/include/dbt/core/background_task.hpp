#pragma once

#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

namespace dbt {

enum class TaskStatus { running, done_success, done_failure, cancelled };

/// Handed to the work function; the only channel between a task and its node.
class TaskControl {
public:
    bool cancel_requested() const;
    /// Blocks while the task is paused. Returns false once cancelled.
    bool checkpoint();

private:
    friend class TaskHandle;
    struct Shared;
    explicit TaskControl(std::shared_ptr<Shared> s) : shared_(std::move(s)) {}
    std::shared_ptr<Shared> shared_;
};

/// Work returns true on success, false on failure. Exceptions count as failure.
using TaskWork = std::function<bool(TaskControl&)>;

/// Long-running work started by a node during its tick. The node reads the
/// status on later ticks; untick pauses (if pausable) or cancels it.
class TaskHandle {
public:
    TaskHandle(TaskWork work, bool pausable);
    TaskHandle(const TaskHandle&) = delete;
    TaskHandle& operator=(const TaskHandle&) = delete;
    ~TaskHandle();

    TaskStatus status() const;
    bool pausable() const noexcept { return pausable_; }
    bool suspended() const;
    /// Running, possibly suspended.
    bool live() const { return status() == TaskStatus::running; }

    void pause();
    void resume();
    /// Requests cancellation and joins the worker.
    void cancel();

private:
    std::shared_ptr<TaskControl::Shared> shared_;
    bool pausable_;
    std::thread worker_;
};

} // namespace dbt
