#include "dbt/core/background_task.hpp"

namespace dbt {

struct TaskControl::Shared {
    mutable std::mutex m;
    std::condition_variable cv;
    TaskStatus status = TaskStatus::running;
    bool paused = false;
    bool cancel = false;
};

bool TaskControl::cancel_requested() const {
    std::lock_guard lock(shared_->m);
    return shared_->cancel;
}

bool TaskControl::checkpoint() {
    std::unique_lock lock(shared_->m);
    shared_->cv.wait(lock, [&] { return !shared_->paused || shared_->cancel; });
    return !shared_->cancel;
}

TaskHandle::TaskHandle(TaskWork work, bool pausable)
    : shared_(std::make_shared<TaskControl::Shared>()), pausable_(pausable) {
    worker_ = std::thread([shared = shared_, work = std::move(work)] {
        TaskControl control(shared);
        bool ok = false;
        try {
            ok = work(control);
        } catch (...) {
            ok = false;
        }
        std::lock_guard lock(shared->m);
        if (shared->cancel) {
            shared->status = TaskStatus::cancelled;
        } else {
            shared->status = ok ? TaskStatus::done_success : TaskStatus::done_failure;
        }
    });
}

TaskHandle::~TaskHandle() { cancel(); }

TaskStatus TaskHandle::status() const {
    std::lock_guard lock(shared_->m);
    return shared_->status;
}

bool TaskHandle::suspended() const {
    std::lock_guard lock(shared_->m);
    return shared_->paused && shared_->status == TaskStatus::running;
}

void TaskHandle::pause() {
    std::lock_guard lock(shared_->m);
    shared_->paused = true;
}

void TaskHandle::resume() {
    {
        std::lock_guard lock(shared_->m);
        shared_->paused = false;
    }
    shared_->cv.notify_all();
}

void TaskHandle::cancel() {
    {
        std::lock_guard lock(shared_->m);
        shared_->cancel = true;
        if (shared_->status == TaskStatus::running) {
            shared_->status = TaskStatus::cancelled;
        }
    }
    shared_->cv.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
}

} // namespace dbt
