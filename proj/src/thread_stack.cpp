#include <stdexcept>
#include <system_error>

#include "fixlab/thread_stack.hpp"

namespace fixlab {

struct StackThread::Body {
    std::function<void()> fn;
    std::exception_ptr error;
};

namespace {

void* trampoline(void* arg) {
    auto* body = static_cast<StackThread::Body*>(arg);
    try {
        body->fn();
    } catch (...) {
        body->error = std::current_exception();
    }
    return nullptr;
}

}  // namespace

StackThread::StackThread() = default;

void StackThread::start(std::function<void()> fn, std::size_t stack_bytes) {
    if (running_) throw std::logic_error("StackThread already started");
    body_ = std::make_unique<Body>();
    body_->fn = std::move(fn);

    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstacksize(&attr, stack_bytes);
    int rc = pthread_create(&handle_, &attr, &trampoline, body_.get());
    pthread_attr_destroy(&attr);
    if (rc != 0) throw std::system_error(rc, std::generic_category(), "pthread_create");
    running_ = true;
}

void StackThread::join() {
    if (!running_) return;
    pthread_join(handle_, nullptr);
    running_ = false;
    if (body_ && body_->error) {
        std::exception_ptr e = body_->error;
        body_->error = nullptr;
        std::rethrow_exception(e);
    }
}

StackThread::~StackThread() {
    if (running_) pthread_join(handle_, nullptr);
}

void run_with_stack(std::function<void()> fn, std::size_t stack_bytes) {
    StackThread t;
    t.start(std::move(fn), stack_bytes);
    t.join();
}

}  // namespace fixlab
