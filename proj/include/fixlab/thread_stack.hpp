#ifndef FIXLAB_THREAD_STACK_HPP
#define FIXLAB_THREAD_STACK_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <memory>

#include <pthread.h>

namespace fixlab {

inline constexpr std::size_t kWorkerStackBytes = 64u << 20;

/// Thread with an explicit stack size. The demand-driven solvers recurse
/// one activation frame per dependency-chain edge, so deep systems need more
/// than the default thread stack.
class StackThread {
public:
    StackThread();
    StackThread(const StackThread&) = delete;
    StackThread& operator=(const StackThread&) = delete;
    ~StackThread();

    void start(std::function<void()> fn, std::size_t stack_bytes = kWorkerStackBytes);

    /// Joins and rethrows anything the thread body threw.
    void join();

    struct Body;

private:
    pthread_t handle_{};
    bool running_ = false;
    std::unique_ptr<Body> body_;
};

/// Run fn to completion on a dedicated large-stack thread.
void run_with_stack(std::function<void()> fn, std::size_t stack_bytes = kWorkerStackBytes);

}  // namespace fixlab

#endif  // FIXLAB_THREAD_STACK_HPP
