#ifndef FIXLAB_SOLVER_INDEPENDENT_HPP
#define FIXLAB_SOLVER_INDEPENDENT_HPP

#include <string>

#include "fixlab/solver.hpp"
#include "fixlab/verify.hpp"

namespace fixlab {

struct IndependentStats {
    std::uint64_t tasks_created = 0;
    std::uint64_t revivals = 0;
    std::uint64_t publishes = 0;
    std::uint64_t updates_delivered = 0;
    // locals iterated by more than one task / locals iterated at all
    double duplicate_work_ratio = 0.0;
    // labels of unknowns whose merged value is not a post-fixpoint
    std::vector<std::string> fixpoint_report;
};

/// One task's private view, retained when config.keep_task_solutions is set.
struct TaskSolution {
    std::string root_label;
    Solution values;
    std::vector<std::uint32_t> iterated_locals;
    std::vector<std::uint32_t> subscriptions;  // globals this task ever read
};

struct IndependentResult {
    Solution solution;  // merged: locals joined across tasks, globals from the broker
    SolveStats stats;
    IndependentStats independent;
    VerificationResult merged_verification;
    Solution broker_globals;
    std::vector<TaskSolution> task_solutions;
};

/// Parallel solver with per-task private state. Every top-level unknown (root
/// or demanded) becomes a task with its own record map; tasks exchange only
/// global-unknown values through a publish/subscribe broker with per-task
/// update queues, and terminated tasks are revived when a subscribed global
/// grows. The merged solution is always sound; the fixpoint report flags the
/// rare merged non-fixpoint instead of failing.
IndependentResult solve_independent(const EquationSystem& sys, std::span<const Unknown> roots,
                                    unsigned workers, const SolverConfig& config = {});

/// Re-evaluates one task's iterated locals against its private values, with
/// globals read from the broker's accumulated state.
VerificationResult verify_task_solution(const EquationSystem& sys, const TaskSolution& task,
                                        const Solution& broker_globals);

}  // namespace fixlab

#endif  // FIXLAB_SOLVER_INDEPENDENT_HPP
