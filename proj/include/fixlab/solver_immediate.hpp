#ifndef FIXLAB_SOLVER_IMMEDIATE_HPP
#define FIXLAB_SOLVER_IMMEDIATE_HPP

#include "fixlab/solver.hpp"

namespace fixlab {

struct ImmediateStats {
    std::uint64_t cas_attempts = 0;
    std::uint64_t cas_retries = 0;
    std::uint64_t claims_skipped = 0;
    std::vector<std::uint64_t> per_worker_rhs;

    double retry_ratio() const {
        return cas_attempts == 0
                   ? 0.0
                   : static_cast<double>(cas_retries) / static_cast<double>(cas_attempts);
    }
};

struct ImmediateResult {
    Solution solution;
    SolveStats stats;
    ImmediateStats immediate;
};

/// Parallel solver over one shared record table. A fixed pool of workers
/// drains the top-level workset; per-unknown claims (CAS on the snapshot's
/// called flag) keep at most one worker iterating any unknown, and value
/// commits retry transactionally on contention. With a single worker the
/// result and evaluation count coincide with the sequential solver.
ImmediateResult solve_immediate(const EquationSystem& sys, std::span<const Unknown> roots,
                                unsigned workers, const SolverConfig& config = {});

}  // namespace fixlab

#endif  // FIXLAB_SOLVER_IMMEDIATE_HPP
