#ifndef FIXLAB_SOLVER_HPP
#define FIXLAB_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "fixlab/eqsys.hpp"

namespace fixlab {

/// How the frontend places demand: at thread spawns only, additionally at
/// every call edge, or never.
enum class DemandStrategy { ThreadsOnly, ThreadsAndFunctions, None };

const char* demand_strategy_name(DemandStrategy s);

struct SolverConfig {
    // Number of strictly growing side-effect contributions a global absorbs
    // by join before further growth is widened.
    std::uint32_t widen_delay = 3;

    // Hard cap on right-hand-side evaluations; exceeded -> BudgetError.
    std::uint64_t eval_budget = 10'000'000;

    // Passed through to the frontend when solving analysis systems.
    DemandStrategy demand = DemandStrategy::ThreadsOnly;

    // Scheduler perturbation for the parallel solvers (0 = no jitter).
    std::uint64_t seed = 0;

    // Bucket count of the immediate solver's record table (power of two).
    std::uint32_t table_buckets = 1u << 16;

    // Gates per-worker breakdowns in the parallel solvers' statistics;
    // the scalar counters are cheap and always collected.
    bool collect_stats = true;

    // Retain per-task solutions in the independent solver's result.
    bool keep_task_solutions = false;

    // Debug hooks; invoked under no locks, must be thread-safe for the
    // parallel solvers. on_store fires after a record's value is updated,
    // on_contribution for every side-effect contribution.
    std::function<void(Unknown, const LatticeValue&)> on_store;
    std::function<void(Unknown, const LatticeValue&)> on_contribution;
};

/// Finalized map from reached unknowns to values.
class Solution {
public:
    void insert(Unknown u, LatticeValue v) { values_.insert_or_assign(u.id, std::move(v)); }

    const LatticeValue* find(Unknown u) const {
        auto it = values_.find(u.id);
        return it == values_.end() ? nullptr : &it->second;
    }

    LatticeValue value_or(Unknown u, const LatticeValue& fallback) const {
        const LatticeValue* v = find(u);
        return v ? *v : fallback;
    }

    bool contains(Unknown u) const { return values_.count(u.id) != 0; }
    std::size_t size() const { return values_.size(); }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    bool operator==(const Solution& other) const { return values_ == other.values_; }

private:
    std::unordered_map<std::uint32_t, LatticeValue> values_;
};

struct SolveStats {
    std::uint64_t rhs_evaluations = 0;
    std::uint64_t destabilizations = 0;
    std::uint64_t widenings = 0;
    std::uint64_t unknowns_reached = 0;
    double wall_time_ms = 0.0;
    // Post-run audit: workset drained, every record stable and not called.
    bool termination_clean = false;
};

struct SeqResult {
    Solution solution;
    SolveStats stats;
};

/// The sequential solver: demand-driven recursive iteration with a top-level
/// workset, side-effects to globals, destabilization, and dynamic
/// widening-point detection. Deterministic for a fixed system and roots.
SeqResult solve(const EquationSystem& sys, std::span<const Unknown> roots,
                const SolverConfig& config = {});

}  // namespace fixlab

#endif  // FIXLAB_SOLVER_HPP
