#include <algorithm>
#include <chrono>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "fixlab/solver.hpp"

namespace fixlab {

const char* demand_strategy_name(DemandStrategy s) {
    switch (s) {
        case DemandStrategy::ThreadsOnly: return "threads";
        case DemandStrategy::ThreadsAndFunctions: return "functions";
        case DemandStrategy::None: return "none";
    }
    return "?";
}

namespace {

// FIFO set: adding a present element is a no-op, re-insertion after removal
// lands at the back. Removal is lazy; stamps identify the live queue entry.
class FifoWorkSet {
public:
    void add(Unknown u) {
        if (in_.emplace(u.id, ++stamp_).second) queue_.push_back({u.id, stamp_});
    }
    void remove(Unknown u) { in_.erase(u.id); }
    bool empty() {
        scrub();
        return queue_.empty();
    }
    Unknown pop_front() {
        scrub();
        Unknown u{queue_.front().id};
        queue_.pop_front();
        in_.erase(u.id);
        return u;
    }

private:
    struct Entry {
        std::uint32_t id;
        std::uint64_t stamp;
    };
    void scrub() {
        while (!queue_.empty()) {
            auto it = in_.find(queue_.front().id);
            if (it != in_.end() && it->second == queue_.front().stamp) break;
            queue_.pop_front();
        }
    }
    std::deque<Entry> queue_;
    std::unordered_map<std::uint32_t, std::uint64_t> in_;
    std::uint64_t stamp_ = 0;
};

struct Record {
    LatticeValue value;
    bool stable = false;
    bool called = false;
    bool toplevel = false;
    bool widen_point = false;
    std::uint32_t growth_count = 0;  // strictly growing side contributions
    std::unordered_set<std::uint32_t> influences;
};

class SeqSolver {
public:
    SeqSolver(const EquationSystem& sys, const SolverConfig& cfg) : sys_(sys), cfg_(cfg) {}

    SeqResult run(std::span<const Unknown> roots) {
        if (roots.empty()) throw AnalysisError("solve requires at least one root");
        auto start = std::chrono::steady_clock::now();
        for (Unknown r : roots) {
            if (sys_.is_global(r))
                throw AnalysisError("root '" + sys_.label(r) + "' must be a local unknown");
            find(r).toplevel = true;
            work_.add(r);
        }
        while (!work_.empty()) iterate(work_.pop_front());

        SeqResult result;
        result.stats = stats_;
        result.stats.unknowns_reached = data_.size();
        result.stats.termination_clean = work_.empty();
        for (auto& [id, rec] : data_) {
            if (rec.called || !rec.stable) result.stats.termination_clean = false;
            result.solution.insert(Unknown{id}, rec.value);
        }
        result.stats.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        return result;
    }

private:
    Record& find(Unknown u) {
        auto [it, fresh] = data_.try_emplace(u.id);
        if (fresh) {
            it->second.value = sys_.bottom_of(u);
            // Globals have no rhs to iterate; they are vacuously stable and
            // side() keeps them that way.
            if (sys_.is_global(u)) it->second.stable = true;
        }
        return it->second;
    }

    struct IterCtx final : RhsContext {
        SeqSolver& s;
        Unknown x;
        IterCtx(SeqSolver& solver, Unknown current) : s(solver), x(current) {}
        LatticeValue get(Unknown y) override { return s.query(x, y); }
        void set(Unknown g, const LatticeValue& v) override { s.side(g, v); }
        void demand(Unknown y) override { s.promote(y); }
    };

    void iterate(Unknown x) {
        Record& dx = find(x);
        dx.called = true;
        while (!dx.stable) {
            dx.stable = true;
            const RhsExpr* e = sys_.rhs(x);
            if (!e)
                throw AnalysisError("reached local '" + sys_.label(x) +
                                    "' has no right-hand side");
            if (++stats_.rhs_evaluations > cfg_.eval_budget)
                throw BudgetError("evaluation budget exceeded while iterating '" +
                                  sys_.label(x) + "'");
            IterCtx ctx(*this, x);
            LatticeValue new_value = eval_rhs(*e, ctx);
            if (!leq(new_value, dx.value)) {
                LatticeValue next = join(dx.value, new_value);
                if (dx.widen_point) {
                    next = widen(dx.value, next);
                    stats_.widenings++;
                }
                dx.value = std::move(next);
                if (cfg_.on_store) cfg_.on_store(x, dx.value);
                destabilize(x);
            }
        }
        if (dx.toplevel) work_.remove(x);
        dx.called = false;
    }

    LatticeValue query(Unknown x, Unknown y) {
        Record& dy = find(y);
        if (!sys_.is_global(y)) {
            if (!dy.called)
                iterate(y);
            else
                dy.widen_point = true;  // cycle: y is on the activation path
        }
        dy.influences.insert(x.id);
        return dy.value;
    }

    void side(Unknown g, const LatticeValue& contribution) {
        Record& dg = find(g);
        dg.stable = true;
        if (cfg_.on_contribution) cfg_.on_contribution(g, contribution);
        LatticeValue next = join(dg.value, contribution);
        if (leq(next, dg.value)) return;
        if (dg.growth_count >= cfg_.widen_delay) {
            next = widen(dg.value, next);
            stats_.widenings++;
        }
        dg.growth_count++;
        dg.value = std::move(next);
        if (cfg_.on_store) cfg_.on_store(g, dg.value);
        destabilize(g);
    }

    void promote(Unknown y) {
        if (sys_.is_global(y))
            throw AnalysisError("demand target '" + sys_.label(y) + "' must be a local unknown");
        Record& dy = find(y);
        dy.toplevel = true;
        work_.add(y);
    }

    void destabilize(Unknown x) {
        Record& dx = find(x);
        if (dx.influences.empty()) return;
        std::vector<std::uint32_t> taken(dx.influences.begin(), dx.influences.end());
        dx.influences.clear();
        std::sort(taken.begin(), taken.end());
        for (std::uint32_t yid : taken) {
            Unknown y{yid};
            Record& dy = find(y);
            dy.stable = false;
            stats_.destabilizations++;
            if (dy.toplevel) work_.add(y);
            destabilize(y);
        }
    }

    const EquationSystem& sys_;
    const SolverConfig& cfg_;
    std::unordered_map<std::uint32_t, Record> data_;
    FifoWorkSet work_;
    SolveStats stats_;
};

}  // namespace

SeqResult solve(const EquationSystem& sys, std::span<const Unknown> roots,
                const SolverConfig& config) {
    SeqSolver solver(sys, config);
    return solver.run(roots);
}

}  // namespace fixlab
