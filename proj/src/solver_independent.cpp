#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_set>

#include "fixlab/ms_queue.hpp"
#include "fixlab/solver_independent.hpp"
#include "fixlab/thread_stack.hpp"
#include "fixlab/work_pool.hpp"

namespace fixlab {

namespace {

using TaskId = std::uint32_t;

struct GlobalUpdate {
    std::uint32_t gid = 0;
    LatticeValue value;
};

struct PrivateRecord {
    LatticeValue value;
    bool stable = false;
    bool called = false;
    bool toplevel = false;
    bool widen_point = false;
    std::unordered_set<std::uint32_t> influences;
};

// Stamped FIFO set, same discipline as the sequential workset.
class PrivateWorkSet {
public:
    void add(std::uint32_t id) {
        if (in_.emplace(id, ++stamp_).second) queue_.push_back({id, stamp_});
    }
    void remove(std::uint32_t id) { in_.erase(id); }
    bool empty() {
        scrub();
        return queue_.empty();
    }
    std::uint32_t pop_front() {
        scrub();
        std::uint32_t id = queue_.front().id;
        queue_.pop_front();
        in_.erase(id);
        return id;
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

enum class TaskStatus { Scheduled, Running, Terminated, Revived };

struct Task {
    TaskId id = 0;
    Unknown root;
    bool started = false;

    // status_m linearizes inbox emptiness against publishes, which is what
    // makes termination detection and revival watertight.
    std::mutex status_m;
    TaskStatus status = TaskStatus::Scheduled;
    MsQueue<GlobalUpdate> inbox;

    std::unordered_map<std::uint32_t, PrivateRecord> data;
    PrivateWorkSet work;
    std::unordered_set<std::uint32_t> subscriptions;
    std::unordered_set<std::uint32_t> iterated_locals;
    std::uint64_t rhs_evals = 0;
    std::uint64_t destabilizations = 0;
    std::uint64_t widenings = 0;
};

class IndependentSolver;

// Per-global broker entry. The entry mutex linearizes subscribe against
// publish, so a subscriber observes either the pre-publish accumulated value
// or the queued update, never neither.
struct BrokerEntry {
    std::mutex m;
    LatticeValue accumulated;
    std::uint32_t growth_count = 0;
    std::vector<TaskId> subscribers;
};

class IndependentSolver {
public:
    IndependentSolver(const EquationSystem& sys, const SolverConfig& cfg, unsigned workers)
        : sys_(sys), cfg_(cfg), workers_(workers) {
        entries_.resize(sys.size());
        for (std::uint32_t i = 0; i < sys.size(); i++) {
            Unknown u{i};
            if (sys.is_global(u)) {
                entries_[i] = std::make_unique<BrokerEntry>();
                entries_[i]->accumulated = sys.bottom_of(u);
            }
        }
    }

    IndependentResult run(std::span<const Unknown> roots) {
        if (workers_ < 1) throw AnalysisError("solve_independent requires at least one worker");
        if (roots.empty()) throw AnalysisError("solve requires at least one root");
        auto start = std::chrono::steady_clock::now();

        for (Unknown r : roots) {
            if (sys_.is_global(r))
                throw AnalysisError("root '" + sys_.label(r) + "' must be a local unknown");
            ensure_task(r);
        }

        busy_.store(static_cast<int>(workers_));
        std::vector<StackThread> threads(workers_);
        for (unsigned i = 0; i < workers_; i++) {
            threads[i].start([this, i] { worker_main(static_cast<int>(i)); });
        }
        for (auto& t : threads) t.join();
        if (first_error_) std::rethrow_exception(first_error_);

        return assemble(start);
    }

private:
    Task& task(TaskId id) { return *tasks_[id]; }

    TaskId ensure_task(Unknown root) {
        std::lock_guard<std::mutex> lock(reg_m_);
        auto it = task_by_root_.find(root.id);
        if (it != task_by_root_.end()) return it->second;
        TaskId id = static_cast<TaskId>(tasks_.size());
        auto t = std::make_unique<Task>();
        t->id = id;
        t->root = root;
        tasks_.push_back(std::move(t));
        task_by_root_.emplace(root.id, id);
        tasks_created_.fetch_add(1, std::memory_order_relaxed);
        pool_.add(id);
        return id;
    }

    // ---- broker ----

    BrokerEntry& entry(Unknown g) {
        if (!entries_[g.id]) throw AnalysisError("'" + sys_.label(g) + "' is not a global");
        return *entries_[g.id];
    }

    LatticeValue subscribe(Task& t, Unknown g) {
        BrokerEntry& e = entry(g);
        std::lock_guard<std::mutex> lock(e.m);
        if (std::find(e.subscribers.begin(), e.subscribers.end(), t.id) == e.subscribers.end())
            e.subscribers.push_back(t.id);
        return e.accumulated;
    }

    // Join-or-widen the contribution into the accumulated value; on strict
    // growth deliver the new accumulated value to every subscriber (the
    // publisher included) and revive terminated ones. Returns the accumulated
    // value so the publisher can refresh its private copy immediately.
    LatticeValue publish(Task& t, Unknown g, const LatticeValue& contribution) {
        publishes_.fetch_add(1, std::memory_order_relaxed);
        if (cfg_.on_contribution) cfg_.on_contribution(g, contribution);
        BrokerEntry& e = entry(g);
        std::lock_guard<std::mutex> lock(e.m);
        LatticeValue next = join(e.accumulated, contribution);
        if (leq(next, e.accumulated)) return e.accumulated;
        if (e.growth_count >= cfg_.widen_delay) {
            next = widen(e.accumulated, next);
            t.widenings++;
        }
        e.growth_count++;
        e.accumulated = std::move(next);
        if (cfg_.on_store) cfg_.on_store(g, e.accumulated);
        for (TaskId sub : e.subscribers) deliver(sub, g, e.accumulated);
        return e.accumulated;
    }

    void deliver(TaskId to, Unknown g, const LatticeValue& accumulated) {
        Task& t = task(to);
        std::lock_guard<std::mutex> lock(t.status_m);
        t.inbox.enqueue(GlobalUpdate{g.id, accumulated});
        updates_delivered_.fetch_add(1, std::memory_order_relaxed);
        if (t.status == TaskStatus::Terminated) {
            // Revival is coalesced: only the Terminated->Revived transition
            // schedules; further updates land in the inbox of the already
            // scheduled task.
            t.status = TaskStatus::Revived;
            pool_.add(to);
            revivals_.fetch_add(1, std::memory_order_relaxed);
        }
    }

    // ---- per-task private solving ----

    PrivateRecord& find(Task& t, Unknown u) {
        auto [it, fresh] = t.data.try_emplace(u.id);
        if (fresh) {
            it->second.value = sys_.bottom_of(u);
            if (sys_.is_global(u)) it->second.stable = true;
        }
        return it->second;
    }

    struct IterCtx final : RhsContext {
        IndependentSolver& s;
        Task& t;
        Unknown x;
        IterCtx(IndependentSolver& solver, Task& tsk, Unknown current)
            : s(solver), t(tsk), x(current) {}
        LatticeValue get(Unknown y) override { return s.query(t, x, y); }
        void set(Unknown g, const LatticeValue& v) override { s.side(t, g, v); }
        void demand(Unknown y) override { s.promote(t, y); }
    };

    void iterate(Task& t, Unknown x) {
        PrivateRecord& dx = find(t, x);
        t.iterated_locals.insert(x.id);
        dx.called = true;
        while (!dx.stable) {
            dx.stable = true;
            const RhsExpr* e = sys_.rhs(x);
            if (!e)
                throw AnalysisError("reached local '" + sys_.label(x) +
                                    "' has no right-hand side");
            if (evals_.fetch_add(1, std::memory_order_acq_rel) + 1 > cfg_.eval_budget)
                throw BudgetError("evaluation budget exceeded while iterating '" + sys_.label(x) +
                                  "'");
            t.rhs_evals++;
            IterCtx ctx(*this, t, x);
            LatticeValue new_value = eval_rhs(*e, ctx);
            drain_inbox(t);  // consume updates after every rhs evaluation
            if (!leq(new_value, dx.value)) {
                LatticeValue next = join(dx.value, new_value);
                if (dx.widen_point) {
                    next = widen(dx.value, next);
                    t.widenings++;
                }
                dx.value = std::move(next);
                destabilize(t, x);
            }
        }
        if (dx.toplevel) t.work.remove(x.id);
        dx.called = false;
    }

    LatticeValue query(Task& t, Unknown x, Unknown y) {
        if (sys_.is_global(y)) {
            PrivateRecord& dy = find(t, y);
            if (t.subscriptions.insert(y.id).second) {
                // First read: register with the broker and start from its
                // accumulated value.
                LatticeValue acc = subscribe(t, y);
                LatticeValue next = join(dy.value, acc);
                if (!leq(next, dy.value)) dy.value = std::move(next);
            }
            dy.influences.insert(x.id);
            return dy.value;
        }
        PrivateRecord& dy = find(t, y);
        if (!dy.called)
            iterate(t, y);
        else
            dy.widen_point = true;
        dy.influences.insert(x.id);
        return dy.value;
    }

    void side(Task& t, Unknown g, const LatticeValue& contribution) {
        if (!sys_.is_global(g))
            throw AnalysisError("side-effect target '" + sys_.label(g) + "' must be a global");
        LatticeValue acc = publish(t, g, contribution);
        PrivateRecord& dg = find(t, g);
        dg.stable = true;
        LatticeValue next = join(dg.value, acc);
        if (!leq(next, dg.value)) {
            dg.value = std::move(next);
            destabilize(t, g);
        }
    }

    void promote(Task& t, Unknown y) {
        (void)t;
        if (sys_.is_global(y))
            throw AnalysisError("demand target '" + sys_.label(y) + "' must be a local unknown");
        // Demanded unknowns become tasks of their own rather than private
        // top-level entries; roots define the task granularity.
        ensure_task(y);
    }

    void destabilize(Task& t, Unknown x) {
        PrivateRecord& dx = find(t, x);
        if (dx.influences.empty()) return;
        std::vector<std::uint32_t> taken(dx.influences.begin(), dx.influences.end());
        dx.influences.clear();
        std::sort(taken.begin(), taken.end());
        for (std::uint32_t yid : taken) {
            Unknown y{yid};
            PrivateRecord& dy = find(t, y);
            dy.stable = false;
            t.destabilizations++;
            if (dy.toplevel) t.work.add(yid);
            destabilize(t, y);
        }
    }

    void drain_inbox(Task& t) {
        while (auto upd = t.inbox.try_dequeue()) {
            PrivateRecord& dg = find(t, Unknown{upd->gid});
            LatticeValue next = join(dg.value, upd->value);
            if (leq(next, dg.value)) continue;  // stale update
            dg.value = std::move(next);
            destabilize(t, Unknown{upd->gid});
        }
    }

    void run_task(Task& t) {
        {
            std::lock_guard<std::mutex> lock(t.status_m);
            t.status = TaskStatus::Running;
        }
        if (!t.started) {
            t.started = true;
            find(t, t.root).toplevel = true;
            t.work.add(t.root.id);
        }
        drain_inbox(t);
        for (;;) {
            while (!t.work.empty()) {
                if (stop_.load(std::memory_order_acquire)) return;
                iterate(t, Unknown{t.work.pop_front()});
            }
            drain_inbox(t);
            if (!t.work.empty()) continue;
            std::lock_guard<std::mutex> lock(t.status_m);
            if (t.inbox.empty()) {
                t.status = TaskStatus::Terminated;
                return;
            }
        }
    }

    void worker_main(int index) {
        std::mt19937_64 rng(cfg_.seed * 0x9e3779b97f4a7c15ull + static_cast<unsigned>(index));
        bool jitter = cfg_.seed != 0;
        if (jitter)
            std::this_thread::sleep_for(std::chrono::microseconds(rng() % (50 * (index + 1) + 1)));
        for (;;) {
            if (stop_.load(std::memory_order_acquire)) return;
            if (auto id = pool_.try_pop()) {
                if (jitter && (rng() & 7u) == 0)
                    std::this_thread::sleep_for(std::chrono::microseconds(rng() % 40));
                try {
                    run_task(task(*id));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_m_);
                    if (!first_error_) first_error_ = std::current_exception();
                    stop_.store(true, std::memory_order_release);
                }
                continue;
            }
            busy_.fetch_sub(1, std::memory_order_acq_rel);
            for (;;) {
                if (stop_.load(std::memory_order_acquire)) return;
                if (!pool_.empty()) {
                    busy_.fetch_add(1, std::memory_order_acq_rel);
                    break;
                }
                if (busy_.load(std::memory_order_acquire) == 0) return;
                std::this_thread::yield();
            }
        }
    }

    IndependentResult assemble(std::chrono::steady_clock::time_point start) {
        IndependentResult result;
        result.stats.termination_clean = pool_.empty();

        std::unordered_map<std::uint32_t, int> iterated_by;
        for (const auto& tp : tasks_) {
            Task& t = *tp;
            if (t.status != TaskStatus::Terminated || !t.inbox.empty() || !t.work.empty())
                result.stats.termination_clean = false;
            result.stats.rhs_evaluations += t.rhs_evals;
            result.stats.destabilizations += t.destabilizations;
            result.stats.widenings += t.widenings;
            for (const auto& [id, rec] : t.data) {
                if (rec.called || !rec.stable) result.stats.termination_clean = false;
                Unknown u{id};
                if (sys_.is_global(u)) continue;  // globals come from the broker
                const LatticeValue* prev = result.solution.find(u);
                result.solution.insert(u, prev ? join(*prev, rec.value) : rec.value);
            }
            for (std::uint32_t id : t.iterated_locals) iterated_by[id]++;
            if (cfg_.keep_task_solutions) {
                TaskSolution ts;
                ts.root_label = sys_.label(t.root);
                for (const auto& [id, rec] : t.data) ts.values.insert(Unknown{id}, rec.value);
                ts.iterated_locals.assign(t.iterated_locals.begin(), t.iterated_locals.end());
                std::sort(ts.iterated_locals.begin(), ts.iterated_locals.end());
                ts.subscriptions.assign(t.subscriptions.begin(), t.subscriptions.end());
                std::sort(ts.subscriptions.begin(), ts.subscriptions.end());
                result.task_solutions.push_back(std::move(ts));
            }
        }

        for (std::uint32_t i = 0; i < sys_.size(); i++) {
            if (!entries_[i]) continue;
            BrokerEntry& e = *entries_[i];
            bool touched = e.growth_count > 0 || !e.subscribers.empty();
            for (const auto& tp : tasks_)
                touched = touched || tp->data.count(i) != 0;
            if (touched) {
                result.solution.insert(Unknown{i}, e.accumulated);
                result.broker_globals.insert(Unknown{i}, e.accumulated);
            }
        }

        std::uint64_t dup = 0;
        for (const auto& [id, n] : iterated_by)
            if (n > 1) dup++;
        result.independent.duplicate_work_ratio =
            iterated_by.empty() ? 0.0
                                : static_cast<double>(dup) / static_cast<double>(iterated_by.size());
        result.independent.tasks_created = tasks_created_.load();
        result.independent.revivals = revivals_.load();
        result.independent.publishes = publishes_.load();
        result.independent.updates_delivered = updates_delivered_.load();
        result.stats.unknowns_reached = result.solution.size();

        result.merged_verification = verify_solution(sys_, result.solution);
        for (const Violation& v : result.merged_verification.violations)
            result.independent.fixpoint_report.push_back(sys_.label(v.unknown));

        result.stats.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        return result;
    }

    const EquationSystem& sys_;
    const SolverConfig& cfg_;
    unsigned workers_;

    std::vector<std::unique_ptr<BrokerEntry>> entries_;

    std::mutex reg_m_;
    std::vector<std::unique_ptr<Task>> tasks_;
    std::unordered_map<std::uint32_t, TaskId> task_by_root_;

    WorkPool pool_;
    std::atomic<int> busy_{0};
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> evals_{0};
    std::atomic<std::uint64_t> tasks_created_{0};
    std::atomic<std::uint64_t> revivals_{0};
    std::atomic<std::uint64_t> publishes_{0};
    std::atomic<std::uint64_t> updates_delivered_{0};
    std::mutex err_m_;
    std::exception_ptr first_error_;
};

}  // namespace

IndependentResult solve_independent(const EquationSystem& sys, std::span<const Unknown> roots,
                                    unsigned workers, const SolverConfig& config) {
    IndependentSolver solver(sys, config, workers);
    return solver.run(roots);
}

VerificationResult verify_task_solution(const EquationSystem& sys, const TaskSolution& task,
                                        const Solution& broker_globals) {
    VerificationResult result;
    for (std::uint32_t id : task.iterated_locals) {
        Unknown x{id};
        const RhsExpr* e = sys.rhs(x);
        if (!e)
            throw AnalysisError("iterated local '" + sys.label(x) + "' has no right-hand side");
        std::vector<std::pair<Unknown, LatticeValue>> sides;
        CallbackContext ctx(
            [&](Unknown y) -> LatticeValue {
                if (sys.is_global(y)) return broker_globals.value_or(y, sys.bottom_of(y));
                return task.values.value_or(y, sys.bottom_of(y));
            },
            [&](Unknown g, const LatticeValue& v) { sides.emplace_back(g, v); },
            [](Unknown) {});
        LatticeValue value = eval_rhs(*e, ctx);
        LatticeValue stored = task.values.value_or(x, sys.bottom_of(x));
        if (!leq(value, stored))
            result.violations.push_back(
                {x, std::move(stored), std::move(value), ViolationKind::RhsNotSubsumed});
        for (auto& [g, v] : sides) {
            LatticeValue sg = broker_globals.value_or(g, sys.bottom_of(g));
            if (!leq(v, sg))
                result.violations.push_back({g, std::move(sg), v, ViolationKind::SideNotSubsumed});
        }
    }
    result.ok = result.violations.empty();
    return result;
}

}  // namespace fixlab
