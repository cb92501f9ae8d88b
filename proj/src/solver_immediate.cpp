#include <cassert>
#include <chrono>
#include <mutex>
#include <random>
#include <thread>

#include "fixlab/atomic_record_table.hpp"
#include "fixlab/solver_immediate.hpp"
#include "fixlab/thread_stack.hpp"
#include "fixlab/work_pool.hpp"

namespace fixlab {

namespace {

struct WorkerCtx {
    int index = 0;
    std::uint64_t rhs_evals = 0;
    std::uint64_t cas_attempts = 0;
    std::uint64_t cas_retries = 0;
    std::uint64_t claims_skipped = 0;
    std::uint64_t destabilizations = 0;
    std::uint64_t widenings = 0;
    std::mt19937_64 rng;
    bool jitter = false;
};

class ImmediateSolver {
public:
    ImmediateSolver(const EquationSystem& sys, const SolverConfig& cfg, unsigned workers)
        : sys_(sys), cfg_(cfg), table_(sys, cfg.table_buckets), workers_(workers) {}

    ImmediateResult run(std::span<const Unknown> roots) {
        if (workers_ < 1) throw AnalysisError("solve_immediate requires at least one worker");
        if (roots.empty()) throw AnalysisError("solve requires at least one root");
        auto start = std::chrono::steady_clock::now();

        for (Unknown r : roots) {
            if (sys_.is_global(r))
                throw AnalysisError("root '" + sys_.label(r) + "' must be a local unknown");
            AtomicRecord& rec = table_.find_or_insert(r);
            WorkerCtx boot;
            update_snapshot(rec, boot, [](Snapshot& s) { s.toplevel = true; });
            pool_.add(r.id);
        }

        busy_.store(static_cast<int>(workers_));
        std::vector<WorkerCtx> ctxs(workers_);
        std::vector<StackThread> threads(workers_);
        for (unsigned i = 0; i < workers_; i++) {
            ctxs[i].index = static_cast<int>(i);
            if (cfg_.seed != 0) {
                ctxs[i].jitter = true;
                ctxs[i].rng.seed(cfg_.seed * 0x9e3779b97f4a7c15ull + i);
            }
            threads[i].start([this, &ctxs, i] { worker_main(ctxs[i]); });
        }
        for (auto& t : threads) t.join();
        if (first_error_) std::rethrow_exception(first_error_);

        ImmediateResult result;
        result.stats.termination_clean = pool_.empty();
        table_.for_each([&](const AtomicRecord& rec) {
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            if (s->called || !s->stable) result.stats.termination_clean = false;
            result.solution.insert(rec.u, s->value);
        });
        result.stats.unknowns_reached = table_.size();
        for (const auto& c : ctxs) {
            result.stats.rhs_evaluations += c.rhs_evals;
            result.stats.destabilizations += c.destabilizations;
            result.stats.widenings += c.widenings;
            result.immediate.cas_attempts += c.cas_attempts;
            result.immediate.cas_retries += c.cas_retries;
            result.immediate.claims_skipped += c.claims_skipped;
            if (cfg_.collect_stats) result.immediate.per_worker_rhs.push_back(c.rhs_evals);
        }
        result.stats.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        return result;
    }

private:
    // Single CAS attempt: publish a mutated copy of `expected`.
    bool try_swap(AtomicRecord& rec, WorkerCtx& w, const Snapshot* expected, Snapshot next) {
        w.cas_attempts++;
        auto* candidate = new Snapshot(std::move(next));
        const Snapshot* e = expected;
        if (rec.snap.compare_exchange_strong(e, candidate, std::memory_order_acq_rel,
                                             std::memory_order_acquire)) {
            table_.retire(expected);
            return true;
        }
        delete candidate;
        w.cas_retries++;
        return false;
    }

    // Retry until the mutation is applied to the current snapshot.
    template <class Fn>
    const Snapshot* update_snapshot(AtomicRecord& rec, WorkerCtx& w, Fn&& mutate) {
        for (;;) {
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            Snapshot next = *s;
            mutate(next);
            if (try_swap(rec, w, s, std::move(next)))
                return rec.snap.load(std::memory_order_acquire);
        }
    }

    void worker_main(WorkerCtx& w) {
        if (w.jitter) {
            std::this_thread::sleep_for(
                std::chrono::microseconds(w.rng() % (50 * (w.index + 1) + 1)));
        }
        for (;;) {
            if (stop_.load(std::memory_order_acquire)) return;
            if (auto id = pool_.try_pop()) {
                if (w.jitter && (w.rng() & 7u) == 0)
                    std::this_thread::sleep_for(std::chrono::microseconds(w.rng() % 40));
                try {
                    run_toplevel(w, Unknown{*id});
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

    void run_toplevel(WorkerCtx& w, Unknown x) {
        AtomicRecord& rec = table_.find_or_insert(x);
        if (!try_claim(rec, w)) {
            // Another worker owns x; drop the item. Since claims are only
            // released on stable snapshots, nothing is lost: a later
            // destabilization of x re-enqueues it.
            w.claims_skipped++;
            return;
        }
        iterate(w, rec);
    }

    bool try_claim(AtomicRecord& rec, WorkerCtx& w) {
        for (;;) {
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            if (s->called) return false;
            Snapshot next = *s;
            next.called = true;
            if (try_swap(rec, w, s, std::move(next))) {
                std::int32_t prev = rec.owner.exchange(w.index, std::memory_order_acq_rel);
                assert(prev == -1 && "claim while another worker holds the record");
                (void)prev;
                return true;
            }
        }
    }

    // Pre: claim held. Runs the top-level iterate loop against shared state.
    // The claim is released through a CAS on a stable snapshot, so a
    // destabilization arriving at any point before the release linearizes
    // forces another evaluation instead of slipping through; an unknown is
    // never left unstable, unclaimed, and unannounced.
    void iterate(WorkerCtx& w, AtomicRecord& rec) {
        Unknown x = rec.u;
        const RhsExpr* e = sys_.rhs(x);
        if (!e)
            throw AnalysisError("reached local '" + sys_.label(x) + "' has no right-hand side");

        for (;;) {
            if (stop_.load(std::memory_order_acquire)) {
                abort_release(rec, w);
                return;
            }
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            if (!s->stable) {
                Snapshot next = *s;
                next.stable = true;
                if (!try_swap(rec, w, s, std::move(next))) continue;

                if (evals_.fetch_add(1, std::memory_order_acq_rel) + 1 > cfg_.eval_budget)
                    throw BudgetError("evaluation budget exceeded while iterating '" +
                                      sys_.label(x) + "'");
                w.rhs_evals++;
                IterCtx ctx(*this, w, x);
                LatticeValue new_value = eval_rhs(*e, ctx);
                commit_value(w, rec, new_value);
                continue;
            }

            // Release attempt on this stable snapshot. The pool entry is
            // consumed first; if the CAS fails because a destabilization
            // raced in, the loop re-evaluates and any dropped re-enqueue is
            // re-established by the next release round.
            if (s->toplevel) pool_.remove(x.id);
            std::int32_t prev = rec.owner.exchange(-1, std::memory_order_acq_rel);
            assert(prev == w.index && "release without claim");
            (void)prev;
            Snapshot next = *s;
            next.called = false;
            if (try_swap(rec, w, s, std::move(next))) return;
            prev = rec.owner.exchange(w.index, std::memory_order_acq_rel);
            assert(prev == -1 && "claim stolen while held");
        }
    }

    // Abandon the claim during shutdown; state consistency no longer matters.
    void abort_release(AtomicRecord& rec, WorkerCtx& w) {
        rec.owner.exchange(-1, std::memory_order_acq_rel);
        update_snapshot(rec, w, [](Snapshot& n) { n.called = false; });
    }

    // The transactional commit: CAS the joined/widened value in, rechecking
    // subsumption against fresh state after every failed attempt. A committed
    // growth is always followed by destabilization.
    void commit_value(WorkerCtx& w, AtomicRecord& rec, const LatticeValue& new_value) {
        for (;;) {
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            if (leq(new_value, s->value)) return;  // subsumed: abandon
            Snapshot next = *s;
            next.value = join(s->value, new_value);
            if (s->widen_point) {
                next.value = widen(s->value, next.value);
                w.widenings++;
            }
            if (try_swap(rec, w, s, std::move(next))) {
                if (cfg_.on_store)
                    cfg_.on_store(rec.u, rec.snap.load(std::memory_order_acquire)->value);
                destabilize(w, rec);
                return;
            }
        }
    }

    struct IterCtx final : RhsContext {
        ImmediateSolver& s;
        WorkerCtx& w;
        Unknown x;
        IterCtx(ImmediateSolver& solver, WorkerCtx& worker, Unknown current)
            : s(solver), w(worker), x(current) {}
        LatticeValue get(Unknown y) override { return s.query(w, x, y); }
        void set(Unknown g, const LatticeValue& v) override { s.side(w, g, v); }
        void demand(Unknown y) override { s.promote(w, y); }
    };

    LatticeValue query(WorkerCtx& w, Unknown x, Unknown y) {
        AtomicRecord& ry = table_.find_or_insert(y);
        if (!sys_.is_global(y)) {
            const Snapshot* s = ry.snap.load(std::memory_order_acquire);
            if (s->called) {
                // Cycle through the activation path, or another worker is on
                // y right now; either way treat y as a widening point.
                mark_widen_point(w, ry);
            } else if (!s->stable) {
                if (try_claim(ry, w)) {
                    iterate(w, ry);
                } else {
                    const Snapshot* s2 = ry.snap.load(std::memory_order_acquire);
                    if (s2->called) mark_widen_point(w, ry);
                }
            } else if (s->toplevel) {
                // The sequential iterate would run zero passes on a stable
                // unknown and drop it from the workset; mirror that cleanup,
                // re-adding if a destabilization raced with the removal.
                pool_.remove(y.id);
                const Snapshot* s2 = ry.snap.load(std::memory_order_acquire);
                if (!s2->stable && s2->toplevel) pool_.add(y.id);
            }
        }
        // Ordering discipline: record the dependency before reading the
        // value, so any update after the read is guaranteed to reach x.
        ry.influences.add(x.id);
        if (!sys_.is_global(y)) {
            // Staleness recheck now that the dependency is on file. An
            // unstable, unclaimed y has no owner obligated to re-evaluate
            // it (its destabilization wave may have consumed its influence
            // edges before ours existed), so resolve it here; once y is
            // stable or claimed, the recorded edge covers every later flag
            // or commit.
            for (;;) {
                const Snapshot* s = ry.snap.load(std::memory_order_acquire);
                if (s->stable || s->called) break;
                if (try_claim(ry, w)) iterate(w, ry);
            }
        }
        return ry.snap.load(std::memory_order_acquire)->value;
    }

    void mark_widen_point(WorkerCtx& w, AtomicRecord& rec) {
        for (;;) {
            const Snapshot* s = rec.snap.load(std::memory_order_acquire);
            if (s->widen_point) return;
            Snapshot next = *s;
            next.widen_point = true;
            if (try_swap(rec, w, s, std::move(next))) return;
        }
    }

    void side(WorkerCtx& w, Unknown g, const LatticeValue& contribution) {
        AtomicRecord& rg = table_.find_or_insert(g);
        if (cfg_.on_contribution) cfg_.on_contribution(g, contribution);
        for (;;) {
            const Snapshot* s = rg.snap.load(std::memory_order_acquire);
            LatticeValue joined = join(s->value, contribution);
            bool grew = !leq(joined, s->value);
            if (!grew && s->stable) return;
            Snapshot next = *s;
            next.stable = true;
            if (grew) {
                if (s->growth_count >= cfg_.widen_delay) {
                    joined = widen(s->value, joined);
                    w.widenings++;
                }
                next.value = std::move(joined);
                next.growth_count = s->growth_count + 1;
            }
            if (try_swap(rg, w, s, std::move(next))) {
                if (grew) {
                    if (cfg_.on_store)
                        cfg_.on_store(g, rg.snap.load(std::memory_order_acquire)->value);
                    destabilize(w, rg);
                }
                return;
            }
        }
    }

    void promote(WorkerCtx& w, Unknown y) {
        if (sys_.is_global(y))
            throw AnalysisError("demand target '" + sys_.label(y) + "' must be a local unknown");
        AtomicRecord& ry = table_.find_or_insert(y);
        const Snapshot* s = ry.snap.load(std::memory_order_acquire);
        if (!s->toplevel) update_snapshot(ry, w, [](Snapshot& n) { n.toplevel = true; });
        pool_.add(y.id);
    }

    void destabilize(WorkerCtx& w, AtomicRecord& rec) {
        std::vector<std::uint32_t> taken = rec.influences.take_all();
        for (std::uint32_t yid : taken) {
            Unknown y{yid};
            AtomicRecord& ry = table_.find_or_insert(y);
            const Snapshot* s = ry.snap.load(std::memory_order_acquire);
            while (s->stable) {
                Snapshot next = *s;
                next.stable = false;
                if (try_swap(ry, w, s, std::move(next))) break;
                s = ry.snap.load(std::memory_order_acquire);
            }
            w.destabilizations++;
            if (ry.snap.load(std::memory_order_acquire)->toplevel) pool_.add(yid);
            destabilize(w, ry);
        }
    }

    const EquationSystem& sys_;
    const SolverConfig& cfg_;
    AtomicRecordTable table_;
    WorkPool pool_;
    unsigned workers_;
    std::atomic<int> busy_{0};
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> evals_{0};
    std::mutex err_m_;
    std::exception_ptr first_error_;
};

}  // namespace

ImmediateResult solve_immediate(const EquationSystem& sys, std::span<const Unknown> roots,
                                unsigned workers, const SolverConfig& config) {
    ImmediateSolver solver(sys, config, workers);
    return solver.run(roots);
}

}  // namespace fixlab
