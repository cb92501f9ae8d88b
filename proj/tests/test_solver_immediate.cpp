#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <mutex>

#include "fixlab/solver_immediate.hpp"
#include "fixlab/thread_stack.hpp"
#include "fixlab/verify.hpp"

using namespace fixlab;

namespace {

Interval iv(std::int64_t lo, std::int64_t hi) { return Interval::range(lo, hi); }

const char* kRunningExample =
    "lattice interval;\n"
    "g: global\n"
    "foo.start: global\n"
    "main.end: local = get main.afterInc\n"
    "main.afterInit: local = seq(set g const [0,0]; const top)\n"
    "main.afterSpawn: local = let d = get main.afterInit in seq(set foo.start const [42,42]; "
    "demand foo.end; d)\n"
    "main.afterRead: local = seq(get main.afterSpawn; get g)\n"
    "main.afterInc: local = add(get main.afterRead, const [1,1])\n"
    "foo.body: local = let d = get foo.start in seq(set g d; d)\n"
    "foo.end: local = get foo.body\n";

}  // namespace

TEST_CASE("single worker recovers the sequential solver exactly") {
    // solution and evaluation counts must coincide, system by system
    std::vector<std::pair<EquationSystem, std::vector<Unknown>>> corpus;
    {
        EquationSystem sys = parse_system(kRunningExample);
        std::vector<Unknown> roots{*sys.table().find("main.end")};
        corpus.emplace_back(std::move(sys), std::move(roots));
    }
    {
        EquationSystem sys = parse_system(
            "lattice interval;\nx: local = join(const [0,0], add(get x, const [0,1]))\n");
        std::vector<Unknown> roots{*sys.table().find("x")};
        corpus.emplace_back(std::move(sys), std::move(roots));
    }
    for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
        SyntheticSystem s = generate_synthetic(seed, 3, 25, 2, 3);
        corpus.emplace_back(std::move(s.system), std::move(s.roots));
    }

    for (auto& [sys, roots] : corpus) {
        SeqResult seq = solve(sys, roots);
        ImmediateResult imm = solve_immediate(sys, roots, 1);
        CHECK(seq.solution == imm.solution);
        CHECK(seq.stats.rhs_evaluations == imm.stats.rhs_evaluations);
        CHECK(imm.stats.termination_clean);
    }
}

TEST_CASE("running example under parallel workers") {
    EquationSystem sys = parse_system(kRunningExample);
    std::vector<Unknown> roots{*sys.table().find("main.end")};
    for (unsigned workers : {1u, 2u, 4u, 8u}) {
        ImmediateResult r = solve_immediate(sys, roots, workers);
        CHECK(r.solution.value_or(*sys.table().find("g"), Interval::empty()) ==
              LatticeValue(iv(0, 42)));
        CHECK(r.solution.value_or(*sys.table().find("main.end"), Interval::empty()) ==
              LatticeValue(iv(1, 43)));
        CHECK(verify_solution(sys, r.solution).ok);
        CHECK(r.stats.termination_clean);
    }
}

TEST_CASE("multi-component systems verify across worker counts and match 1-worker values") {
    SyntheticSystem s = generate_synthetic(17, 4, 40, 1, 4);
    ImmediateResult base = solve_immediate(s.system, s.roots, 1);
    for (unsigned workers : {2u, 4u, 8u}) {
        ImmediateResult r = solve_immediate(s.system, s.roots, workers);
        CHECK(verify_solution(s.system, r.solution).ok);
        CHECK(r.stats.termination_clean);
        // disjoint chains: parallel values equal the single-worker run
        CHECK(r.solution == base.solution);
    }
}

TEST_CASE("degenerate parallelism still terminates verified") {
    SyntheticSystem s = generate_synthetic(23, 1, 60, 1, 2);  // one chain, no parallel work
    ImmediateResult r = solve_immediate(s.system, s.roots, 8);
    CHECK(verify_solution(s.system, r.solution).ok);
    CHECK(r.stats.termination_clean);
}

TEST_CASE("concurrent side effects join into the same final value") {
    // Two contributions to one global from two separately demanded tasks;
    // any interleaving must end at the join [0,42].
    const char* text =
        "lattice interval;\n"
        "g: global\n"
        "main: local = seq(demand a; demand b; const [0,0])\n"
        "a: local = set g const [0,0]\n"
        "b: local = set g const [42,42]\n";
    EquationSystem sys = parse_system(text);
    std::vector<Unknown> roots{*sys.table().find("main")};
    Unknown g = *sys.table().find("g");
    for (int rep = 0; rep < 200; rep++) {
        SolverConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep);  // jittered schedules
        ImmediateResult r = solve_immediate(sys, roots, 2, cfg);
        CHECK(r.solution.value_or(g, Interval::empty()) == LatticeValue(iv(0, 42)));
        CHECK(r.stats.termination_clean);
    }
}

TEST_CASE("lost-update freedom: the final value bounds every contribution") {
    SyntheticSystem s = generate_synthetic(31, 4, 20, 2, 3);
    std::mutex m;
    std::unordered_map<std::uint32_t, std::vector<LatticeValue>> contributions;
    SolverConfig cfg;
    cfg.on_contribution = [&](Unknown g, const LatticeValue& v) {
        std::lock_guard<std::mutex> lock(m);
        contributions[g.id].push_back(v);
    };
    ImmediateResult r = solve_immediate(s.system, s.roots, 4, cfg);
    CHECK(r.stats.termination_clean);
    for (const auto& [gid, vs] : contributions) {
        LatticeValue final_value = r.solution.value_or(Unknown{gid}, Interval::empty());
        for (const LatticeValue& v : vs) CHECK(leq(v, final_value));
    }
}

TEST_CASE("claims and retries are accounted") {
    SyntheticSystem s = generate_synthetic(37, 6, 30, 1, 3);
    ImmediateResult r = solve_immediate(s.system, s.roots, 4);
    CHECK(r.immediate.per_worker_rhs.size() == 4);
    std::uint64_t sum = 0;
    for (std::uint64_t v : r.immediate.per_worker_rhs) sum += v;
    CHECK(sum == r.stats.rhs_evaluations);
    CHECK(r.immediate.cas_attempts > 0);
    CHECK(r.immediate.retry_ratio() >= 0.0);
    CHECK(r.immediate.retry_ratio() <= 1.0);
}

TEST_CASE("budget exceeded propagates from workers") {
    SyntheticSystem s = generate_synthetic(41, 2, 50, 1, 2);
    SolverConfig cfg;
    cfg.eval_budget = 5;
    CHECK_THROWS_AS(solve_immediate(s.system, s.roots, 2, cfg), BudgetError);
}

TEST_CASE("workers must be positive") {
    EquationSystem sys = parse_system("lattice interval;\nx: local = const [0,0]\n");
    std::vector<Unknown> roots{*sys.table().find("x")};
    CHECK_THROWS_AS(solve_immediate(sys, roots, 0), AnalysisError);
}

TEST_CASE("contended claims on one fresh unknown keep a single iterator") {
    // Many roots funnel into the same fresh chain; the ownership token
    // (asserted on claim/release) aborts if two workers ever iterate the
    // same unknown, and claim skips are the expected pressure valve.
    EquationSystem sys;
    Unknown shared0 = sys.declare("s0", UnknownKind::Local, Interval::empty());
    sys.set_rhs(shared0, rhs::constant(Interval::range(0, 1)));
    Unknown prev = shared0;
    for (int i = 1; i < 30; i++) {
        Unknown u = sys.declare("s" + std::to_string(i), UnknownKind::Local, Interval::empty());
        sys.set_rhs(u, rhs::binop(ArithOp::Add, rhs::get(prev), rhs::constant(Interval::constant(1))));
        prev = u;
    }
    std::vector<RhsPtr> demands;
    std::vector<Unknown> roots;
    for (int r = 0; r < 8; r++) {
        Unknown u = sys.declare("r" + std::to_string(r), UnknownKind::Local, Interval::empty());
        sys.set_rhs(u, rhs::get(prev));
        demands.push_back(rhs::demand(u));
    }
    Unknown main_u = sys.declare("main", UnknownKind::Local, Interval::empty());
    demands.push_back(rhs::constant(Interval::constant(0)));
    sys.set_rhs(main_u, rhs::seq(std::move(demands)));
    roots.push_back(main_u);

    for (int rep = 0; rep < 50; rep++) {
        SolverConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep + 1);
        ImmediateResult r = solve_immediate(sys, roots, 4, cfg);
        CHECK(r.solution.value_or(prev, Interval::empty()) ==
              LatticeValue(Interval::range(29, 30)));
        CHECK(r.stats.termination_clean);
    }
}

TEST_CASE("stressed shared-global convergence across schedules") {
    // All chains write and read the same global, maximizing cross-worker
    // destabilization traffic.
    EquationSystem sys;
    Unknown g = sys.declare("g", UnknownKind::Global, Interval::empty());
    std::vector<Unknown> workers_roots;
    std::vector<RhsPtr> demands;
    for (int c = 0; c < 6; c++) {
        Unknown u = sys.declare("w" + std::to_string(c), UnknownKind::Local, Interval::empty());
        sys.set_rhs(u, rhs::seq({rhs::set(g, rhs::constant(Interval::constant(c))),
                                 rhs::join2(rhs::get(g), rhs::constant(Interval::constant(c)))}));
        workers_roots.push_back(u);
        demands.push_back(rhs::demand(u));
    }
    Unknown main_u = sys.declare("main", UnknownKind::Local, Interval::empty());
    demands.push_back(rhs::get(g));
    sys.set_rhs(main_u, rhs::seq(std::move(demands)));
    std::vector<Unknown> roots{main_u};

    for (int rep = 0; rep < 100; rep++) {
        SolverConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep + 1);
        ImmediateResult r = solve_immediate(sys, roots, 4, cfg);
        CHECK(verify_solution(sys, r.solution).ok);
        CHECK(r.stats.termination_clean);
        // Contribution order (and hence widening precision) varies between
        // schedules; soundness does not: g bounds every contribution.
        CHECK(leq(LatticeValue(iv(0, 5)), r.solution.value_or(g, Interval::empty())));
    }
}
