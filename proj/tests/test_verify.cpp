#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fixlab/solver.hpp"
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

TEST_CASE("solver output verifies; a weakened value does not") {
    EquationSystem sys = parse_system(kRunningExample);
    std::vector<Unknown> roots{*sys.table().find("main.end")};
    SeqResult r = solve(sys, roots);
    CHECK(verify_solution(sys, r.solution).ok);

    Solution bad = r.solution;
    bad.insert(*sys.table().find("main.end"), iv(1, 1));
    VerificationResult vr = verify_solution(sys, bad);
    CHECK(!vr.ok);
    REQUIRE(vr.violations.size() >= 1);
    bool found = false;
    for (const Violation& v : vr.violations) {
        if (sys.label(v.unknown) == "main.end") {
            found = true;
            CHECK(v.kind == ViolationKind::RhsNotSubsumed);
            CHECK(v.required == LatticeValue(iv(1, 43)));
            CHECK(v.stored == LatticeValue(iv(1, 1)));
        }
    }
    CHECK(found);
}

TEST_CASE("verification flags unaccounted side effects and demands") {
    const char* text =
        "lattice interval;\n"
        "g: global\n"
        "w: local = const [1,1]\n"
        "x: local = seq(set g const [5,5]; demand w; const [0,0])\n";
    EquationSystem sys = parse_system(text);
    Unknown x = *sys.table().find("x");
    Unknown g = *sys.table().find("g");

    Solution sol;
    sol.insert(x, iv(0, 0));
    sol.insert(g, iv(5, 5));  // w missing: demand violation
    VerificationResult vr = verify_solution(sys, sol);
    CHECK(!vr.ok);
    REQUIRE(vr.violations.size() == 1);
    CHECK(vr.violations[0].kind == ViolationKind::DemandUnreached);

    Solution sol2;
    sol2.insert(x, iv(0, 0));
    sol2.insert(*sys.table().find("w"), iv(1, 1));  // g missing: side violation
    VerificationResult vr2 = verify_solution(sys, sol2);
    CHECK(!vr2.ok);
    REQUIRE(vr2.violations.size() == 1);
    CHECK(vr2.violations[0].kind == ViolationKind::SideNotSubsumed);
}

TEST_CASE("empty solution of an empty reach set is ok") {
    EquationSystem sys = parse_system("lattice interval;\nx: local = const [1,1]\n");
    Solution empty;
    CHECK(verify_solution(sys, empty).ok);
}

TEST_CASE("kleene oracle computes least solutions") {
    const char* text =
        "lattice interval;\n"
        "x: local = const [1,2]\n"
        "y: local = add(get x, const [1,1])\n"
        "z: local = const [9,9]\n";  // unreachable from y
    EquationSystem sys = parse_system(text);
    std::vector<Unknown> roots{*sys.table().find("y")};
    Solution sol = kleene_solve(sys, roots);
    CHECK(sol.value_or(*sys.table().find("x"), Interval::empty()) == LatticeValue(iv(1, 2)));
    CHECK(sol.value_or(*sys.table().find("y"), Interval::empty()) == LatticeValue(iv(2, 3)));
    CHECK(!sol.contains(*sys.table().find("z")));  // stays absent
}

TEST_CASE("kleene oracle accumulates global contributions") {
    const char* text =
        "lattice interval;\n"
        "g: global\n"
        "a: local = set g const [0,0]\n"
        "b: local = set g const [42,42]\n"
        "root: local = seq(get a; get b; get g)\n";
    EquationSystem sys = parse_system(text);
    std::vector<Unknown> roots{*sys.table().find("root")};
    Solution sol = kleene_solve(sys, roots);
    CHECK(sol.value_or(*sys.table().find("g"), Interval::empty()) == LatticeValue(iv(0, 42)));
    CHECK(verify_solution(sys, sol).ok);
}

TEST_CASE("kleene oracle reports divergence through the round cap") {
    EquationSystem sys = parse_system(
        "lattice interval;\nx: local = join(const [0,0], add(get x, const [1,1]))\n");
    std::vector<Unknown> roots{*sys.table().find("x")};
    CHECK_THROWS_AS(kleene_solve(sys, roots, 50), BudgetError);
}

TEST_CASE("kleene oracle verifies on the synthetic corpus") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SyntheticSystem s = generate_synthetic(seed, 3, 10, 1, 2);
        Solution sol = kleene_solve(s.system, s.roots);
        CHECK(verify_solution(s.system, sol).ok);
    }
}

TEST_CASE("precision comparison classifies per unknown") {
    Solution a, b;
    Unknown u{0}, v{1}, w{2}, z{3};

    SUBCASE("identical solutions are all equal") {
        a.insert(u, iv(0, 42));
        b.insert(u, iv(0, 42));
        PrecisionReport r = compare_precision(a, b);
        CHECK(r.equal == 1);
        CHECK(r.equal_fraction() == doctest::Approx(1.0));
    }

    SUBCASE("containment is more precise from the other side") {
        a.insert(u, iv(0, 42));
        b.insert(u, iv(0, 10));
        PrecisionReport r = compare_precision(a, b);
        CHECK(r.more_precise == 1);
        CHECK(r.more_precise_fraction() == doctest::Approx(1.0));
    }

    SUBCASE("overlap without containment is incomparable") {
        a.insert(u, iv(0, 5));
        b.insert(u, iv(3, 9));
        PrecisionReport r = compare_precision(a, b);
        CHECK(r.incomparable == 1);
    }

    SUBCASE("absent unknowns read as bottom") {
        a.insert(u, iv(0, 5));            // other absent -> more precise
        a.insert(v, Interval::empty());   // other absent, bottom -> equal
        b.insert(w, iv(1, 1));            // base absent -> less precise
        a.insert(z, iv(0, 0));
        b.insert(z, iv(0, 0));
        PrecisionReport r = compare_precision(a, b);
        CHECK(r.total() == 4);
        CHECK(r.more_precise == 1);
        CHECK(r.equal == 2);
        CHECK(r.less_precise == 1);
        double sum = r.equal_fraction() + r.more_precise_fraction() +
                     r.less_precise_fraction() + r.incomparable_fraction();
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("precision comparison is antisymmetric") {
    std::mt19937_64 rng(42);
    for (int n = 0; n < 100; n++) {
        Solution a, b;
        for (std::uint32_t i = 0; i < 6; i++) {
            auto r = [&]() {
                std::int64_t lo = static_cast<std::int64_t>(rng() % 21) - 10;
                return iv(lo, lo + static_cast<std::int64_t>(rng() % 5));
            };
            if (rng() % 4 != 0) a.insert(Unknown{i}, r());
            if (rng() % 4 != 0) b.insert(Unknown{i}, r());
        }
        PrecisionReport ab = compare_precision(a, b);
        PrecisionReport ba = compare_precision(b, a);
        CHECK(ab.equal == ba.equal);
        CHECK(ab.more_precise == ba.less_precise);
        CHECK(ab.less_precise == ba.more_precise);
        CHECK(ab.incomparable == ba.incomparable);
        PrecisionReport aa = compare_precision(a, a);
        CHECK(aa.equal == aa.total());
    }
}

TEST_CASE("variant mismatch in comparison raises a domain error") {
    Solution a, b;
    a.insert(Unknown{0}, iv(0, 1));
    b.insert(Unknown{0}, Flat::top());
    CHECK_THROWS_AS(compare_precision(a, b), DomainError);
}

TEST_CASE("sequential solver equals the oracle on random monotone finite systems") {
    // Random flat/set systems built from const/get/join with cycles allowed;
    // widening degenerates to join on finite-height lattices, so the least
    // solution is reached exactly.
    std::mt19937_64 rng(2024);
    for (int instance = 0; instance < 50; instance++) {
        bool use_set = rng() % 2 == 0;
        ValueKind kind = use_set ? ValueKind::Set : ValueKind::Flat;
        EquationSystem sys;
        int n = 3 + static_cast<int>(rng() % 6);
        std::vector<Unknown> us;
        for (int i = 0; i < n; i++)
            us.push_back(sys.declare("u" + std::to_string(i), UnknownKind::Local,
                                     bottom_value(kind)));
        auto rand_const = [&]() -> LatticeValue {
            if (use_set) {
                std::set<std::string> atoms;
                const char* pool[] = {"a", "b", "c"};
                for (const char* a : pool)
                    if (rng() % 2) atoms.insert(a);
                return FiniteSet::of(std::move(atoms));
            }
            switch (rng() % 3) {
                case 0: return Flat::bot();
                case 1: return Flat::value("k");
                default: return Flat::value("m");
            }
        };
        for (int i = 0; i < n; i++) {
            RhsPtr e = rhs::constant(rand_const());
            int deps = static_cast<int>(rng() % 3);
            for (int d = 0; d < deps; d++)
                e = rhs::join2(std::move(e), rhs::get(us[rng() % n]));  // cycles allowed
            sys.set_rhs(us[i], std::move(e));
        }
        std::vector<Unknown> roots{us[0]};
        SeqResult r = solve(sys, roots);
        Solution oracle = kleene_solve(sys, roots);
        CHECK(r.solution == oracle);
        CHECK(verify_solution(sys, r.solution).ok);
    }
}
