#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fixlab/lattice.hpp"

using namespace fixlab;

namespace {

Interval iv(std::int64_t lo, std::int64_t hi) { return Interval::range(lo, hi); }

// Random same-kind value generators for the property checks.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    std::int64_t small_int() { return static_cast<std::int64_t>(rng() % 201) - 100; }

    Interval interval() {
        switch (rng() % 8) {
            case 0: return Interval::empty();
            case 1: return Interval::top();
            case 2: return Interval::range(kNegInf, small_int());
            case 3: return Interval::range(small_int(), kPosInf);
            default: {
                std::int64_t a = small_int(), b = small_int();
                return Interval::range(std::min(a, b), std::max(a, b));
            }
        }
    }

    Env env() {
        if (rng() % 6 == 0) return Env::unreachable();
        Env::Bindings b;
        const char* names[] = {"x", "y", "z"};
        for (const char* n : names)
            if (rng() % 2) b[n] = interval();
        return Env::reachable(std::move(b));
    }

    FiniteSet set() {
        std::set<std::string> atoms;
        const char* pool[] = {"a", "b", "c", "d"};
        for (const char* a : pool)
            if (rng() % 2) atoms.insert(a);
        return FiniteSet::of(std::move(atoms));
    }

    Flat flat() {
        switch (rng() % 4) {
            case 0: return Flat::bot();
            case 1: return Flat::top();
            default: return Flat::value(rng() % 2 ? "p" : "q");
        }
    }

    LatticeValue value(int kind) {
        switch (kind) {
            case 0: return interval();
            case 1: return env();
            case 2: return set();
            default: return flat();
        }
    }
};

}  // namespace

TEST_CASE("interval join matches the running example") {
    CHECK(iv(0, 0).join(iv(42, 42)) == iv(0, 42));
    CHECK(join(LatticeValue(Interval::empty()), LatticeValue(iv(3, 5))) == LatticeValue(iv(3, 5)));
    CHECK(iv(1, 3).join(iv(2, 5)) == iv(1, 5));
}

TEST_CASE("interval leq is containment") {
    CHECK(leq(LatticeValue(iv(0, 0)), LatticeValue(iv(0, 42))));
    CHECK(leq(LatticeValue(Interval::empty()), LatticeValue(iv(7, 9))));
    CHECK(!leq(LatticeValue(iv(0, 42)), LatticeValue(iv(1, 43))));
}

TEST_CASE("interval widening jumps exceeded bounds to infinity") {
    CHECK(widen(LatticeValue(iv(0, 1)), LatticeValue(iv(0, 2))) ==
          LatticeValue(iv(0, kPosInf)));
    LatticeValue v = iv(2, 9);
    CHECK(widen(v, v) == v);
    CHECK(widen(LatticeValue(iv(0, 5)), LatticeValue(iv(-1, 5))) ==
          LatticeValue(iv(kNegInf, 5)));
    CHECK_THROWS_AS(widen(LatticeValue(iv(0, 5)), LatticeValue(iv(1, 5))), ContractError);
}

TEST_CASE("abstract arithmetic") {
    CHECK(abstract_binop(ArithOp::Add, iv(0, 42), iv(1, 1)) == iv(1, 43));
    CHECK(abstract_binop(ArithOp::Add, Interval::empty(), iv(1, 1)) == Interval::empty());

    // brute-force oracle over all integer points of the operands
    Interval a = iv(-1, 2), b = iv(3, 3);
    std::int64_t lo = kPosInf, hi = kNegInf;
    for (std::int64_t x = a.lo(); x <= a.hi(); x++)
        for (std::int64_t y = b.lo(); y <= b.hi(); y++) {
            lo = std::min(lo, x * y);
            hi = std::max(hi, x * y);
        }
    CHECK(iv(lo, hi) == iv(-3, 6));
    CHECK(abstract_binop(ArithOp::Mul, a, b) == iv(-3, 6));

    CHECK(abstract_binop(ArithOp::Mul, iv(0, 0), Interval::top()) == iv(0, 0));
    CHECK(abstract_binop(ArithOp::Sub, iv(0, 2), iv(1, 1)) == iv(-1, 1));
}

TEST_CASE("binop soundness on sampled concrete points") {
    Gen gen(0xfeed);
    for (int n = 0; n < 500; n++) {
        Interval a = gen.interval(), b = gen.interval();
        if (a.is_empty() || b.is_empty()) continue;
        ArithOp ops[] = {ArithOp::Add, ArithOp::Sub, ArithOp::Mul};
        ArithOp op = ops[gen.rng() % 3];
        Interval r = abstract_binop(op, a, b);
        for (int s = 0; s < 16; s++) {
            auto pick = [&](const Interval& i) -> std::int64_t {
                std::int64_t lo = std::max<std::int64_t>(i.lo(), -100);
                std::int64_t hi = std::min<std::int64_t>(i.hi(), 100);
                if (lo > hi) return lo;
                return lo + static_cast<std::int64_t>(gen.rng() % (hi - lo + 1));
            };
            std::int64_t x = pick(a), y = pick(b);
            if (!a.contains(x) || !b.contains(y)) continue;
            std::int64_t c = op == ArithOp::Add ? x + y : op == ArithOp::Sub ? x - y : x * y;
            CHECK(r.contains(c));
        }
    }
}

TEST_CASE("lattice laws hold on random same-kind values") {
    Gen gen(0xabcd);
    for (int kind = 0; kind < 4; kind++) {
        for (int n = 0; n < 300; n++) {
            LatticeValue a = gen.value(kind), b = gen.value(kind), c = gen.value(kind);

            CHECK(join(a, b) == join(b, a));
            CHECK(join(a, join(b, c)) == join(join(a, b), c));
            CHECK(join(a, a) == a);

            CHECK(leq(a, a));
            CHECK(leq(a, join(a, b)));
            CHECK(leq(b, join(a, b)));
            if (leq(a, b) && leq(b, c)) CHECK(leq(a, c));
            if (leq(a, b) && leq(b, a)) CHECK(a == b);

            LatticeValue n1 = join(a, b);
            CHECK(leq(n1, widen(a, n1)));
        }
    }
}

TEST_CASE("interval widening chains stabilize within three steps per bound") {
    Gen gen(0x1234);
    for (int n = 0; n < 200; n++) {
        LatticeValue v = gen.interval();
        int steps = 0;
        for (;; steps++) {
            REQUIRE(steps <= 8);
            LatticeValue next = join(v, LatticeValue(gen.interval()));
            LatticeValue w = widen(v, next);
            if (w == v) break;
            v = w;
        }
    }
}

TEST_CASE("env widening chains stabilize within 2*vars+2 steps") {
    Gen gen(0x5678);
    for (int n = 0; n < 200; n++) {
        LatticeValue v = gen.env();
        int steps = 0;
        for (;; steps++) {
            REQUIRE(steps <= 2 * 3 + 2);
            LatticeValue next = join(v, LatticeValue(gen.env()));
            LatticeValue w = widen(v, next);
            if (w == v) break;
            v = w;
        }
    }
}

TEST_CASE("env semantics") {
    Env e = Env::reachable({{"x", iv(0, 1)}});
    CHECK(e.get("unbound") == Interval::top());
    CHECK(e.with("x", Interval::empty()).is_unreachable());
    CHECK(e.with("x", Interval::top()).bindings().empty());
    CHECK(Env::unreachable().leq(e));
    CHECK(!e.leq(Env::unreachable()));
    CHECK(Env::reachable({{"x", Interval::empty()}}).is_unreachable());

    Env a = Env::reachable({{"x", iv(0, 1)}, {"y", iv(2, 3)}});
    Env b = Env::reachable({{"x", iv(5, 6)}});
    Env j = a.join(b);
    CHECK(j.get("x") == iv(0, 6));
    CHECK(j.get("y") == Interval::top());
}

TEST_CASE("variant mismatch raises a domain error") {
    CHECK_THROWS_AS(join(LatticeValue(iv(0, 1)), LatticeValue(Flat::top())), DomainError);
    CHECK_THROWS_AS(leq(LatticeValue(FiniteSet()), LatticeValue(iv(0, 1))), DomainError);
    CHECK_THROWS_AS(binop(ArithOp::Add, LatticeValue(Flat::top()), LatticeValue(Flat::top())),
                    DomainError);
}

TEST_CASE("value syntax round-trips") {
    auto rt = [](const char* text, ValueKind kind) {
        LatticeValue v = parse_value(text, kind);
        CHECK(to_string(v) == text);
        CHECK(parse_value(to_string(v), kind) == v);
    };
    rt("bot", ValueKind::Interval);
    rt("top", ValueKind::Interval);
    rt("[0,42]", ValueKind::Interval);
    rt("[-inf,5]", ValueKind::Interval);
    rt("[-3,+inf]", ValueKind::Interval);
    rt("{a,b}", ValueKind::Set);
    rt("bot", ValueKind::Set);
    rt("bot", ValueKind::Flat);
    rt("top", ValueKind::Flat);
    rt("some_atom", ValueKind::Flat);
    rt("unreachable", ValueKind::Env);
    rt("env{}", ValueKind::Env);
    rt("env{x:[0,1],y:[2,+inf]}", ValueKind::Env);

    CHECK_THROWS_AS(parse_value("[5,2]", ValueKind::Interval), ParseError);
    CHECK_THROWS_AS(parse_value("nonsense[", ValueKind::Interval), ParseError);
    CHECK_THROWS_AS(parse_value("[1,2] junk", ValueKind::Interval), ParseError);
}

TEST_CASE("relational refinement intervals") {
    CHECK(interval_from_rel(RelOp::Lt, 10) == Interval::range(kNegInf, 9));
    CHECK(interval_from_rel(RelOp::Ge, 10) == Interval::range(10, kPosInf));
    CHECK(interval_from_rel(RelOp::Eq, 7) == iv(7, 7));
    CHECK(interval_from_rel(RelOp::Ne, 7) == Interval::top());
}
