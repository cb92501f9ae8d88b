#include <algorithm>
#include <unordered_set>

#include "fixlab/verify.hpp"

namespace fixlab {

const char* violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::RhsNotSubsumed: return "rhs_not_subsumed";
        case ViolationKind::SideNotSubsumed: return "side_not_subsumed";
        case ViolationKind::DemandUnreached: return "demand_unreached";
    }
    return "?";
}

const char* precision_class_name(PrecisionClass c) {
    switch (c) {
        case PrecisionClass::Equal: return "equal";
        case PrecisionClass::MorePrecise: return "more_precise";
        case PrecisionClass::LessPrecise: return "less_precise";
        case PrecisionClass::Incomparable: return "incomparable";
    }
    return "?";
}

namespace {

struct VerifyCtx final : RhsContext {
    const EquationSystem& sys;
    const Solution& sol;
    std::vector<std::pair<Unknown, LatticeValue>> sides;
    std::vector<Unknown> demands;

    VerifyCtx(const EquationSystem& s, const Solution& so) : sys(s), sol(so) {}

    LatticeValue get(Unknown u) override { return sol.value_or(u, sys.bottom_of(u)); }
    void set(Unknown g, const LatticeValue& v) override { sides.emplace_back(g, v); }
    void demand(Unknown u) override { demands.push_back(u); }
};

}  // namespace

VerificationResult verify_solution(const EquationSystem& sys, const Solution& sol) {
    VerificationResult result;
    std::vector<std::uint32_t> reached;
    reached.reserve(sol.size());
    for (const auto& [id, value] : sol) {
        (void)value;
        reached.push_back(id);
    }
    std::sort(reached.begin(), reached.end());

    for (std::uint32_t id : reached) {
        Unknown x{id};
        if (sys.is_global(x)) continue;
        const RhsExpr* e = sys.rhs(x);
        if (!e)
            throw AnalysisError("reached local '" + sys.label(x) + "' has no right-hand side");

        VerifyCtx ctx(sys, sol);
        LatticeValue value = eval_rhs(*e, ctx);
        const LatticeValue stored = sol.value_or(x, sys.bottom_of(x));
        if (!leq(value, stored)) {
            result.violations.push_back(
                {x, stored, std::move(value), ViolationKind::RhsNotSubsumed});
        }
        for (auto& [g, v] : ctx.sides) {
            const LatticeValue sg = sol.value_or(g, sys.bottom_of(g));
            if (!leq(v, sg)) {
                result.violations.push_back({g, sg, v, ViolationKind::SideNotSubsumed});
            }
        }
        for (Unknown d : ctx.demands) {
            if (!sol.contains(d)) {
                result.violations.push_back(
                    {d, sys.bottom_of(d), sys.bottom_of(d), ViolationKind::DemandUnreached});
            }
        }
    }
    result.ok = result.violations.empty();
    return result;
}

namespace {

// Static dependency closure of an expression-only system: every get, set
// target, and demand target of a reached local is reached.
struct Closure {
    std::vector<Unknown> locals;   // insertion order
    std::vector<Unknown> globals;  // insertion order
    std::unordered_set<std::uint32_t> seen;
};

void reach(const EquationSystem& sys, Unknown u, Closure& c) {
    if (!c.seen.insert(u.id).second) return;
    if (sys.is_global(u)) {
        c.globals.push_back(u);
        return;
    }
    c.locals.push_back(u);
    const RhsExpr* e = sys.rhs(u);
    if (!e) throw AnalysisError("reached local '" + sys.label(u) + "' has no right-hand side");
    if (!is_expression_only(*e))
        throw AnalysisError("kleene oracle requires an expression-only system");
    std::vector<Unknown> gets, sets, demands;
    collect_targets(*e, gets, sets, demands);
    for (Unknown y : gets) reach(sys, y, c);
    for (Unknown y : sets) reach(sys, y, c);
    for (Unknown y : demands) reach(sys, y, c);
}

}  // namespace

Solution kleene_solve(const EquationSystem& sys, std::span<const Unknown> roots,
                      std::uint64_t round_cap) {
    Closure closure;
    for (Unknown r : roots) reach(sys, r, closure);

    Solution sigma;
    for (Unknown x : closure.locals) sigma.insert(x, sys.bottom_of(x));
    for (Unknown g : closure.globals) sigma.insert(g, sys.bottom_of(g));

    for (std::uint64_t round = 0;; round++) {
        if (round >= round_cap)
            throw BudgetError("kleene oracle exceeded its round cap (diverging system?)");
        bool changed = false;

        // Locals update in place (chaotic iteration); global contributions
        // are recomputed from scratch each round.
        std::unordered_map<std::uint32_t, LatticeValue> contributions;
        for (Unknown x : closure.locals) {
            CallbackContext ctx(
                [&](Unknown y) { return sigma.value_or(y, sys.bottom_of(y)); },
                [&](Unknown g, const LatticeValue& v) {
                    auto [it, fresh] = contributions.try_emplace(g.id, v);
                    if (!fresh) it->second = join(it->second, v);
                },
                [](Unknown) {});
            LatticeValue next = eval_rhs(*sys.rhs(x), ctx);
            if (!(next == *sigma.find(x))) {
                sigma.insert(x, std::move(next));
                changed = true;
            }
        }
        for (Unknown g : closure.globals) {
            auto it = contributions.find(g.id);
            LatticeValue next = it == contributions.end() ? sys.bottom_of(g) : it->second;
            if (!(next == *sigma.find(g))) {
                sigma.insert(g, std::move(next));
                changed = true;
            }
        }
        if (!changed) break;
    }
    return sigma;
}

PrecisionReport compare_precision(const Solution& base, const Solution& other) {
    PrecisionReport report;
    std::vector<std::uint32_t> universe;
    for (const auto& [id, v] : base) {
        (void)v;
        universe.push_back(id);
    }
    for (const auto& [id, v] : other) {
        (void)v;
        if (!base.contains(Unknown{id})) universe.push_back(id);
    }
    std::sort(universe.begin(), universe.end());

    for (std::uint32_t id : universe) {
        Unknown u{id};
        const LatticeValue* vb = base.find(u);
        const LatticeValue* vo = other.find(u);

        PrecisionClass cls;
        if (vb && vo) {
            bool ob = leq(*vo, *vb);
            bool bo = leq(*vb, *vo);
            cls = ob && bo    ? PrecisionClass::Equal
                  : ob        ? PrecisionClass::MorePrecise
                  : bo        ? PrecisionClass::LessPrecise
                              : PrecisionClass::Incomparable;
        } else if (vb) {
            // other reads as bottom
            cls = is_bottom(*vb) ? PrecisionClass::Equal : PrecisionClass::MorePrecise;
        } else {
            cls = is_bottom(*vo) ? PrecisionClass::Equal : PrecisionClass::LessPrecise;
        }

        switch (cls) {
            case PrecisionClass::Equal: report.equal++; break;
            case PrecisionClass::MorePrecise: report.more_precise++; break;
            case PrecisionClass::LessPrecise: report.less_precise++; break;
            case PrecisionClass::Incomparable: report.incomparable++; break;
        }
        report.detail.push_back({u, cls});
    }
    return report;
}

}  // namespace fixlab
