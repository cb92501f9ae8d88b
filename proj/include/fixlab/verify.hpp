#ifndef FIXLAB_VERIFY_HPP
#define FIXLAB_VERIFY_HPP

#include <span>
#include <string>
#include <vector>

#include "fixlab/solver.hpp"

namespace fixlab {

enum class ViolationKind { RhsNotSubsumed, SideNotSubsumed, DemandUnreached };

const char* violation_kind_name(ViolationKind k);

struct Violation {
    Unknown unknown;
    LatticeValue stored;
    LatticeValue required;
    ViolationKind kind;
};

struct VerificationResult {
    bool ok = true;
    std::vector<Violation> violations;
};

/// Post-fixpoint check: re-evaluates every reached local's right-hand side
/// against the solution and reports values, side contributions, or demands
/// it does not account for. Unknowns outside the solution read as bottom.
VerificationResult verify_solution(const EquationSystem& sys, const Solution& sol);

/// Round-robin chaotic iteration from bottom; the independent oracle for
/// monotone, expression-only systems. It deliberately has no widening, so interval
/// loops diverge; the round cap turns divergence into a BudgetError.
Solution kleene_solve(const EquationSystem& sys, std::span<const Unknown> roots,
                      std::uint64_t round_cap = 100'000);

enum class PrecisionClass { Equal, MorePrecise, LessPrecise, Incomparable };

const char* precision_class_name(PrecisionClass c);

struct PrecisionReport {
    std::uint64_t equal = 0;
    std::uint64_t more_precise = 0;
    std::uint64_t less_precise = 0;
    std::uint64_t incomparable = 0;

    struct Detail {
        Unknown unknown;
        PrecisionClass cls;
    };
    std::vector<Detail> detail;

    std::uint64_t total() const { return equal + more_precise + less_precise + incomparable; }
    double fraction(std::uint64_t n) const {
        std::uint64_t t = total();
        return t == 0 ? (n == 0 ? 0.0 : 1.0) : static_cast<double>(n) / static_cast<double>(t);
    }
    double equal_fraction() const { return total() == 0 ? 1.0 : fraction(equal); }
    double more_precise_fraction() const { return fraction(more_precise); }
    double less_precise_fraction() const { return fraction(less_precise); }
    double incomparable_fraction() const { return fraction(incomparable); }
};

/// Classify `other` per unknown relative to `base`: more precise means
/// other < base in the lattice order. Unknowns absent from one side count
/// as bottom there; bottom-vs-absent counts as equal.
PrecisionReport compare_precision(const Solution& base, const Solution& other);

}  // namespace fixlab

#endif  // FIXLAB_VERIFY_HPP
