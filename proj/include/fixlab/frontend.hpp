#ifndef FIXLAB_FRONTEND_HPP
#define FIXLAB_FRONTEND_HPP

#include <memory>
#include <optional>

#include "fixlab/solver_immediate.hpp"
#include "fixlab/solver_independent.hpp"
#include "fixlab/toy_ast.hpp"

namespace fixlab {

/// Equation system for a toy program: one Env-valued Local unknown per
/// program point plus `f.end` endpoints, one Env-valued Global per function
/// start (call sites contribute argument environments), and one flow-
/// insensitive Interval-valued Global per program global.
struct BuiltSystem {
    EquationSystem system;
    std::vector<Unknown> roots;               // {main.end}
    std::vector<std::string> point_labels;    // creation order, stable per source
    std::vector<std::string> global_labels;   // declared program globals
};

BuiltSystem build_equations(const toy::Program& program, DemandStrategy strategy);

enum class SolverChoice { Seq, Immediate, Independent };

const char* solver_choice_name(SolverChoice c);

struct AnalysisReport {
    std::shared_ptr<const BuiltSystem> built;
    Solution solution;
    SolveStats stats;
    std::optional<ImmediateStats> immediate;
    std::optional<IndependentStats> independent;
    VerificationResult verification;
};

/// Build equations for the program, run the chosen solver, verify the
/// solution, and return per-point environments and statistics.
AnalysisReport analyze(const toy::Program& program, SolverChoice solver, unsigned workers,
                       DemandStrategy strategy, const SolverConfig& config = {});

}  // namespace fixlab

#endif  // FIXLAB_FRONTEND_HPP
