#ifndef FIXLAB_REPORT_JSON_HPP
#define FIXLAB_REPORT_JSON_HPP

#include <optional>
#include <string>

#include "json.hpp"

#include "fixlab/solver_immediate.hpp"
#include "fixlab/solver_independent.hpp"
#include "fixlab/verify.hpp"

namespace fixlab {

/// JSON result envelope pieces shared by the CLI and its tests.
nlohmann::json solution_to_json(const EquationSystem& sys, const Solution& sol);
nlohmann::json stats_to_json(const SolveStats& stats, const ImmediateStats* immediate,
                             const IndependentStats* independent);
nlohmann::json verification_to_json(const EquationSystem& sys, const VerificationResult& vr);
nlohmann::json precision_to_json(const PrecisionReport& report,
                                 const std::function<std::string(Unknown)>& label,
                                 bool with_detail);

}  // namespace fixlab

#endif  // FIXLAB_REPORT_JSON_HPP
