#include <map>

#include "fixlab/report_json.hpp"

namespace fixlab {

using nlohmann::json;

json solution_to_json(const EquationSystem& sys, const Solution& sol) {
    std::map<std::string, std::string> ordered;
    for (const auto& [id, value] : sol) ordered.emplace(sys.label(Unknown{id}), to_string(value));
    json out = json::object();
    for (auto& [label, value] : ordered) out[label] = value;
    return out;
}

json stats_to_json(const SolveStats& stats, const ImmediateStats* immediate,
                   const IndependentStats* independent) {
    json out{
        {"wall_time_ms", stats.wall_time_ms},
        {"rhs_evaluations", stats.rhs_evaluations},
        {"unknowns_reached", stats.unknowns_reached},
        {"destabilizations", stats.destabilizations},
        {"widenings", stats.widenings},
        {"termination_clean", stats.termination_clean},
    };
    if (immediate) {
        out["immediate"] = json{
            {"cas_attempts", immediate->cas_attempts},
            {"cas_retries", immediate->cas_retries},
            {"retry_ratio", immediate->retry_ratio()},
            {"claims_skipped", immediate->claims_skipped},
            {"per_worker_rhs", immediate->per_worker_rhs},
        };
    }
    if (independent) {
        out["independent"] = json{
            {"tasks_created", independent->tasks_created},
            {"revivals", independent->revivals},
            {"publishes", independent->publishes},
            {"updates_delivered", independent->updates_delivered},
            {"duplicate_work_ratio", independent->duplicate_work_ratio},
            {"fixpoint_report", independent->fixpoint_report},
        };
    }
    return out;
}

json verification_to_json(const EquationSystem& sys, const VerificationResult& vr) {
    json violations = json::array();
    for (const Violation& v : vr.violations) {
        violations.push_back(json{
            {"unknown", sys.label(v.unknown)},
            {"kind", violation_kind_name(v.kind)},
            {"stored", to_string(v.stored)},
            {"required", to_string(v.required)},
        });
    }
    return json{{"ok", vr.ok}, {"violations", violations}};
}

json precision_to_json(const PrecisionReport& report,
                       const std::function<std::string(Unknown)>& label, bool with_detail) {
    auto bucket = [&](std::uint64_t n) {
        return json{{"count", n}, {"fraction", report.fraction(n)}};
    };
    json out{
        {"total", report.total()},
        {"equal", bucket(report.equal)},
        {"more_precise", bucket(report.more_precise)},
        {"less_precise", bucket(report.less_precise)},
        {"incomparable", bucket(report.incomparable)},
    };
    if (report.total() == 0) out["equal"]["fraction"] = 1.0;
    if (with_detail) {
        json detail = json::array();
        for (const auto& d : report.detail)
            detail.push_back(json{{"unknown", label(d.unknown)},
                                  {"class", precision_class_name(d.cls)}});
        out["detail"] = detail;
    }
    return out;
}

}  // namespace fixlab
