// fixlab: solve equation-system files, analyze toy programs, compare
// solution precision, and run benchmark sweeps.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fixlab/frontend.hpp"
#include "fixlab/report_json.hpp"
#include "fixlab/thread_stack.hpp"

namespace {

using nlohmann::json;
using namespace fixlab;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitVerification = 3;
constexpr int kExitBudget = 4;
constexpr const char* kVersion = "0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AnalysisError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

unsigned default_workers() {
    if (const char* env = std::getenv("FIXLAB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

SolverChoice parse_solver(const std::string& name) {
    if (name == "seq") return SolverChoice::Seq;
    if (name == "immediate") return SolverChoice::Immediate;
    if (name == "independent") return SolverChoice::Independent;
    throw AnalysisError("unknown solver '" + name + "' (expected seq|immediate|independent)");
}

DemandStrategy parse_demand(const std::string& name) {
    if (name == "threads") return DemandStrategy::ThreadsOnly;
    if (name == "functions") return DemandStrategy::ThreadsAndFunctions;
    if (name == "none") return DemandStrategy::None;
    throw AnalysisError("unknown demand strategy '" + name + "' (expected threads|functions|none)");
}

struct RunOutput {
    Solution solution;
    SolveStats stats;
    std::optional<ImmediateStats> immediate;
    std::optional<IndependentStats> independent;
    VerificationResult verification;
};

RunOutput run_system(const EquationSystem& sys, std::span<const Unknown> roots,
                     SolverChoice solver, unsigned workers, const SolverConfig& config) {
    RunOutput out;
    switch (solver) {
        case SolverChoice::Seq: {
            SeqResult r = solve(sys, roots, config);
            out.solution = std::move(r.solution);
            out.stats = r.stats;
            out.verification = verify_solution(sys, out.solution);
            break;
        }
        case SolverChoice::Immediate: {
            ImmediateResult r = solve_immediate(sys, roots, workers, config);
            out.solution = std::move(r.solution);
            out.stats = r.stats;
            out.immediate = std::move(r.immediate);
            out.verification = verify_solution(sys, out.solution);
            break;
        }
        case SolverChoice::Independent: {
            IndependentResult r = solve_independent(sys, roots, workers, config);
            out.solution = std::move(r.solution);
            out.stats = r.stats;
            out.independent = std::move(r.independent);
            out.verification = std::move(r.merged_verification);
            break;
        }
    }
    return out;
}

json make_meta(const std::string& command, const std::string& input,
               const std::string& system_hash, const std::string& lattice,
               const std::string& solver, unsigned workers, const std::string& demand,
               const SolverConfig& cfg) {
    json meta{
        {"tool", "fixlab"},
        {"version", kVersion},
        {"command", command},
        {"input", input},
        {"system_hash", system_hash},
        {"lattice", lattice},
        {"solver", solver},
        {"workers", workers},
        {"seed", cfg.seed},
        {"widen_delay", cfg.widen_delay},
        {"eval_budget", cfg.eval_budget},
    };
    if (demand.empty())
        meta["demand"] = nullptr;
    else
        meta["demand"] = demand;
    return meta;
}

void print_text(const EquationSystem& sys, const RunOutput& out) {
    json sol = solution_to_json(sys, out.solution);
    for (auto it = sol.begin(); it != sol.end(); ++it)
        std::cout << it.key() << " = " << it.value().get<std::string>() << "\n";
    std::cout << "-- stats --\n";
    std::cout << "rhs_evaluations: " << out.stats.rhs_evaluations << "\n";
    std::cout << "unknowns_reached: " << out.stats.unknowns_reached << "\n";
    std::cout << "destabilizations: " << out.stats.destabilizations << "\n";
    std::cout << "widenings: " << out.stats.widenings << "\n";
    std::cout << "wall_time_ms: " << out.stats.wall_time_ms << "\n";
    if (out.immediate) {
        std::cout << "cas_attempts: " << out.immediate->cas_attempts << "\n";
        std::cout << "cas_retries: " << out.immediate->cas_retries << "\n";
        std::cout << "claims_skipped: " << out.immediate->claims_skipped << "\n";
    }
    if (out.independent) {
        std::cout << "tasks_created: " << out.independent->tasks_created << "\n";
        std::cout << "revivals: " << out.independent->revivals << "\n";
        std::cout << "publishes: " << out.independent->publishes << "\n";
        std::cout << "duplicate_work_ratio: " << out.independent->duplicate_work_ratio << "\n";
    }
    std::cout << "verification: " << (out.verification.ok ? "ok" : "FAILED") << "\n";
    for (const Violation& v : out.verification.violations)
        std::cout << "  violation " << violation_kind_name(v.kind) << " at "
                  << sys.label(v.unknown) << ": stored " << to_string(v.stored) << ", required "
                  << to_string(v.required) << "\n";
}

int finish_run(const EquationSystem& sys, const RunOutput& out, const json& meta,
               const std::string& format) {
    if (format == "json") {
        json envelope{
            {"meta", meta},
            {"solution", solution_to_json(sys, out.solution)},
            {"stats", stats_to_json(out.stats, out.immediate ? &*out.immediate : nullptr,
                                    out.independent ? &*out.independent : nullptr)},
            {"verification", verification_to_json(sys, out.verification)},
        };
        std::cout << envelope.dump(2) << "\n";
    } else {
        print_text(sys, out);
    }
    return out.verification.ok ? kExitOk : kExitVerification;
}

std::string lattice_name_of(const EquationSystem& sys) {
    if (sys.size() == 0) return "interval";
    bool mixed = false;
    ValueKind k = kind_of(sys.bottom_of(Unknown{0}));
    for (std::uint32_t i = 1; i < sys.size(); i++)
        if (kind_of(sys.bottom_of(Unknown{i})) != k) mixed = true;
    return mixed ? "mixed" : kind_name(k);
}

// ---- solve ----

struct SolveArgs {
    std::string file;
    std::string solver = "seq";
    unsigned workers = 0;
    std::vector<std::string> roots;
    std::uint64_t seed = 0;
    std::uint32_t widen_delay = 3;
    std::uint64_t budget = 10'000'000;
    std::string format = "text";
};

int cmd_solve(const SolveArgs& args) {
    std::string text = read_file(args.file);
    EquationSystem sys = parse_system(text);

    std::vector<Unknown> roots;
    if (args.roots.empty()) {
        for (Unknown u : sys.all_unknowns()) {
            if (!sys.is_global(u)) {
                roots.push_back(u);
                break;
            }
        }
        if (roots.empty()) throw AnalysisError("system contains no local unknown to solve");
    } else {
        for (const std::string& label : args.roots) {
            auto u = sys.table().find(label);
            if (!u) throw AnalysisError("unknown root '" + label + "'");
            roots.push_back(*u);
        }
    }

    SolverConfig cfg;
    cfg.seed = args.seed;
    cfg.widen_delay = args.widen_delay;
    cfg.eval_budget = args.budget;

    RunOutput out;
    run_with_stack([&] {
        out = run_system(sys, roots, parse_solver(args.solver), args.workers, cfg);
    });

    json meta = make_meta("solve", args.file, system_fingerprint(sys), lattice_name_of(sys),
                          args.solver, args.workers, "", cfg);
    return finish_run(sys, out, meta, args.format);
}

// ---- analyze ----

struct AnalyzeArgs {
    std::string file;
    std::string solver = "seq";
    unsigned workers = 0;
    std::string demand = "threads";
    std::uint64_t seed = 0;
    std::uint32_t widen_delay = 3;
    std::uint64_t budget = 10'000'000;
    std::string format = "text";
};

int cmd_analyze(const AnalyzeArgs& args) {
    std::string text = read_file(args.file);
    toy::Program program = toy::parse_program(text);

    SolverConfig cfg;
    cfg.seed = args.seed;
    cfg.widen_delay = args.widen_delay;
    cfg.eval_budget = args.budget;
    cfg.demand = parse_demand(args.demand);

    AnalysisReport report;
    run_with_stack([&] {
        report = analyze(program, parse_solver(args.solver), args.workers, cfg.demand, cfg);
    });

    RunOutput out;
    out.solution = std::move(report.solution);
    out.stats = report.stats;
    out.immediate = std::move(report.immediate);
    out.independent = std::move(report.independent);
    out.verification = std::move(report.verification);

    json meta = make_meta("analyze", args.file, text_fingerprint(text), "mixed", args.solver,
                          args.workers, args.demand, cfg);
    return finish_run(report.built->system, out, meta, args.format);
}

// ---- compare ----

ValueKind guess_kind(const std::string& a, const std::string& b) {
    for (const std::string* s : {&a, &b}) {
        if (s->empty()) continue;
        if ((*s)[0] == '[') return ValueKind::Interval;
        if ((*s)[0] == '{') return ValueKind::Set;
        if (s->rfind("env", 0) == 0 || *s == "unreachable") return ValueKind::Env;
    }
    if (a == "top" || b == "top" || a == "bot" || b == "bot") return ValueKind::Flat;
    return ValueKind::Flat;
}

int cmd_compare(const std::string& file_a, const std::string& file_b, bool detail,
                const std::string& format) {
    json a = json::parse(read_file(file_a));
    json b = json::parse(read_file(file_b));
    for (const json* doc : {&a, &b}) {
        if (!doc->contains("meta") || !doc->contains("solution"))
            throw AnalysisError("input is not a fixlab result envelope");
    }
    if (a["meta"]["system_hash"] != b["meta"]["system_hash"])
        throw AnalysisError("result envelopes describe different systems");

    // Rebuild comparable solutions over a shared label table.
    UnknownTable labels;
    Solution sol_a, sol_b;
    auto labels_of = [](const json& doc) {
        std::vector<std::string> out;
        for (auto it = doc["solution"].begin(); it != doc["solution"].end(); ++it)
            out.push_back(it.key());
        return out;
    };
    for (const std::string& l : labels_of(a)) labels.intern(l, UnknownKind::Local);
    for (const std::string& l : labels_of(b)) labels.intern(l, UnknownKind::Local);
    for (std::uint32_t i = 0; i < labels.size(); i++) {
        Unknown u{i};
        const std::string& label = labels.label(u);
        bool in_a = a["solution"].contains(label);
        bool in_b = b["solution"].contains(label);
        std::string va = in_a ? a["solution"][label].get<std::string>() : "";
        std::string vb = in_b ? b["solution"][label].get<std::string>() : "";
        ValueKind kind = guess_kind(va, vb);
        if (in_a) sol_a.insert(u, parse_value(va, kind));
        if (in_b) sol_b.insert(u, parse_value(vb, kind));
    }

    PrecisionReport report = compare_precision(sol_a, sol_b);
    if (format == "json") {
        json out{
            {"meta",
             {{"tool", "fixlab"},
              {"version", kVersion},
              {"command", "compare"},
              {"base", file_a},
              {"other", file_b},
              {"system_hash", a["meta"]["system_hash"]}}},
            {"precision", precision_to_json(
                              report, [&](Unknown u) { return labels.label(u); }, detail)},
        };
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "compared " << report.total() << " unknowns\n";
        std::cout << "equal:        " << report.equal << " (" << report.equal_fraction() << ")\n";
        std::cout << "more_precise: " << report.more_precise << " ("
                  << report.more_precise_fraction() << ")\n";
        std::cout << "less_precise: " << report.less_precise << " ("
                  << report.less_precise_fraction() << ")\n";
        std::cout << "incomparable: " << report.incomparable << " ("
                  << report.incomparable_fraction() << ")\n";
        if (detail) {
            for (const auto& d : report.detail)
                if (d.cls != PrecisionClass::Equal)
                    std::cout << "  " << labels.label(d.unknown) << ": "
                              << precision_class_name(d.cls) << "\n";
        }
    }
    return kExitOk;
}

// ---- bench ----

struct BenchArgs {
    std::string suite;
    std::vector<std::string> solvers{"seq", "immediate", "independent"};
    std::vector<unsigned> workers{1, 2, 4};
    std::string demand = "threads";
    unsigned repeat = 3;
    std::string csv;
    std::uint64_t seed = 0;
};

struct BenchRow {
    std::string file;
    std::string solver;
    unsigned workers;
    std::string demand;
    unsigned run_index;
    double wall_ms;
    bool verified;
    std::uint64_t rhs_evaluations;
    double retry_ratio;  // immediate only; NaN elsewhere
};

int cmd_bench(const BenchArgs& args) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.suite)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension();
        if (ext == ".eqs" || ext == ".toy") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw AnalysisError("no .eqs or .toy files in '" + args.suite + "'");

    std::vector<BenchRow> rows;
    for (const fs::path& file : files) {
        bool is_toy = file.extension() == ".toy";
        std::string text = read_file(file.string());
        for (const std::string& solver_name : args.solvers) {
            SolverChoice solver = parse_solver(solver_name);
            std::vector<unsigned> worker_counts =
                solver == SolverChoice::Seq ? std::vector<unsigned>{1} : args.workers;
            for (unsigned workers : worker_counts) {
                for (unsigned run = 0; run < args.repeat; run++) {
                    SolverConfig cfg;
                    cfg.seed = args.seed;
                    cfg.demand = parse_demand(args.demand);
                    BenchRow row{file.filename().string(),
                                 solver_name,
                                 workers,
                                 is_toy ? args.demand : "",
                                 run,
                                 0.0,
                                 false,
                                 0,
                                 std::numeric_limits<double>::quiet_NaN()};
                    RunOutput out;
                    run_with_stack([&] {
                        if (is_toy) {
                            toy::Program program = toy::parse_program(text);
                            AnalysisReport r = analyze(program, solver, workers, cfg.demand, cfg);
                            out.stats = r.stats;
                            out.verification = std::move(r.verification);
                            out.immediate = std::move(r.immediate);
                        } else {
                            EquationSystem sys = parse_system(text);
                            std::vector<Unknown> roots;
                            for (Unknown u : sys.all_unknowns())
                                if (!sys.is_global(u)) {
                                    roots.push_back(u);
                                    break;
                                }
                            out = run_system(sys, roots, solver, workers, cfg);
                        }
                    });
                    row.wall_ms = out.stats.wall_time_ms;
                    row.verified = out.verification.ok;
                    row.rhs_evaluations = out.stats.rhs_evaluations;
                    if (out.immediate) row.retry_ratio = out.immediate->retry_ratio();
                    rows.push_back(row);
                }
            }
        }
    }

    // Per-solver one-worker baseline (median over repeats) for the speedup
    // column, mirroring per-approach normalization.
    auto median_baseline = [&](const BenchRow& row) -> double {
        std::vector<double> times;
        for (const BenchRow& r : rows)
            if (r.file == row.file && r.solver == row.solver && r.demand == row.demand &&
                r.workers == 1)
                times.push_back(r.wall_ms);
        if (times.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
    };

    std::ostream* out = &std::cout;
    std::ofstream csv_file;
    if (!args.csv.empty()) {
        csv_file.open(args.csv);
        if (!csv_file) throw AnalysisError("cannot write '" + args.csv + "'");
        out = &csv_file;
    }
    *out << "file,solver,workers,demand,run_index,wall_time_ms,verified,rhs_evaluations,"
            "retry_ratio,speedup_vs_1w\n";
    for (const BenchRow& r : rows) {
        double base = median_baseline(r);
        *out << r.file << "," << r.solver << "," << r.workers << "," << r.demand << ","
             << r.run_index << "," << r.wall_ms << "," << (r.verified ? "true" : "false") << ","
             << r.rhs_evaluations << ",";
        if (std::isnan(r.retry_ratio))
            *out << "";
        else
            *out << r.retry_ratio;
        *out << ",";
        if (std::isnan(base) || r.wall_ms <= 0.0)
            *out << "";
        else
            *out << base / r.wall_ms;
        *out << "\n";
    }
    if (!args.csv.empty())
        std::cerr << "wrote " << rows.size() << " rows to " << args.csv << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixlab: demand-driven fixpoint engine for side-effecting constraint systems"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve_cmd = app.add_subcommand("solve", "solve an equation-system file");
    solve_cmd->add_option("file", solve_args.file, "input .eqs file")->required();
    solve_cmd->add_option("--solver", solve_args.solver, "seq|immediate|independent");
    solve_cmd->add_option("--workers", solve_args.workers, "worker threads (parallel solvers)");
    solve_cmd->add_option("--root", solve_args.roots,
                          "root unknown label (repeatable; default: first local)");
    solve_cmd->add_option("--seed", solve_args.seed, "scheduler perturbation seed");
    solve_cmd->add_option("--widen-delay", solve_args.widen_delay,
                          "growing side updates before widening");
    solve_cmd->add_option("--budget", solve_args.budget, "rhs evaluation budget");
    solve_cmd->add_option("--out", solve_args.format, "json|text")
        ->check(CLI::IsMember({"json", "text"}));

    AnalyzeArgs analyze_args;
    auto* analyze_cmd = app.add_subcommand("analyze", "analyze a toy program");
    analyze_cmd->add_option("file", analyze_args.file, "input .toy file")->required();
    analyze_cmd->add_option("--solver", analyze_args.solver, "seq|immediate|independent");
    analyze_cmd->add_option("--workers", analyze_args.workers, "worker threads");
    analyze_cmd->add_option("--demand", analyze_args.demand, "threads|functions|none")
        ->check(CLI::IsMember({"threads", "functions", "none"}));
    analyze_cmd->add_option("--seed", analyze_args.seed, "scheduler perturbation seed");
    analyze_cmd->add_option("--widen-delay", analyze_args.widen_delay,
                            "growing side updates before widening");
    analyze_cmd->add_option("--budget", analyze_args.budget, "rhs evaluation budget");
    analyze_cmd->add_option("--out", analyze_args.format, "json|text")
        ->check(CLI::IsMember({"json", "text"}));

    std::string cmp_a, cmp_b, cmp_format = "text";
    bool cmp_detail = false;
    auto* compare_cmd = app.add_subcommand("compare", "compare two result envelopes");
    compare_cmd->add_option("base", cmp_a, "baseline result json")->required();
    compare_cmd->add_option("other", cmp_b, "other result json")->required();
    compare_cmd->add_flag("--detail", cmp_detail, "list non-equal unknowns");
    compare_cmd->add_option("--out", cmp_format, "json|text")
        ->check(CLI::IsMember({"json", "text"}));

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "benchmark a suite directory");
    bench_cmd->add_option("--suite", bench_args.suite, "directory of .eqs/.toy files")
        ->required();
    bench_cmd->add_option("--solvers", bench_args.solvers, "solvers to run")->delimiter(',');
    bench_cmd->add_option("--workers", bench_args.workers, "worker counts")->delimiter(',');
    bench_cmd->add_option("--demand", bench_args.demand, "threads|functions|none")
        ->check(CLI::IsMember({"threads", "functions", "none"}));
    bench_cmd->add_option("--repeat", bench_args.repeat, "runs per configuration");
    bench_cmd->add_option("--csv", bench_args.csv, "write rows to this file");
    bench_cmd->add_option("--seed", bench_args.seed, "scheduler perturbation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitInput;
    }

    try {
        if (solve_cmd->parsed()) {
            if (solve_cmd->count("--workers") == 0) solve_args.workers = default_workers();
            if (solve_args.workers < 1) throw AnalysisError("--workers must be at least 1");
            return cmd_solve(solve_args);
        }
        if (analyze_cmd->parsed()) {
            if (analyze_cmd->count("--workers") == 0) analyze_args.workers = default_workers();
            if (analyze_args.workers < 1) throw AnalysisError("--workers must be at least 1");
            return cmd_analyze(analyze_args);
        }
        if (compare_cmd->parsed()) return cmd_compare(cmp_a, cmp_b, cmp_detail, cmp_format);
        if (bench_cmd->parsed()) {
            if (bench_args.repeat < 1) throw AnalysisError("--repeat must be at least 1");
            for (unsigned w : bench_args.workers)
                if (w < 1) throw AnalysisError("--workers entries must be at least 1");
            return cmd_bench(bench_args);
        }
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
