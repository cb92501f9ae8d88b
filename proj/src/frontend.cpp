#include <map>

#include "fixlab/frontend.hpp"

namespace fixlab {

namespace {

using toy::Expr;
using toy::ExprPtr;
using toy::Stmt;
using toy::StmtList;

// Shared by every transfer closure of one built system; immutable after
// construction so closures stay pure.
using GlobalsMap = std::map<std::string, Unknown>;
using GlobalsPtr = std::shared_ptr<const GlobalsMap>;

const Env& as_env(const LatticeValue& v) {
    if (!std::holds_alternative<Env>(v))
        throw DomainError("expected an environment value, got " +
                          std::string(kind_name(kind_of(v))));
    return std::get<Env>(v);
}

Interval as_interval(const LatticeValue& v) {
    if (!std::holds_alternative<Interval>(v))
        throw DomainError("expected an interval value, got " +
                          std::string(kind_name(kind_of(v))));
    return std::get<Interval>(v);
}

RelOp negate(RelOp r) {
    switch (r) {
        case RelOp::Lt: return RelOp::Ge;
        case RelOp::Le: return RelOp::Gt;
        case RelOp::Eq: return RelOp::Ne;
        case RelOp::Ne: return RelOp::Eq;
        case RelOp::Ge: return RelOp::Lt;
        case RelOp::Gt: return RelOp::Le;
    }
    return r;
}

// k REL x  <=>  x mirror(REL) k
RelOp mirror(RelOp r) {
    switch (r) {
        case RelOp::Lt: return RelOp::Gt;
        case RelOp::Le: return RelOp::Ge;
        case RelOp::Ge: return RelOp::Le;
        case RelOp::Gt: return RelOp::Lt;
        default: return r;
    }
}

// Abstract evaluation of a toy expression. Program-global reads go through
// the context unconditionally, so a point's dependency set is fixed by its
// syntax rather than by the values flowing through it.
Interval eval_expr(const Expr& e, const Env& env, RhsContext& ctx, const GlobalsMap& globals) {
    return std::visit(
        [&](const auto& node) -> Interval {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Expr::IntLit>) {
                if (env.is_unreachable()) return Interval::empty();
                return Interval::constant(node.value);
            } else if constexpr (std::is_same_v<T, Expr::VarRef>) {
                auto git = globals.find(node.name);
                if (git != globals.end()) {
                    Interval v = as_interval(ctx.get(git->second));
                    return env.is_unreachable() ? Interval::empty() : v;
                }
                return env.get(node.name);
            } else {
                Interval l = eval_expr(*node.lhs, env, ctx, globals);
                Interval r = eval_expr(*node.rhs, env, ctx, globals);
                return abstract_binop(node.op, l, r);
            }
        },
        e.node);
}

// Branch refinement: a comparison of a local variable against a constant
// meets the variable's interval with the relation's interval; any other
// condition passes the environment through (emptiness still prunes).
Env refine(const Env& env, const toy::Cond& cond, bool taken, RhsContext& ctx,
           const GlobalsMap& globals) {
    Interval lv = eval_expr(*cond.lhs, env, ctx, globals);
    Interval rv = eval_expr(*cond.rhs, env, ctx, globals);
    if (env.is_unreachable()) return Env::unreachable();
    if (lv.is_empty() || rv.is_empty()) return Env::unreachable();

    RelOp rel = taken ? cond.rel : negate(cond.rel);
    const Expr::VarRef* var = nullptr;
    std::int64_t lit = 0;
    if (const auto* v = std::get_if<Expr::VarRef>(&cond.lhs->node)) {
        if (const auto* k = std::get_if<Expr::IntLit>(&cond.rhs->node)) {
            var = v;
            lit = k->value;
        }
    }
    if (!var) {
        if (const auto* k = std::get_if<Expr::IntLit>(&cond.lhs->node)) {
            if (const auto* v = std::get_if<Expr::VarRef>(&cond.rhs->node)) {
                var = v;
                lit = k->value;
                rel = mirror(rel);
            }
        }
    }
    if (!var || globals.count(var->name)) return env;
    Interval refined = env.get(var->name).meet(interval_from_rel(rel, lit));
    return env.with(var->name, refined);
}

struct FnInfo {
    Unknown start;  // Global, Env-valued: joined argument environments
    Unknown end;    // Local endpoint; env carries `ret`
    std::optional<std::string> param;
};

Env arg_env(const FnInfo& fn, const std::vector<ExprPtr>& args, const Env& caller,
            RhsContext& ctx, const GlobalsMap& globals) {
    Interval av = args.empty() ? Interval::top() : eval_expr(*args[0], caller, ctx, globals);
    if (caller.is_unreachable()) return Env::unreachable();
    if (!fn.param) return Env::reachable({});
    return Env::reachable({{*fn.param, av}});
}

struct Builder {
    const toy::Program& program;
    DemandStrategy strategy;
    BuiltSystem out;
    GlobalsPtr globals;
    std::map<std::string, FnInfo> fns;

    Unknown new_point(const std::string& fn_name, int& counter, RhsPtr e) {
        std::string label = fn_name + "." + std::to_string(counter++);
        Unknown u = out.system.declare(label, UnknownKind::Local, Env::unreachable());
        out.system.set_rhs(u, std::move(e));
        out.point_labels.push_back(std::move(label));
        return u;
    }

    // Walk a block, one point per statement. Returns the exit point, or
    // nullopt when the block ended in a return.
    std::optional<Unknown> walk(const std::string& fn_name, int& counter, const StmtList& body,
                                Unknown entry, std::vector<Unknown>& exits) {
        std::optional<Unknown> prev = entry;
        for (const Stmt& s : body) {
            if (!prev) {
                // dead code after a return still gets numbered points
                prev = new_point(fn_name, counter, rhs::constant(Env::unreachable()));
            }
            Unknown p = *prev;
            prev = std::visit(
                [&](const auto& node) -> std::optional<Unknown> {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, Stmt::Assign>) {
                        return point_assign(fn_name, counter, p, node);
                    } else if constexpr (std::is_same_v<T, Stmt::If>) {
                        return point_if(fn_name, counter, p, node, exits);
                    } else if constexpr (std::is_same_v<T, Stmt::While>) {
                        return point_while(fn_name, counter, p, node, exits);
                    } else if constexpr (std::is_same_v<T, Stmt::Call>) {
                        return point_call(fn_name, counter, p, node);
                    } else if constexpr (std::is_same_v<T, Stmt::Spawn>) {
                        return point_spawn(fn_name, counter, p, node);
                    } else {
                        static_assert(std::is_same_v<T, Stmt::Return>);
                        exits.push_back(point_return(fn_name, counter, p, node));
                        return std::nullopt;
                    }
                },
                s.node);
        }
        return prev;
    }

    Unknown point_assign(const std::string& fn_name, int& counter, Unknown prev,
                         const Stmt::Assign& a) {
        GlobalsPtr gm = globals;
        ExprPtr value = a.value;
        auto git = gm->find(a.var);
        if (git != gm->end()) {
            Unknown g = git->second;
            return new_point(fn_name, counter, rhs::transfer([gm, prev, g, value](RhsContext& ctx) {
                Env env = as_env(ctx.get(prev));
                Interval v = eval_expr(*value, env, ctx, *gm);
                ctx.set(g, v);
                return LatticeValue(env);
            }));
        }
        std::string var = a.var;
        return new_point(fn_name, counter, rhs::transfer([gm, prev, var, value](RhsContext& ctx) {
            Env env = as_env(ctx.get(prev));
            Interval v = eval_expr(*value, env, ctx, *gm);
            return LatticeValue(env.with(var, v));
        }));
    }

    Unknown point_if(const std::string& fn_name, int& counter, Unknown prev, const Stmt::If& s,
                     std::vector<Unknown>& exits) {
        GlobalsPtr gm = globals;
        toy::Cond cond = s.cond;
        Unknown then_entry =
            new_point(fn_name, counter, rhs::transfer([gm, prev, cond](RhsContext& ctx) {
                return LatticeValue(refine(as_env(ctx.get(prev)), cond, true, ctx, *gm));
            }));
        std::optional<Unknown> then_exit = walk(fn_name, counter, s.then_body, then_entry, exits);
        Unknown else_entry =
            new_point(fn_name, counter, rhs::transfer([gm, prev, cond](RhsContext& ctx) {
                return LatticeValue(refine(as_env(ctx.get(prev)), cond, false, ctx, *gm));
            }));
        std::optional<Unknown> else_exit = walk(fn_name, counter, s.else_body, else_entry, exits);

        if (then_exit && else_exit)
            return new_point(fn_name, counter,
                             rhs::join2(rhs::get(*then_exit), rhs::get(*else_exit)));
        if (then_exit) return new_point(fn_name, counter, rhs::get(*then_exit));
        if (else_exit) return new_point(fn_name, counter, rhs::get(*else_exit));
        return new_point(fn_name, counter, rhs::constant(Env::unreachable()));
    }

    Unknown point_while(const std::string& fn_name, int& counter, Unknown prev,
                        const Stmt::While& s, std::vector<Unknown>& exits) {
        GlobalsPtr gm = globals;
        toy::Cond cond = s.cond;
        // The loop head joins the entry env with the body's exit env; the
        // body exit unknown only exists after walking the body, hence the
        // cell (filled once here, immutable during solving).
        auto body_exit_cell = std::make_shared<Unknown>();
        Unknown head =
            new_point(fn_name, counter, rhs::transfer([prev, body_exit_cell](RhsContext& ctx) {
                Env a = as_env(ctx.get(prev));
                Env b = as_env(ctx.get(*body_exit_cell));
                return LatticeValue(a.join(b));
            }));
        Unknown body_entry =
            new_point(fn_name, counter, rhs::transfer([gm, head, cond](RhsContext& ctx) {
                return LatticeValue(refine(as_env(ctx.get(head)), cond, true, ctx, *gm));
            }));
        std::optional<Unknown> body_exit = walk(fn_name, counter, s.body, body_entry, exits);
        *body_exit_cell = body_exit ? *body_exit
                                    : new_point(fn_name, counter,
                                                rhs::constant(Env::unreachable()));
        return new_point(fn_name, counter, rhs::transfer([gm, head, cond](RhsContext& ctx) {
            return LatticeValue(refine(as_env(ctx.get(head)), cond, false, ctx, *gm));
        }));
    }

    Unknown point_call(const std::string& fn_name, int& counter, Unknown prev,
                       const Stmt::Call& s) {
        GlobalsPtr gm = globals;
        const FnInfo fn = fns.at(s.callee);
        std::vector<ExprPtr> args = s.args;
        bool demand_end = strategy == DemandStrategy::ThreadsAndFunctions;
        std::optional<Unknown> assign_global;
        std::optional<std::string> assign_local;
        if (s.assign_to) {
            auto git = gm->find(*s.assign_to);
            if (git != gm->end())
                assign_global = git->second;
            else
                assign_local = *s.assign_to;
        }
        return new_point(
            fn_name, counter,
            rhs::transfer(
                [gm, prev, fn, args, demand_end, assign_global, assign_local](RhsContext& ctx) {
                    Env env = as_env(ctx.get(prev));
                    ctx.set(fn.start, arg_env(fn, args, env, ctx, *gm));
                    if (demand_end) ctx.demand(fn.end);
                    Env ret = as_env(ctx.get(fn.end));
                    if (env.is_unreachable() || ret.is_unreachable())
                        return LatticeValue(Env::unreachable());
                    if (assign_global) {
                        ctx.set(*assign_global, ret.get("ret"));
                        return LatticeValue(env);
                    }
                    if (assign_local) return LatticeValue(env.with(*assign_local, ret.get("ret")));
                    return LatticeValue(env);
                }));
    }

    Unknown point_spawn(const std::string& fn_name, int& counter, Unknown prev,
                        const Stmt::Spawn& s) {
        GlobalsPtr gm = globals;
        const FnInfo fn = fns.at(s.callee);
        std::vector<ExprPtr> args = s.args;
        bool use_demand = strategy != DemandStrategy::None;
        return new_point(fn_name, counter,
                         rhs::transfer([gm, prev, fn, args, use_demand](RhsContext& ctx) {
                             Env env = as_env(ctx.get(prev));
                             ctx.set(fn.start, arg_env(fn, args, env, ctx, *gm));
                             if (use_demand)
                                 ctx.demand(fn.end);
                             else
                                 (void)ctx.get(fn.end);  // force exploration, drop the value
                             return LatticeValue(env);
                         }));
    }

    Unknown point_return(const std::string& fn_name, int& counter, Unknown prev,
                         const Stmt::Return& s) {
        GlobalsPtr gm = globals;
        ExprPtr value = s.value;
        return new_point(fn_name, counter, rhs::transfer([gm, prev, value](RhsContext& ctx) {
            Env env = as_env(ctx.get(prev));
            Interval v = eval_expr(*value, env, ctx, *gm);
            return LatticeValue(env.with("ret", v));
        }));
    }

    void build_function(const toy::Function& f) {
        const FnInfo& info = fns.at(f.name);
        int counter = 0;
        Unknown entry;
        if (f.name == "main") {
            entry = new_point(f.name, counter, rhs::constant(Env::reachable({})));
        } else {
            entry = new_point(f.name, counter, rhs::get(info.start));
        }
        std::vector<Unknown> exits;
        std::optional<Unknown> fall = walk(f.name, counter, f.body, entry, exits);
        if (fall) exits.push_back(*fall);

        RhsPtr end_rhs;
        for (Unknown e : exits) {
            RhsPtr g = rhs::get(e);
            end_rhs = end_rhs ? rhs::join2(std::move(end_rhs), std::move(g)) : std::move(g);
        }
        if (!end_rhs) end_rhs = rhs::constant(Env::unreachable());
        out.system.set_rhs(info.end, std::move(end_rhs));
    }

    BuiltSystem build() {
        GlobalsMap gmap;
        for (const std::string& g : program.globals) {
            Unknown u = out.system.declare(g, UnknownKind::Global, Interval::empty());
            gmap.emplace(g, u);
            out.global_labels.push_back(g);
        }
        globals = std::make_shared<const GlobalsMap>(std::move(gmap));

        for (const toy::Function& f : program.functions) {
            FnInfo info;
            info.start =
                out.system.declare(f.name + ".start", UnknownKind::Global, Env::unreachable());
            info.end = out.system.declare(f.name + ".end", UnknownKind::Local, Env::unreachable());
            if (!f.params.empty()) info.param = f.params[0];
            fns.emplace(f.name, info);
            out.point_labels.push_back(f.name + ".end");
        }
        for (const toy::Function& f : program.functions) build_function(f);
        out.roots.push_back(fns.at("main").end);
        return std::move(out);
    }
};

}  // namespace

BuiltSystem build_equations(const toy::Program& program, DemandStrategy strategy) {
    Builder builder{program, strategy, {}, {}, {}};
    return builder.build();
}

const char* solver_choice_name(SolverChoice c) {
    switch (c) {
        case SolverChoice::Seq: return "seq";
        case SolverChoice::Immediate: return "immediate";
        case SolverChoice::Independent: return "independent";
    }
    return "?";
}

AnalysisReport analyze(const toy::Program& program, SolverChoice solver, unsigned workers,
                       DemandStrategy strategy, const SolverConfig& config) {
    AnalysisReport report;
    auto built = std::make_shared<BuiltSystem>(build_equations(program, strategy));
    report.built = built;

    switch (solver) {
        case SolverChoice::Seq: {
            SeqResult r = solve(built->system, built->roots, config);
            report.solution = std::move(r.solution);
            report.stats = r.stats;
            break;
        }
        case SolverChoice::Immediate: {
            ImmediateResult r = solve_immediate(built->system, built->roots, workers, config);
            report.solution = std::move(r.solution);
            report.stats = r.stats;
            report.immediate = std::move(r.immediate);
            break;
        }
        case SolverChoice::Independent: {
            IndependentResult r = solve_independent(built->system, built->roots, workers, config);
            report.solution = std::move(r.solution);
            report.stats = r.stats;
            report.independent = std::move(r.independent);
            report.verification = std::move(r.merged_verification);
            return report;  // verification already ran during the merge
        }
    }
    report.verification = verify_solution(built->system, report.solution);
    return report;
}

}  // namespace fixlab
