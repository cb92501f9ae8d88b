#include "fixlab/rhs.hpp"

namespace fixlab {

namespace rhs {

namespace {
RhsPtr make(RhsExpr::Node node) { return std::make_shared<const RhsExpr>(RhsExpr{std::move(node)}); }
}  // namespace

RhsPtr constant(LatticeValue v) { return make(RhsExpr::Const{std::move(v)}); }
RhsPtr get(Unknown u) { return make(RhsExpr::Get{u}); }
RhsPtr binop(ArithOp op, RhsPtr lhs, RhsPtr rhs) {
    return make(RhsExpr::Binop{op, std::move(lhs), std::move(rhs)});
}
RhsPtr join2(RhsPtr lhs, RhsPtr rhs) { return make(RhsExpr::JoinE{std::move(lhs), std::move(rhs)}); }
RhsPtr set(Unknown target, RhsPtr value) { return make(RhsExpr::SetE{target, std::move(value)}); }
RhsPtr demand(Unknown u) { return make(RhsExpr::DemandE{u}); }
RhsPtr let(std::string name, RhsPtr bound, RhsPtr body) {
    return make(RhsExpr::Let{std::move(name), std::move(bound), std::move(body)});
}
RhsPtr var(std::string name) { return make(RhsExpr::Var{std::move(name)}); }
RhsPtr seq(std::vector<RhsPtr> items) { return make(RhsExpr::Seq{std::move(items)}); }
RhsPtr transfer(std::function<LatticeValue(RhsContext&)> fn) {
    return make(RhsExpr::Transfer{std::move(fn)});
}

}  // namespace rhs

namespace {

struct Scope {
    std::vector<std::pair<const std::string*, LatticeValue>> frames;

    const LatticeValue* lookup(const std::string& name) const {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
            if (*it->first == name) return &it->second;
        }
        return nullptr;
    }
};

LatticeValue eval(const RhsExpr& e, RhsContext& ctx, Scope& scope) {
    return std::visit(
        [&](const auto& node) -> LatticeValue {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, RhsExpr::Const>) {
                return node.value;
            } else if constexpr (std::is_same_v<T, RhsExpr::Get>) {
                return ctx.get(node.target);
            } else if constexpr (std::is_same_v<T, RhsExpr::Binop>) {
                LatticeValue l = eval(*node.lhs, ctx, scope);
                LatticeValue r = eval(*node.rhs, ctx, scope);
                return binop(node.op, l, r);
            } else if constexpr (std::is_same_v<T, RhsExpr::JoinE>) {
                LatticeValue l = eval(*node.lhs, ctx, scope);
                LatticeValue r = eval(*node.rhs, ctx, scope);
                return join(l, r);
            } else if constexpr (std::is_same_v<T, RhsExpr::SetE>) {
                LatticeValue v = eval(*node.value, ctx, scope);
                ctx.set(node.target, v);
                return v;
            } else if constexpr (std::is_same_v<T, RhsExpr::DemandE>) {
                ctx.demand(node.target);
                return bottom_value(ValueKind::Interval);
            } else if constexpr (std::is_same_v<T, RhsExpr::Let>) {
                LatticeValue bound = eval(*node.bound, ctx, scope);
                scope.frames.emplace_back(&node.name, std::move(bound));
                LatticeValue result = eval(*node.body, ctx, scope);
                scope.frames.pop_back();
                return result;
            } else if constexpr (std::is_same_v<T, RhsExpr::Var>) {
                const LatticeValue* v = scope.lookup(node.name);
                if (!v) throw EvalError("unbound let variable '" + node.name + "'");
                return *v;
            } else if constexpr (std::is_same_v<T, RhsExpr::Seq>) {
                if (node.items.empty()) throw EvalError("empty seq expression");
                LatticeValue last = bottom_value(ValueKind::Interval);
                for (const auto& item : node.items) last = eval(*item, ctx, scope);
                return last;
            } else {
                static_assert(std::is_same_v<T, RhsExpr::Transfer>);
                return node.fn(ctx);
            }
        },
        e.node);
}

}  // namespace

LatticeValue eval_rhs(const RhsExpr& e, RhsContext& ctx) {
    Scope scope;
    return eval(e, ctx, scope);
}

bool is_expression_only(const RhsExpr& e) {
    return std::visit(
        [](const auto& node) -> bool {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, RhsExpr::Transfer>) {
                return false;
            } else if constexpr (std::is_same_v<T, RhsExpr::Binop> ||
                                 std::is_same_v<T, RhsExpr::JoinE>) {
                return is_expression_only(*node.lhs) && is_expression_only(*node.rhs);
            } else if constexpr (std::is_same_v<T, RhsExpr::SetE>) {
                return is_expression_only(*node.value);
            } else if constexpr (std::is_same_v<T, RhsExpr::Let>) {
                return is_expression_only(*node.bound) && is_expression_only(*node.body);
            } else if constexpr (std::is_same_v<T, RhsExpr::Seq>) {
                for (const auto& item : node.items)
                    if (!is_expression_only(*item)) return false;
                return true;
            } else {
                return true;
            }
        },
        e.node);
}

void collect_targets(const RhsExpr& e, std::vector<Unknown>& gets, std::vector<Unknown>& sets,
                     std::vector<Unknown>& demands) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, RhsExpr::Get>) {
                gets.push_back(node.target);
            } else if constexpr (std::is_same_v<T, RhsExpr::Binop> ||
                                 std::is_same_v<T, RhsExpr::JoinE>) {
                collect_targets(*node.lhs, gets, sets, demands);
                collect_targets(*node.rhs, gets, sets, demands);
            } else if constexpr (std::is_same_v<T, RhsExpr::SetE>) {
                sets.push_back(node.target);
                collect_targets(*node.value, gets, sets, demands);
            } else if constexpr (std::is_same_v<T, RhsExpr::DemandE>) {
                demands.push_back(node.target);
            } else if constexpr (std::is_same_v<T, RhsExpr::Let>) {
                collect_targets(*node.bound, gets, sets, demands);
                collect_targets(*node.body, gets, sets, demands);
            } else if constexpr (std::is_same_v<T, RhsExpr::Seq>) {
                for (const auto& item : node.items) collect_targets(*item, gets, sets, demands);
            } else if constexpr (std::is_same_v<T, RhsExpr::Transfer>) {
                throw AnalysisError("cannot collect targets of an opaque transfer");
            }
        },
        e.node);
}

}  // namespace fixlab
