#ifndef FIXLAB_RHS_HPP
#define FIXLAB_RHS_HPP

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "fixlab/lattice.hpp"
#include "fixlab/unknown.hpp"

namespace fixlab {

/// The get/set/demand interface a right-hand side evaluates against.
/// Solvers implement it; verification re-implements it over a fixed solution.
class RhsContext {
public:
    virtual ~RhsContext() = default;
    virtual LatticeValue get(Unknown u) = 0;
    virtual void set(Unknown target, const LatticeValue& contribution) = 0;
    virtual void demand(Unknown u) = 0;
};

/// Adapter for tests and small tools that want plain callables.
class CallbackContext final : public RhsContext {
public:
    using GetFn = std::function<LatticeValue(Unknown)>;
    using SetFn = std::function<void(Unknown, const LatticeValue&)>;
    using DemandFn = std::function<void(Unknown)>;

    CallbackContext(GetFn get, SetFn set = {}, DemandFn demand = {})
        : get_(std::move(get)), set_(std::move(set)), demand_(std::move(demand)) {}

    LatticeValue get(Unknown u) override { return get_(u); }
    void set(Unknown target, const LatticeValue& v) override {
        if (set_) set_(target, v);
    }
    void demand(Unknown u) override {
        if (demand_) demand_(u);
    }

private:
    GetFn get_;
    SetFn set_;
    DemandFn demand_;
};

struct RhsExpr;
using RhsPtr = std::shared_ptr<const RhsExpr>;

/// Serializable right-hand-side expression tree, plus Transfer as an escape
/// hatch for host-provided closures (used by the program frontend). Transfer
/// callbacks must be pure functions of their context.
struct RhsExpr {
    struct Const {
        LatticeValue value;
    };
    struct Get {
        Unknown target;
    };
    struct Binop {
        ArithOp op;
        RhsPtr lhs;
        RhsPtr rhs;
    };
    struct JoinE {
        RhsPtr lhs;
        RhsPtr rhs;
    };
    struct SetE {
        Unknown target;
        RhsPtr value;
    };
    struct DemandE {
        Unknown target;
    };
    struct Let {
        std::string name;
        RhsPtr bound;
        RhsPtr body;
    };
    struct Var {
        std::string name;
    };
    struct Seq {
        std::vector<RhsPtr> items;
    };
    struct Transfer {
        std::function<LatticeValue(RhsContext&)> fn;
    };

    using Node =
        std::variant<Const, Get, Binop, JoinE, SetE, DemandE, Let, Var, Seq, Transfer>;

    Node node;
};

namespace rhs {
RhsPtr constant(LatticeValue v);
RhsPtr get(Unknown u);
RhsPtr binop(ArithOp op, RhsPtr lhs, RhsPtr rhs);
RhsPtr join2(RhsPtr lhs, RhsPtr rhs);
RhsPtr set(Unknown target, RhsPtr value);
RhsPtr demand(Unknown u);
RhsPtr let(std::string name, RhsPtr bound, RhsPtr body);
RhsPtr var(std::string name);
RhsPtr seq(std::vector<RhsPtr> items);
RhsPtr transfer(std::function<LatticeValue(RhsContext&)> fn);
}  // namespace rhs

/// Evaluate with strict left-to-right effect order. Every Get/SetE/DemandE
/// node triggers exactly one context call per dynamic occurrence.
LatticeValue eval_rhs(const RhsExpr& e, RhsContext& ctx);

/// True if the tree contains no Transfer node (i.e. it is serializable and
/// usable by the Kleene oracle).
bool is_expression_only(const RhsExpr& e);

/// Collect the statically mentioned unknowns (get/set/demand targets).
void collect_targets(const RhsExpr& e, std::vector<Unknown>& gets,
                     std::vector<Unknown>& sets, std::vector<Unknown>& demands);

}  // namespace fixlab

#endif  // FIXLAB_RHS_HPP
