#ifndef FIXLAB_TOY_AST_HPP
#define FIXLAB_TOY_AST_HPP

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fixlab/lattice.hpp"

namespace fixlab::toy {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    struct IntLit {
        std::int64_t value;
    };
    struct VarRef {
        std::string name;
    };
    struct Bin {
        ArithOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };
    std::variant<IntLit, VarRef, Bin> node;
};

struct Cond {
    ExprPtr lhs;
    RelOp rel;
    ExprPtr rhs;
};

struct Stmt;
using StmtList = std::vector<Stmt>;

struct Stmt {
    struct Assign {
        std::string var;  // a function local or a declared program global
        ExprPtr value;
    };
    struct If {
        Cond cond;
        StmtList then_body;
        StmtList else_body;
    };
    struct While {
        Cond cond;
        StmtList body;
    };
    struct Call {
        std::optional<std::string> assign_to;
        std::string callee;
        std::vector<ExprPtr> args;
    };
    struct Spawn {
        std::string callee;
        std::vector<ExprPtr> args;
    };
    struct Return {
        ExprPtr value;
    };
    std::variant<Assign, If, While, Call, Spawn, Return> node;
};

struct Function {
    std::string name;
    std::vector<std::string> params;
    StmtList body;
};

struct Program {
    std::vector<std::string> globals;
    std::vector<Function> functions;  // declaration order; entry is "main"

    const Function* find(std::string_view name) const {
        for (const auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
    bool is_global(std::string_view name) const {
        for (const auto& g : globals)
            if (g == name) return true;
        return false;
    }
};

/// Parse and name-resolve a toy program. Checks: exactly one parameterless
/// entry `main`, called/spawned functions exist with matching arity, and
/// every variable read is a global, parameter, or assigned somewhere in the
/// enclosing function.
Program parse_program(std::string_view text);

}  // namespace fixlab::toy

#endif  // FIXLAB_TOY_AST_HPP
