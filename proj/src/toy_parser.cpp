#include <cctype>
#include <unordered_set>

#include "fixlab/toy_ast.hpp"

namespace fixlab::toy {

namespace {

struct Token {
    enum Kind { Ident, Number, Punct, End } kind;
    std::string value;
    int line;
    int col;
};

struct Lexer {
    std::string_view text;
    size_t pos = 0;
    int line = 1;
    int col = 1;
    Token lookahead;
    bool has_lookahead = false;

    void advance() {
        if (text[pos] == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        pos++;
    }

    Token lex() {
        for (;;) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                advance();
            if (pos + 1 < text.size() && text[pos] == '/' && text[pos + 1] == '/') {
                while (pos < text.size() && text[pos] != '\n') advance();
                continue;
            }
            if (pos < text.size() && text[pos] == '#') {
                while (pos < text.size() && text[pos] != '\n') advance();
                continue;
            }
            break;
        }
        if (pos >= text.size()) return {Token::End, "", line, col};
        int tl = line, tc = col;
        char c = text[pos];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                advance();
            return {Token::Ident, std::string(text.substr(start, pos - start)), tl, tc};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                advance();
            return {Token::Number, std::string(text.substr(start, pos - start)), tl, tc};
        }
        // two-character relational operators
        if ((c == '<' || c == '>' || c == '=' || c == '!') && pos + 1 < text.size() &&
            text[pos + 1] == '=') {
            advance();
            advance();
            return {Token::Punct, std::string(1, c) + "=", tl, tc};
        }
        advance();
        return {Token::Punct, std::string(1, c), tl, tc};
    }

    Token peek() {
        if (!has_lookahead) {
            lookahead = lex();
            has_lookahead = true;
        }
        return lookahead;
    }
    Token take() {
        if (has_lookahead) {
            has_lookahead = false;
            return lookahead;
        }
        return lex();
    }
    void expect(const std::string& p) {
        Token t = take();
        if (t.kind != Token::Punct || t.value != p)
            throw ParseError("expected '" + p + "', got '" + t.value + "'", t.line, t.col);
    }
    Token expect_ident() {
        Token t = take();
        if (t.kind != Token::Ident)
            throw ParseError("expected identifier, got '" + t.value + "'", t.line, t.col);
        return t;
    }
};

struct Parser {
    Lexer lx;
    Program program;

    ExprPtr make_expr(Expr::IntLit v) { return std::make_shared<const Expr>(Expr{v}); }
    ExprPtr make_expr(Expr::VarRef v) { return std::make_shared<const Expr>(Expr{std::move(v)}); }
    ExprPtr make_expr(Expr::Bin v) { return std::make_shared<const Expr>(Expr{std::move(v)}); }

    ExprPtr factor() {
        Token t = lx.take();
        if (t.kind == Token::Number) return make_expr(Expr::IntLit{std::stoll(t.value)});
        if (t.kind == Token::Ident) return make_expr(Expr::VarRef{t.value});
        if (t.kind == Token::Punct && t.value == "(") {
            ExprPtr e = expr();
            lx.expect(")");
            return e;
        }
        if (t.kind == Token::Punct && t.value == "-") {
            Token n = lx.take();
            if (n.kind != Token::Number)
                throw ParseError("expected number after unary '-'", n.line, n.col);
            return make_expr(Expr::IntLit{-std::stoll(n.value)});
        }
        throw ParseError("expected expression, got '" + t.value + "'", t.line, t.col);
    }

    ExprPtr term() {
        ExprPtr e = factor();
        for (;;) {
            Token t = lx.peek();
            if (t.kind == Token::Punct && t.value == "*") {
                lx.take();
                e = make_expr(Expr::Bin{ArithOp::Mul, e, factor()});
                continue;
            }
            return e;
        }
    }

    ExprPtr expr() {
        ExprPtr e = term();
        for (;;) {
            Token t = lx.peek();
            if (t.kind == Token::Punct && (t.value == "+" || t.value == "-")) {
                lx.take();
                ArithOp op = t.value == "+" ? ArithOp::Add : ArithOp::Sub;
                e = make_expr(Expr::Bin{op, e, term()});
                continue;
            }
            return e;
        }
    }

    Cond cond() {
        ExprPtr lhs = expr();
        Token t = lx.take();
        RelOp rel;
        if (t.value == "<")
            rel = RelOp::Lt;
        else if (t.value == "<=")
            rel = RelOp::Le;
        else if (t.value == "==")
            rel = RelOp::Eq;
        else if (t.value == "!=")
            rel = RelOp::Ne;
        else if (t.value == ">=")
            rel = RelOp::Ge;
        else if (t.value == ">")
            rel = RelOp::Gt;
        else
            throw ParseError("expected relational operator, got '" + t.value + "'", t.line, t.col);
        return Cond{std::move(lhs), rel, expr()};
    }

    std::vector<ExprPtr> call_args() {
        lx.expect("(");
        std::vector<ExprPtr> args;
        if (!(lx.peek().kind == Token::Punct && lx.peek().value == ")")) {
            args.push_back(expr());
            while (lx.peek().kind == Token::Punct && lx.peek().value == ",") {
                lx.take();
                args.push_back(expr());
            }
        }
        lx.expect(")");
        return args;
    }

    StmtList block() {
        lx.expect("{");
        StmtList stmts;
        while (!(lx.peek().kind == Token::Punct && lx.peek().value == "}")) {
            if (lx.peek().kind == Token::End)
                throw ParseError("unexpected end of input in block", lx.peek().line,
                                 lx.peek().col);
            stmts.push_back(statement());
        }
        lx.expect("}");
        return stmts;
    }

    Stmt statement() {
        Token t = lx.take();
        if (t.kind != Token::Ident)
            throw ParseError("expected statement, got '" + t.value + "'", t.line, t.col);

        if (t.value == "if") {
            lx.expect("(");
            Cond c = cond();
            lx.expect(")");
            StmtList then_body = block();
            StmtList else_body;
            if (lx.peek().kind == Token::Ident && lx.peek().value == "else") {
                lx.take();
                else_body = block();
            }
            return Stmt{Stmt::If{std::move(c), std::move(then_body), std::move(else_body)}};
        }
        if (t.value == "while") {
            lx.expect("(");
            Cond c = cond();
            lx.expect(")");
            return Stmt{Stmt::While{std::move(c), block()}};
        }
        if (t.value == "call") {
            Token callee = lx.expect_ident();
            auto args = call_args();
            lx.expect(";");
            return Stmt{Stmt::Call{std::nullopt, callee.value, std::move(args)}};
        }
        if (t.value == "spawn") {
            Token callee = lx.expect_ident();
            auto args = call_args();
            lx.expect(";");
            return Stmt{Stmt::Spawn{callee.value, std::move(args)}};
        }
        if (t.value == "return") {
            ExprPtr e = expr();
            lx.expect(";");
            return Stmt{Stmt::Return{std::move(e)}};
        }

        // assignment: IDENT = expr ; or IDENT = call f(args) ;
        lx.expect("=");
        if (lx.peek().kind == Token::Ident && lx.peek().value == "call") {
            lx.take();
            Token callee = lx.expect_ident();
            auto args = call_args();
            lx.expect(";");
            return Stmt{Stmt::Call{t.value, callee.value, std::move(args)}};
        }
        ExprPtr e = expr();
        lx.expect(";");
        return Stmt{Stmt::Assign{t.value, std::move(e)}};
    }

    Function function() {
        Token name = lx.expect_ident();
        lx.expect("(");
        std::vector<std::string> params;
        if (lx.peek().kind == Token::Ident) {
            params.push_back(lx.take().value);
            while (lx.peek().kind == Token::Punct && lx.peek().value == ",") {
                lx.take();
                params.push_back(lx.expect_ident().value);
            }
        }
        lx.expect(")");
        return Function{name.value, std::move(params), block()};
    }

    Program parse() {
        for (;;) {
            Token t = lx.peek();
            if (t.kind == Token::End) break;
            if (t.kind != Token::Ident)
                throw ParseError("expected 'global' or 'fn', got '" + t.value + "'", t.line,
                                 t.col);
            if (t.value == "global") {
                lx.take();
                Token name = lx.expect_ident();
                lx.expect(";");
                if (program.is_global(name.value))
                    throw ParseError("duplicate global '" + name.value + "'", name.line,
                                     name.col);
                program.globals.push_back(name.value);
                continue;
            }
            if (t.value == "fn") {
                lx.take();
                Function f = function();
                if (program.find(f.name))
                    throw ParseError("duplicate function '" + f.name + "'", t.line, t.col);
                program.functions.push_back(std::move(f));
                continue;
            }
            throw ParseError("expected 'global' or 'fn', got '" + t.value + "'", t.line, t.col);
        }
        return std::move(program);
    }
};

// ---- name resolution ----

void collect_defs(const StmtList& body, std::unordered_set<std::string>& defs) {
    for (const Stmt& s : body) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    defs.insert(node.var);
                } else if constexpr (std::is_same_v<T, Stmt::If>) {
                    collect_defs(node.then_body, defs);
                    collect_defs(node.else_body, defs);
                } else if constexpr (std::is_same_v<T, Stmt::While>) {
                    collect_defs(node.body, defs);
                } else if constexpr (std::is_same_v<T, Stmt::Call>) {
                    if (node.assign_to) defs.insert(*node.assign_to);
                }
            },
            s.node);
    }
}

struct Resolver {
    const Program& program;
    const std::unordered_set<std::string>* defs = nullptr;

    void check_expr(const Expr& e) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::VarRef>) {
                    if (!program.is_global(node.name) && !defs->count(node.name))
                        throw AnalysisError("undefined variable '" + node.name + "'");
                } else if constexpr (std::is_same_v<T, Expr::Bin>) {
                    check_expr(*node.lhs);
                    check_expr(*node.rhs);
                }
            },
            e.node);
    }

    void check_callee(const std::string& callee, size_t args) {
        const Function* f = program.find(callee);
        if (!f) throw AnalysisError("call to undefined function '" + callee + "'");
        if (callee == "main") throw AnalysisError("'main' cannot be called or spawned");
        if (f->params.size() != args)
            throw AnalysisError("function '" + callee + "' expects " +
                                std::to_string(f->params.size()) + " argument(s), got " +
                                std::to_string(args));
    }

    void check_block(const StmtList& body) {
        for (const Stmt& s : body) {
            std::visit(
                [&](const auto& node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, Stmt::Assign>) {
                        check_expr(*node.value);
                    } else if constexpr (std::is_same_v<T, Stmt::If>) {
                        check_expr(*node.cond.lhs);
                        check_expr(*node.cond.rhs);
                        check_block(node.then_body);
                        check_block(node.else_body);
                    } else if constexpr (std::is_same_v<T, Stmt::While>) {
                        check_expr(*node.cond.lhs);
                        check_expr(*node.cond.rhs);
                        check_block(node.body);
                    } else if constexpr (std::is_same_v<T, Stmt::Call>) {
                        check_callee(node.callee, node.args.size());
                        for (const auto& a : node.args) check_expr(*a);
                    } else if constexpr (std::is_same_v<T, Stmt::Spawn>) {
                        check_callee(node.callee, node.args.size());
                        for (const auto& a : node.args) check_expr(*a);
                    } else if constexpr (std::is_same_v<T, Stmt::Return>) {
                        check_expr(*node.value);
                    }
                },
                s.node);
        }
    }
};

}  // namespace

Program parse_program(std::string_view text) {
    Parser p{Lexer{text}, Program{}};
    Program program = p.parse();

    const Function* main_fn = program.find("main");
    if (!main_fn) throw AnalysisError("program has no 'main' function");
    if (!main_fn->params.empty()) throw AnalysisError("'main' must take no parameters");

    for (const Function& f : program.functions) {
        std::unordered_set<std::string> defs(f.params.begin(), f.params.end());
        collect_defs(f.body, defs);
        Resolver r{program, &defs};
        r.check_block(f.body);
    }
    return program;
}

}  // namespace fixlab::toy
