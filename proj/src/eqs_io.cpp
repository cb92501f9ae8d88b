#include <cctype>
#include <cstdio>
#include <sstream>

#include "fixlab/eqsys.hpp"

namespace fixlab {

namespace {

// Tokenizer for the equation-system format. Newlines are plain whitespace
// (the grammar is self-delimiting); `#` comments run to end of line.
struct Lexer {
    std::string_view text;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    struct Token {
        enum Kind { Ident, Number, Punct, IntervalLit, SetLit, End } kind;
        std::string value;
        int line;
        int col;
    };

    void advance(size_t n) {
        for (size_t i = 0; i < n && pos < text.size(); i++, pos++) {
            if (text[pos] == '\n') {
                line++;
                col = 1;
            } else {
                col++;
            }
        }
    }

    void skip_ws() {
        for (;;) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                advance(1);
            if (pos < text.size() && text[pos] == '#') {
                while (pos < text.size() && text[pos] != '\n') advance(1);
                continue;
            }
            break;
        }
    }

    Token take() {
        skip_ws();
        if (pos >= text.size()) return {Token::End, "", line, col};
        int tl = line, tc = col;
        char c = text[pos];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                    text[pos] == '.'))
                advance(1);
            return {Token::Ident, std::string(text.substr(start, pos - start)), tl, tc};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos + 1])))) {
            size_t start = pos;
            advance(1);
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                advance(1);
            return {Token::Number, std::string(text.substr(start, pos - start)), tl, tc};
        }
        if (c == '[' || c == '{') {
            char close = c == '[' ? ']' : '}';
            size_t start = pos;
            while (pos < text.size() && text[pos] != close) advance(1);
            if (pos >= text.size()) throw ParseError("unterminated value literal", tl, tc);
            advance(1);
            return {c == '[' ? Token::IntervalLit : Token::SetLit,
                    std::string(text.substr(start, pos - start)), tl, tc};
        }
        advance(1);
        return {Token::Punct, std::string(1, c), tl, tc};
    }

    Token peek() const {
        Lexer copy = *this;
        return copy.take();
    }

    void expect_punct(char p) {
        Token t = take();
        if (t.kind != Token::Punct || t.value[0] != p)
            throw ParseError(std::string("expected '") + p + "', got '" + t.value + "'", t.line,
                             t.col);
    }
};

struct ExprParser {
    Lexer& lx;
    ValueKind kind;
    EquationSystem& sys;

    Unknown resolve(const Lexer::Token& t) {
        if (t.kind != Lexer::Token::Ident)
            throw ParseError("expected unknown name, got '" + t.value + "'", t.line, t.col);
        auto u = sys.table().find(t.value);
        if (!u)
            throw ParseError("reference to undeclared unknown '" + t.value + "'", t.line, t.col);
        return *u;
    }

    LatticeValue value_token() {
        Lexer::Token t = lx.take();
        if (t.kind == Lexer::Token::End) throw ParseError("expected a value", t.line, t.col);
        try {
            if (kind == ValueKind::Env && t.kind == Lexer::Token::Ident && t.value == "env") {
                Lexer::Token body = lx.take();
                return parse_value("env" + body.value, kind);
            }
            return parse_value(t.value, kind);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), t.line, t.col);
        }
    }

    RhsPtr expr() {
        Lexer::Token t = lx.take();
        if (t.kind != Lexer::Token::Ident)
            throw ParseError("expected expression, got '" + t.value + "'", t.line, t.col);

        const std::string& head = t.value;
        if (head == "const") return rhs::constant(value_token());
        if (head == "get") return rhs::get(resolve(lx.take()));
        if (head == "add" || head == "sub" || head == "mul") {
            ArithOp op = head == "add" ? ArithOp::Add : head == "sub" ? ArithOp::Sub : ArithOp::Mul;
            lx.expect_punct('(');
            RhsPtr l = expr();
            lx.expect_punct(',');
            RhsPtr r = expr();
            lx.expect_punct(')');
            return rhs::binop(op, std::move(l), std::move(r));
        }
        if (head == "join") {
            lx.expect_punct('(');
            RhsPtr l = expr();
            lx.expect_punct(',');
            RhsPtr r = expr();
            lx.expect_punct(')');
            return rhs::join2(std::move(l), std::move(r));
        }
        if (head == "set") {
            Lexer::Token name = lx.take();
            Unknown target = resolve(name);
            if (!sys.is_global(target))
                throw ParseError("set target '" + name.value + "' must be a global", name.line,
                                 name.col);
            return rhs::set(target, expr());
        }
        if (head == "demand") {
            Lexer::Token name = lx.take();
            Unknown target = resolve(name);
            if (sys.is_global(target))
                throw ParseError("demand target '" + name.value + "' must be a local", name.line,
                                 name.col);
            return rhs::demand(target);
        }
        if (head == "let") {
            Lexer::Token name = lx.take();
            if (name.kind != Lexer::Token::Ident)
                throw ParseError("expected let-variable name", name.line, name.col);
            lx.expect_punct('=');
            RhsPtr bound = expr();
            Lexer::Token in = lx.take();
            if (in.kind != Lexer::Token::Ident || in.value != "in")
                throw ParseError("expected 'in' after let binding", in.line, in.col);
            return rhs::let(name.value, std::move(bound), expr());
        }
        if (head == "seq") {
            lx.expect_punct('(');
            std::vector<RhsPtr> items;
            items.push_back(expr());
            for (;;) {
                Lexer::Token p = lx.peek();
                if (p.kind == Lexer::Token::Punct && p.value == ";") {
                    lx.take();
                    items.push_back(expr());
                    continue;
                }
                break;
            }
            lx.expect_punct(')');
            return rhs::seq(std::move(items));
        }
        return rhs::var(head);  // bare identifier: let-bound variable
    }
};

const char* kind_file_name(ValueKind k) {
    switch (k) {
        case ValueKind::Interval: return "interval";
        case ValueKind::Flat: return "flat";
        case ValueKind::Set: return "set";
        case ValueKind::Env: return "env";
    }
    return "?";
}

struct Serializer {
    const EquationSystem& sys;
    std::ostringstream out;

    void expr(const RhsExpr& e) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, RhsExpr::Const>) {
                    out << "const " << to_string(node.value);
                } else if constexpr (std::is_same_v<T, RhsExpr::Get>) {
                    out << "get " << sys.label(node.target);
                } else if constexpr (std::is_same_v<T, RhsExpr::Binop>) {
                    out << arith_op_name(node.op) << "(";
                    expr(*node.lhs);
                    out << ", ";
                    expr(*node.rhs);
                    out << ")";
                } else if constexpr (std::is_same_v<T, RhsExpr::JoinE>) {
                    out << "join(";
                    expr(*node.lhs);
                    out << ", ";
                    expr(*node.rhs);
                    out << ")";
                } else if constexpr (std::is_same_v<T, RhsExpr::SetE>) {
                    out << "set " << sys.label(node.target) << " ";
                    expr(*node.value);
                } else if constexpr (std::is_same_v<T, RhsExpr::DemandE>) {
                    out << "demand " << sys.label(node.target);
                } else if constexpr (std::is_same_v<T, RhsExpr::Let>) {
                    out << "let " << node.name << " = ";
                    expr(*node.bound);
                    out << " in ";
                    expr(*node.body);
                } else if constexpr (std::is_same_v<T, RhsExpr::Var>) {
                    out << node.name;
                } else if constexpr (std::is_same_v<T, RhsExpr::Seq>) {
                    out << "seq(";
                    bool first = true;
                    for (const auto& item : node.items) {
                        if (!first) out << "; ";
                        first = false;
                        expr(*item);
                    }
                    out << ")";
                } else {
                    static_assert(std::is_same_v<T, RhsExpr::Transfer>);
                    throw AnalysisError("cannot serialize a system with transfer nodes");
                }
            },
            e.node);
    }
};

}  // namespace

EquationSystem parse_system(std::string_view text) {
    Lexer lx{text};
    EquationSystem sys;

    Lexer::Token t = lx.take();
    if (t.kind != Lexer::Token::Ident || t.value != "lattice")
        throw ParseError("expected 'lattice interval|flat|set;' header", t.line, t.col);
    Lexer::Token k = lx.take();
    ValueKind kind;
    if (k.value == "interval")
        kind = ValueKind::Interval;
    else if (k.value == "flat")
        kind = ValueKind::Flat;
    else if (k.value == "set")
        kind = ValueKind::Set;
    else
        throw ParseError("unknown lattice '" + k.value + "'", k.line, k.col);
    lx.expect_punct(';');

    // Pass 1: declarations only, so right-hand sides can reference forward.
    // A declaration is the only place `IDENT :` occurs, which makes it a
    // reliable delimiter for skipping expressions.
    struct Decl {
        Unknown u;
        Lexer at_expr;  // lexer state at the start of the expression
    };
    std::vector<Decl> locals;
    LatticeValue bot = bottom_value(kind);

    Lexer scan = lx;
    for (;;) {
        Lexer::Token name = scan.take();
        if (name.kind == Lexer::Token::End) break;
        if (name.kind != Lexer::Token::Ident)
            throw ParseError("expected unknown name, got '" + name.value + "'", name.line,
                             name.col);
        scan.expect_punct(':');
        Lexer::Token kw = scan.take();
        bool is_global;
        if (kw.kind == Lexer::Token::Ident && kw.value == "global")
            is_global = true;
        else if (kw.kind == Lexer::Token::Ident && kw.value == "local")
            is_global = false;
        else
            throw ParseError("expected 'global' or 'local'", kw.line, kw.col);

        Unknown u;
        try {
            u = sys.declare(name.value, is_global ? UnknownKind::Global : UnknownKind::Local, bot);
        } catch (const AnalysisError& e) {
            throw ParseError(e.what(), name.line, name.col);
        }
        if (is_global) continue;

        scan.expect_punct('=');
        locals.push_back({u, scan});

        // Skip the expression: advance until the next `IDENT :` or EOF.
        for (;;) {
            Lexer probe = scan;
            Lexer::Token a = probe.take();
            if (a.kind == Lexer::Token::End) {
                scan = probe;
                break;
            }
            if (a.kind == Lexer::Token::Ident) {
                Lexer::Token b = probe.take();
                if (b.kind == Lexer::Token::Punct && b.value == ":") break;
            }
            scan.take();
        }
    }

    // Pass 2: parse each expression with all unknowns resolvable.
    std::vector<bool> defined(sys.size(), false);
    for (Decl& d : locals) {
        Lexer::Token at = d.at_expr.peek();
        if (defined[d.u.id])
            throw ParseError("duplicate right-hand side for '" + sys.label(d.u) + "'", at.line,
                             at.col);
        defined[d.u.id] = true;
        ExprParser ep{d.at_expr, kind, sys};
        sys.set_rhs(d.u, ep.expr());
    }
    for (std::uint32_t i = 0; i < sys.size(); i++) {
        Unknown u{i};
        if (!sys.is_global(u) && !sys.rhs(u))
            throw ParseError("local '" + sys.label(u) + "' has no right-hand side", 1, 1);
    }
    return sys;
}

std::string serialize_system(const EquationSystem& sys) {
    // Files are homogeneous, so the header kind comes from any bottom value.
    ValueKind k = sys.size() > 0 ? kind_of(sys.bottom_of(Unknown{0})) : ValueKind::Interval;
    Serializer s{sys, {}};
    s.out << "lattice " << kind_file_name(k) << ";\n";
    for (std::uint32_t i = 0; i < sys.size(); i++) {
        Unknown u{i};
        if (sys.is_global(u)) {
            s.out << sys.label(u) << ": global\n";
        } else {
            const RhsExpr* e = sys.rhs(u);
            if (!e) throw AnalysisError("local '" + sys.label(u) + "' has no right-hand side");
            s.out << sys.label(u) << ": local = ";
            s.expr(*e);
            s.out << "\n";
        }
    }
    return s.out.str();
}

std::string text_fingerprint(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string system_fingerprint(const EquationSystem& sys) {
    return text_fingerprint(serialize_system(sys));
}

}  // namespace fixlab
