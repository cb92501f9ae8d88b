#include "fixlab/lattice.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace fixlab {

namespace {

// Clamp a 128-bit result into the extended-integer range. Anything at or
// beyond the sentinels saturates to infinity, which is sound for intervals.
std::int64_t clamp_bound(__int128 v) {
    if (v <= static_cast<__int128>(kNegInf)) return kNegInf;
    if (v >= static_cast<__int128>(kPosInf)) return kPosInf;
    return static_cast<std::int64_t>(v);
}

bool is_inf(std::int64_t b) { return b == kNegInf || b == kPosInf; }

std::int64_t add_bounds(std::int64_t a, std::int64_t b, std::int64_t mixed_inf) {
    if (is_inf(a) && is_inf(b) && a != b) return mixed_inf;  // -inf + +inf: caller picks
    if (is_inf(a)) return a;
    if (is_inf(b)) return b;
    return clamp_bound(static_cast<__int128>(a) + static_cast<__int128>(b));
}

std::int64_t mul_bounds(std::int64_t a, std::int64_t b) {
    if (a == 0 || b == 0) return 0;  // 0 * +-inf = 0
    if (is_inf(a) || is_inf(b)) {
        bool negative = (a < 0) != (b < 0);
        return negative ? kNegInf : kPosInf;
    }
    return clamp_bound(static_cast<__int128>(a) * static_cast<__int128>(b));
}

}  // namespace

std::string bound_to_string(std::int64_t b) {
    if (b == kNegInf) return "-inf";
    if (b == kPosInf) return "+inf";
    return std::to_string(b);
}

const char* arith_op_name(ArithOp op) {
    switch (op) {
        case ArithOp::Add: return "add";
        case ArithOp::Sub: return "sub";
        case ArithOp::Mul: return "mul";
    }
    return "?";
}

Interval Interval::range(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ContractError("interval range with lo > hi");
    Interval r;
    r.empty_ = false;
    r.lo_ = lo;
    r.hi_ = hi;
    return r;
}

std::int64_t Interval::lo() const {
    if (empty_) throw ContractError("lo() on empty interval");
    return lo_;
}

std::int64_t Interval::hi() const {
    if (empty_) throw ContractError("hi() on empty interval");
    return hi_;
}

bool Interval::leq(const Interval& other) const {
    if (empty_) return true;
    if (other.empty_) return false;
    return other.lo_ <= lo_ && hi_ <= other.hi_;
}

Interval Interval::join(const Interval& other) const {
    if (empty_) return other;
    if (other.empty_) return *this;
    return range(std::min(lo_, other.lo_), std::max(hi_, other.hi_));
}

Interval Interval::meet(const Interval& other) const {
    if (empty_ || other.empty_) return empty();
    std::int64_t lo = std::max(lo_, other.lo_);
    std::int64_t hi = std::min(hi_, other.hi_);
    if (lo > hi) return empty();
    return range(lo, hi);
}

Interval Interval::widen(const Interval& next) const {
    if (empty_) return next;
    if (next.empty_) throw ContractError("widen towards empty interval");
    std::int64_t lo = next.lo_ < lo_ ? kNegInf : lo_;
    std::int64_t hi = next.hi_ > hi_ ? kPosInf : hi_;
    return range(lo, hi);
}

bool Interval::operator==(const Interval& other) const {
    if (empty_ != other.empty_) return false;
    if (empty_) return true;
    return lo_ == other.lo_ && hi_ == other.hi_;
}

std::string Interval::to_string() const {
    if (empty_) return "bot";
    if (is_top()) return "top";
    return "[" + bound_to_string(lo_) + "," + bound_to_string(hi_) + "]";
}

Interval abstract_binop(ArithOp op, const Interval& a, const Interval& b) {
    if (a.is_empty() || b.is_empty()) return Interval::empty();
    switch (op) {
        case ArithOp::Add:
            return Interval::range(add_bounds(a.lo(), b.lo(), kNegInf),
                                   add_bounds(a.hi(), b.hi(), kPosInf));
        case ArithOp::Sub: {
            auto neg = [](std::int64_t x) {
                if (x == kNegInf) return kPosInf;
                if (x == kPosInf) return kNegInf;
                return -x;
            };
            return Interval::range(add_bounds(a.lo(), neg(b.hi()), kNegInf),
                                   add_bounds(a.hi(), neg(b.lo()), kPosInf));
        }
        case ArithOp::Mul: {
            std::int64_t p[4] = {
                mul_bounds(a.lo(), b.lo()),
                mul_bounds(a.lo(), b.hi()),
                mul_bounds(a.hi(), b.lo()),
                mul_bounds(a.hi(), b.hi()),
            };
            return Interval::range(*std::min_element(p, p + 4), *std::max_element(p, p + 4));
        }
    }
    throw ContractError("unknown arithmetic op");
}

Interval interval_from_rel(RelOp rel, std::int64_t k) {
    switch (rel) {
        case RelOp::Lt: return k == kNegInf ? Interval::empty() : Interval::range(kNegInf, k - 1);
        case RelOp::Le: return Interval::range(kNegInf, k);
        case RelOp::Eq: return Interval::constant(k);
        case RelOp::Ne: return Interval::top();  // holes are not representable
        case RelOp::Ge: return Interval::range(k, kPosInf);
        case RelOp::Gt: return k == kPosInf ? Interval::empty() : Interval::range(k + 1, kPosInf);
    }
    return Interval::top();
}

Env Env::unreachable() { return Env(); }

Env Env::reachable(Bindings bindings) {
    Env e;
    e.unreachable_ = false;
    for (auto& [name, v] : bindings) {
        if (v.is_empty()) return unreachable();
        if (!v.is_top()) e.bindings_.emplace(name, v);
    }
    return e;
}

Interval Env::get(const std::string& name) const {
    if (unreachable_) return Interval::empty();
    auto it = bindings_.find(name);
    return it == bindings_.end() ? Interval::top() : it->second;
}

Env Env::with(const std::string& name, const Interval& value) const {
    if (unreachable_ || value.is_empty()) return unreachable();
    Env e = *this;
    if (value.is_top())
        e.bindings_.erase(name);
    else
        e.bindings_[name] = value;
    return e;
}

bool Env::leq(const Env& other) const {
    if (unreachable_) return true;
    if (other.unreachable_) return false;
    // Absent bindings are top, so only other's explicit bindings constrain us.
    for (const auto& [name, vb] : other.bindings_) {
        if (!get(name).leq(vb)) return false;
    }
    return true;
}

Env Env::join(const Env& other) const {
    if (unreachable_) return other;
    if (other.unreachable_) return *this;
    Bindings out;
    for (const auto& [name, va] : bindings_) {
        auto it = other.bindings_.find(name);
        if (it == other.bindings_.end()) continue;  // join with top
        Interval j = va.join(it->second);
        if (!j.is_top()) out.emplace(name, j);
    }
    return reachable(std::move(out));
}

Env Env::widen(const Env& next) const {
    if (unreachable_) return next;
    if (next.unreachable_) throw ContractError("widen towards unreachable env");
    Bindings out;
    for (const auto& [name, vn] : next.bindings_) {
        Interval w = get(name).widen(vn);
        if (!w.is_top()) out.emplace(name, w);
    }
    return reachable(std::move(out));
}

bool Env::operator==(const Env& other) const {
    if (unreachable_ != other.unreachable_) return false;
    if (unreachable_) return true;
    return bindings_ == other.bindings_;
}

std::string Env::to_string() const {
    if (unreachable_) return "unreachable";
    std::string out = "env{";
    bool first = true;
    for (const auto& [name, v] : bindings_) {
        if (!first) out += ",";
        first = false;
        out += name + ":" + v.to_string();
    }
    out += "}";
    return out;
}

bool FiniteSet::leq(const FiniteSet& other) const {
    return std::includes(other.atoms_.begin(), other.atoms_.end(), atoms_.begin(), atoms_.end());
}

FiniteSet FiniteSet::join(const FiniteSet& other) const {
    FiniteSet out = *this;
    out.atoms_.insert(other.atoms_.begin(), other.atoms_.end());
    return out;
}

std::string FiniteSet::to_string() const {
    if (atoms_.empty()) return "bot";
    std::string out = "{";
    bool first = true;
    for (const auto& a : atoms_) {
        if (!first) out += ",";
        first = false;
        out += a;
    }
    out += "}";
    return out;
}

bool Flat::leq(const Flat& other) const {
    if (state_ == State::Bot || other.state_ == State::Top) return true;
    return *this == other;
}

Flat Flat::join(const Flat& other) const {
    if (state_ == State::Bot) return other;
    if (other.state_ == State::Bot) return *this;
    if (*this == other) return *this;
    return top();
}

std::string Flat::to_string() const {
    switch (state_) {
        case State::Bot: return "bot";
        case State::Top: return "top";
        case State::Value: return atom_;
    }
    return "?";
}

ValueKind kind_of(const LatticeValue& v) {
    switch (v.index()) {
        case 0: return ValueKind::Interval;
        case 1: return ValueKind::Env;
        case 2: return ValueKind::Set;
        default: return ValueKind::Flat;
    }
}

const char* kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::Interval: return "interval";
        case ValueKind::Env: return "env";
        case ValueKind::Set: return "set";
        case ValueKind::Flat: return "flat";
    }
    return "?";
}

LatticeValue bottom_value(ValueKind k) {
    switch (k) {
        case ValueKind::Interval: return Interval::empty();
        case ValueKind::Env: return Env::unreachable();
        case ValueKind::Set: return FiniteSet();
        case ValueKind::Flat: return Flat::bot();
    }
    throw ContractError("unknown value kind");
}

bool is_bottom(const LatticeValue& v) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Interval>) return x.is_empty();
            if constexpr (std::is_same_v<T, Env>) return x.is_unreachable();
            if constexpr (std::is_same_v<T, FiniteSet>) return x.is_empty();
            if constexpr (std::is_same_v<T, Flat>) return x.state() == Flat::State::Bot;
        },
        v);
}

namespace {

[[noreturn]] void mismatch(const char* op, const LatticeValue& a, const LatticeValue& b) {
    throw DomainError(std::string(op) + " on mismatched lattice variants: " +
                      kind_name(kind_of(a)) + " vs " + kind_name(kind_of(b)));
}

}  // namespace

LatticeValue join(const LatticeValue& a, const LatticeValue& b) {
    if (a.index() != b.index()) mismatch("join", a, b);
    return std::visit(
        [&](const auto& x) -> LatticeValue {
            using T = std::decay_t<decltype(x)>;
            return x.join(std::get<T>(b));
        },
        a);
}

bool leq(const LatticeValue& a, const LatticeValue& b) {
    if (a.index() != b.index()) mismatch("leq", a, b);
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            return x.leq(std::get<T>(b));
        },
        a);
}

LatticeValue widen(const LatticeValue& old_value, const LatticeValue& next) {
    if (old_value.index() != next.index()) mismatch("widen", old_value, next);
    if (!leq(old_value, next)) throw ContractError("widen requires old <= next");
    switch (kind_of(old_value)) {
        case ValueKind::Interval:
            return std::get<Interval>(old_value).widen(std::get<Interval>(next));
        case ValueKind::Env:
            return std::get<Env>(old_value).widen(std::get<Env>(next));
        default:
            return next;  // finite height: widen = join, and next == join(old, next)
    }
}

LatticeValue binop(ArithOp op, const LatticeValue& a, const LatticeValue& b) {
    if (!std::holds_alternative<Interval>(a) || !std::holds_alternative<Interval>(b)) {
        throw DomainError(std::string(arith_op_name(op)) + " requires interval operands, got " +
                          kind_name(kind_of(a)) + " and " + kind_name(kind_of(b)));
    }
    return abstract_binop(op, std::get<Interval>(a), std::get<Interval>(b));
}

std::string to_string(const LatticeValue& v) {
    return std::visit([](const auto& x) { return x.to_string(); }, v);
}

namespace {

struct ValueLexer {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            pos++;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c))
            throw ParseError(std::string("expected '") + c + "' in value", 1,
                             static_cast<int>(pos) + 1);
    }
    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                text[pos] == '.')) {
            pos++;
        }
        if (start == pos)
            throw ParseError("expected identifier in value", 1, static_cast<int>(pos) + 1);
        return std::string(text.substr(start, pos - start));
    }
    std::int64_t bound() {
        skip_ws();
        if (text.substr(pos, 4) == "-inf") {
            pos += 4;
            return kNegInf;
        }
        if (text.substr(pos, 4) == "+inf") {
            pos += 4;
            return kPosInf;
        }
        size_t start = pos;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) pos++;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) pos++;
        if (start == pos || (pos - start == 1 && !std::isdigit(static_cast<unsigned char>(text[start]))))
            throw ParseError("expected integer or +-inf bound", 1, static_cast<int>(pos) + 1);
        return std::stoll(std::string(text.substr(start, pos - start)));
    }
};

Interval parse_interval(ValueLexer& lx) {
    if (lx.peek() == '[') {
        lx.expect('[');
        std::int64_t lo = lx.bound();
        lx.expect(',');
        std::int64_t hi = lx.bound();
        lx.expect(']');
        if (lo > hi) throw ParseError("interval with lo > hi", 1, static_cast<int>(lx.pos));
        return Interval::range(lo, hi);
    }
    std::string word = lx.ident();
    if (word == "bot") return Interval::empty();
    if (word == "top") return Interval::top();
    throw ParseError("expected interval value, got '" + word + "'", 1, static_cast<int>(lx.pos));
}

}  // namespace

LatticeValue parse_value(std::string_view text, ValueKind kind) {
    ValueLexer lx{text};
    LatticeValue result = bottom_value(kind);
    switch (kind) {
        case ValueKind::Interval:
            result = parse_interval(lx);
            break;
        case ValueKind::Set: {
            if (lx.peek() == '{') {
                lx.expect('{');
                std::set<std::string> atoms;
                if (lx.peek() != '}') {
                    atoms.insert(lx.ident());
                    while (lx.consume(',')) atoms.insert(lx.ident());
                }
                lx.expect('}');
                result = FiniteSet::of(std::move(atoms));
            } else {
                std::string word = lx.ident();
                if (word != "bot")
                    throw ParseError("expected set value, got '" + word + "'", 1, 1);
                result = FiniteSet();
            }
            break;
        }
        case ValueKind::Flat: {
            std::string word = lx.ident();
            if (word == "bot")
                result = Flat::bot();
            else if (word == "top")
                result = Flat::top();
            else
                result = Flat::value(word);
            break;
        }
        case ValueKind::Env: {
            if (lx.peek() == 'u') {
                std::string word = lx.ident();
                if (word != "unreachable")
                    throw ParseError("expected env value, got '" + word + "'", 1, 1);
                result = Env::unreachable();
            } else {
                std::string word = lx.ident();
                if (word != "env") throw ParseError("expected env value", 1, 1);
                lx.expect('{');
                Env::Bindings bindings;
                if (lx.peek() != '}') {
                    do {
                        std::string name = lx.ident();
                        lx.expect(':');
                        bindings[name] = parse_interval(lx);
                    } while (lx.consume(','));
                }
                lx.expect('}');
                result = Env::reachable(std::move(bindings));
            }
            break;
        }
    }
    if (!lx.eof())
        throw ParseError("trailing input after value", 1, static_cast<int>(lx.pos) + 1);
    return result;
}

}  // namespace fixlab
