#ifndef FIXLAB_LATTICE_HPP
#define FIXLAB_LATTICE_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "fixlab/errors.hpp"

namespace fixlab {

// Extended-integer bounds: INT64_MIN/INT64_MAX act as -inf/+inf and finite
// arithmetic saturates into them, which keeps every operation sound.
inline constexpr std::int64_t kNegInf = INT64_MIN;
inline constexpr std::int64_t kPosInf = INT64_MAX;

std::string bound_to_string(std::int64_t b);

enum class ArithOp { Add, Sub, Mul };

const char* arith_op_name(ArithOp op);  // "add" | "sub" | "mul"

enum class RelOp { Lt, Le, Eq, Ne, Ge, Gt };

/// Integer intervals extended with the empty interval as bottom.
/// [-inf,+inf] is top. Invariant: lo <= hi whenever non-empty.
class Interval {
public:
    Interval() : empty_(true), lo_(0), hi_(0) {}

    static Interval empty() { return Interval(); }
    static Interval top() { return range(kNegInf, kPosInf); }
    static Interval constant(std::int64_t v) { return range(v, v); }
    static Interval range(std::int64_t lo, std::int64_t hi);

    bool is_empty() const { return empty_; }
    bool is_top() const { return !empty_ && lo_ == kNegInf && hi_ == kPosInf; }

    std::int64_t lo() const;
    std::int64_t hi() const;

    bool leq(const Interval& other) const;
    Interval join(const Interval& other) const;
    Interval meet(const Interval& other) const;
    Interval widen(const Interval& next) const;

    bool contains(std::int64_t v) const { return !empty_ && lo_ <= v && v <= hi_; }

    bool operator==(const Interval& other) const;

    std::string to_string() const;

private:
    bool empty_;
    std::int64_t lo_;
    std::int64_t hi_;
};

Interval abstract_binop(ArithOp op, const Interval& a, const Interval& b);

/// Interval satisfied by `x REL k`; used for branch refinement.
Interval interval_from_rel(RelOp rel, std::int64_t k);

/// Map from variable names to intervals, with Unreachable as bottom.
/// Normal form: no binding is empty (that collapses to Unreachable) and no
/// binding is top (absent bindings mean top).
class Env {
public:
    using Bindings = std::map<std::string, Interval>;

    static Env unreachable();
    static Env reachable(Bindings bindings = {});

    bool is_unreachable() const { return unreachable_; }
    const Bindings& bindings() const { return bindings_; }

    /// Interval of a variable: top if unbound, empty if unreachable.
    Interval get(const std::string& name) const;

    /// Rebind one variable; normalizes (empty -> unreachable, top -> erased).
    Env with(const std::string& name, const Interval& value) const;

    bool leq(const Env& other) const;
    Env join(const Env& other) const;
    Env widen(const Env& next) const;

    bool operator==(const Env& other) const;

    std::string to_string() const;

private:
    bool unreachable_ = true;
    Bindings bindings_;
};

/// Finite powerset of atoms; bottom is the empty set, join is union.
class FiniteSet {
public:
    FiniteSet() = default;
    static FiniteSet of(std::set<std::string> atoms) {
        FiniteSet s;
        s.atoms_ = std::move(atoms);
        return s;
    }

    const std::set<std::string>& atoms() const { return atoms_; }
    bool is_empty() const { return atoms_.empty(); }

    bool leq(const FiniteSet& other) const;
    FiniteSet join(const FiniteSet& other) const;

    bool operator==(const FiniteSet& other) const { return atoms_ == other.atoms_; }

    std::string to_string() const;

private:
    std::set<std::string> atoms_;
};

/// Flat lattice over atoms: Bot < Const(a) < Top.
class Flat {
public:
    enum class State { Bot, Value, Top };

    Flat() : state_(State::Bot) {}
    static Flat bot() { return Flat(); }
    static Flat top() {
        Flat f;
        f.state_ = State::Top;
        return f;
    }
    static Flat value(std::string atom) {
        Flat f;
        f.state_ = State::Value;
        f.atom_ = std::move(atom);
        return f;
    }

    State state() const { return state_; }
    const std::string& atom() const { return atom_; }

    bool leq(const Flat& other) const;
    Flat join(const Flat& other) const;

    bool operator==(const Flat& other) const {
        return state_ == other.state_ && (state_ != State::Value || atom_ == other.atom_);
    }

    std::string to_string() const;

private:
    State state_;
    std::string atom_;
};

using LatticeValue = std::variant<Interval, Env, FiniteSet, Flat>;

enum class ValueKind { Interval, Env, Set, Flat };

ValueKind kind_of(const LatticeValue& v);
const char* kind_name(ValueKind k);
LatticeValue bottom_value(ValueKind k);
bool is_bottom(const LatticeValue& v);

LatticeValue join(const LatticeValue& a, const LatticeValue& b);
bool leq(const LatticeValue& a, const LatticeValue& b);

/// Widening with the interval bound-jump rule; FiniteSet/Flat widen by join.
/// Requires leq(old_value, next).
LatticeValue widen(const LatticeValue& old_value, const LatticeValue& next);

/// Interval arithmetic lifted to LatticeValue; both sides must be intervals.
LatticeValue binop(ArithOp op, const LatticeValue& a, const LatticeValue& b);

std::string to_string(const LatticeValue& v);

/// Parse the textual value syntax (`bot`, `top`, `[lo,hi]`, `{a,b}`,
/// `env{x:[0,1]}`, `unreachable`, atoms) in the context of one lattice kind.
LatticeValue parse_value(std::string_view text, ValueKind kind);

}  // namespace fixlab

#endif  // FIXLAB_LATTICE_HPP
