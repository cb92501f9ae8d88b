#ifndef FIXLAB_ERRORS_HPP
#define FIXLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fixlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Lattice operation on incompatible variants or value universes.
class DomainError : public Error {
public:
    using Error::Error;
};

// A caller violated a stated precondition (e.g. widen without old <= next).
class ContractError : public Error {
public:
    using Error::Error;
};

// Right-hand-side evaluation failed (unbound let variable and the like).
class EvalError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int col)
        : Error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg),
          line_(line),
          col_(col) {}

    int line() const { return line_; }
    int col() const { return col_; }

private:
    int line_;
    int col_;
};

// Ill-formed analysis input: missing right-hand side, bad roots, ...
class AnalysisError : public Error {
public:
    using Error::Error;
};

// The configured evaluation budget was exhausted before a fixpoint was found.
class BudgetError : public Error {
public:
    using Error::Error;
};

}  // namespace fixlab

#endif  // FIXLAB_ERRORS_HPP
