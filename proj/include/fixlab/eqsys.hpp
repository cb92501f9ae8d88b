#ifndef FIXLAB_EQSYS_HPP
#define FIXLAB_EQSYS_HPP

#include <memory>
#include <string>
#include <vector>

#include "fixlab/rhs.hpp"
#include "fixlab/unknown.hpp"

namespace fixlab {

/// A side-effecting equation system: right-hand sides for Local unknowns,
/// Globals that only accumulate contributions, and per-unknown bottom values
/// (systems may mix lattices, e.g. Env locals with Interval globals).
/// Immutable once built; safe to share across solver workers.
class EquationSystem {
public:
    Unknown declare(std::string label, UnknownKind kind, LatticeValue bottom) {
        Unknown u = table_.intern(std::move(label), kind);
        if (u.id == bottoms_.size()) {  // ids are interned densely
            bottoms_.push_back(std::move(bottom));
            rhs_.emplace_back();
        }
        return u;
    }

    void set_rhs(Unknown u, RhsPtr e) {
        if (table_.kind(u) == UnknownKind::Global)
            throw AnalysisError("global '" + table_.label(u) + "' cannot have a right-hand side");
        if (rhs_.at(u.id))
            throw AnalysisError("duplicate right-hand side for '" + table_.label(u) + "'");
        rhs_[u.id] = std::move(e);
    }

    bool is_global(Unknown u) const { return table_.kind(u) == UnknownKind::Global; }

    /// Null for globals and for locals that were declared without a rhs.
    const RhsExpr* rhs(Unknown u) const {
        return u.id < rhs_.size() ? rhs_[u.id].get() : nullptr;
    }
    RhsPtr rhs_ptr(Unknown u) const { return u.id < rhs_.size() ? rhs_[u.id] : nullptr; }

    const LatticeValue& bottom_of(Unknown u) const { return bottoms_.at(u.id); }

    const UnknownTable& table() const { return table_; }
    const std::string& label(Unknown u) const { return table_.label(u); }
    std::size_t size() const { return table_.size(); }

    std::vector<Unknown> all_unknowns() const {
        std::vector<Unknown> out;
        out.reserve(table_.size());
        for (std::uint32_t i = 0; i < table_.size(); i++) out.push_back(Unknown{i});
        return out;
    }

    bool expression_only() const {
        for (std::uint32_t i = 0; i < rhs_.size(); i++) {
            if (rhs_[i] && !is_expression_only(*rhs_[i])) return false;
        }
        return true;
    }

private:
    UnknownTable table_;
    std::vector<RhsPtr> rhs_;
    std::vector<LatticeValue> bottoms_;
};

/// Parse the equation-system file format. All referenced unknowns must be
/// declared; set targets must be globals and demand targets locals.
EquationSystem parse_system(std::string_view text);

/// Inverse of parse_system modulo whitespace. Throws on Transfer nodes.
std::string serialize_system(const EquationSystem& sys);

/// FNV-1a over the canonical serialization, as a stable system identity.
std::string system_fingerprint(const EquationSystem& sys);
std::string text_fingerprint(std::string_view text);

struct SyntheticSystem {
    EquationSystem system;
    std::vector<Unknown> roots;
};

/// Deterministic synthetic workload: `components` disjoint chains of locals
/// over the interval lattice, each chain node doing `work_factor` binops and
/// side-effecting its component's globals; component roots read those globals
/// back. With more than one component a main root demands every chain root.
SyntheticSystem generate_synthetic(std::uint64_t seed, int components, int chain_length,
                                   int globals_per_component, int work_factor);

}  // namespace fixlab

#endif  // FIXLAB_EQSYS_HPP
