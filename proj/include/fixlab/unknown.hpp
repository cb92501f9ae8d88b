#ifndef FIXLAB_UNKNOWN_HPP
#define FIXLAB_UNKNOWN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fixlab/errors.hpp"

namespace fixlab {

enum class UnknownKind { Local, Global };

/// Constraint variable handle. Identity is an index into the owning
/// system's UnknownTable; labels exist for display and file formats.
struct Unknown {
    std::uint32_t id = UINT32_MAX;

    bool valid() const { return id != UINT32_MAX; }
    friend bool operator==(Unknown a, Unknown b) { return a.id == b.id; }
    friend bool operator!=(Unknown a, Unknown b) { return a.id != b.id; }
    friend bool operator<(Unknown a, Unknown b) { return a.id < b.id; }
};

/// Interning table: equal labels yield the identical id. Immutable once the
/// system is built, so solvers can share it across workers without locking.
class UnknownTable {
public:
    Unknown intern(std::string label, UnknownKind kind) {
        auto it = by_label_.find(label);
        if (it != by_label_.end()) {
            Unknown u{it->second};
            if (kinds_[u.id] != kind)
                throw AnalysisError("unknown '" + label + "' declared with conflicting kinds");
            return u;
        }
        Unknown u{static_cast<std::uint32_t>(labels_.size())};
        by_label_.emplace(label, u.id);
        labels_.push_back(std::move(label));
        kinds_.push_back(kind);
        return u;
    }

    std::optional<Unknown> find(std::string_view label) const {
        auto it = by_label_.find(std::string(label));
        if (it == by_label_.end()) return std::nullopt;
        return Unknown{it->second};
    }

    const std::string& label(Unknown u) const { return labels_.at(u.id); }
    UnknownKind kind(Unknown u) const { return kinds_.at(u.id); }
    std::size_t size() const { return labels_.size(); }

private:
    std::vector<std::string> labels_;
    std::vector<UnknownKind> kinds_;
    std::unordered_map<std::string, std::uint32_t> by_label_;
};

struct UnknownHash {
    std::size_t operator()(Unknown u) const { return std::hash<std::uint32_t>()(u.id); }
};

}  // namespace fixlab

#endif  // FIXLAB_UNKNOWN_HPP
