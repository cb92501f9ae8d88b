#include <random>

#include "fixlab/eqsys.hpp"

namespace fixlab {

// Deterministic pseudo-random workload. Every draw happens in a fixed order,
// so equal seeds produce structurally equal systems.
SyntheticSystem generate_synthetic(std::uint64_t seed, int components, int chain_length,
                                   int globals_per_component, int work_factor) {
    if (components < 1 || chain_length < 1 || work_factor < 1 || globals_per_component < 0)
        throw AnalysisError("synthetic generator parameters must be positive");

    std::mt19937_64 rng(seed);
    auto small = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    EquationSystem sys;
    LatticeValue bot = Interval::empty();

    auto local_label = [](int c, int i) {
        return "c" + std::to_string(c) + ".n" + std::to_string(i);
    };
    auto global_label = [](int c, int k) {
        return "c" + std::to_string(c) + ".g" + std::to_string(k);
    };

    // Declare everything up front; chains reference predecessors only.
    for (int c = 0; c < components; c++) {
        for (int k = 0; k < globals_per_component; k++)
            sys.declare(global_label(c, k), UnknownKind::Global, bot);
        for (int i = 0; i < chain_length; i++)
            sys.declare(local_label(c, i), UnknownKind::Local, bot);
    }
    Unknown main_root;
    if (components > 1) main_root = sys.declare("main", UnknownKind::Local, bot);

    for (int c = 0; c < components; c++) {
        for (int i = 0; i < chain_length; i++) {
            Unknown self = *sys.table().find(local_label(c, i));

            // Source value: the predecessor for chain nodes, a constant for
            // the head. Bound via `let` so the recursive get happens before
            // the (potentially deep) arithmetic chain is evaluated.
            RhsPtr source;
            int base = small(0, 40);
            if (i == 0) {
                source = rhs::constant(Interval::constant(base));
            } else {
                source = rhs::get(*sys.table().find(local_label(c, i - 1)));
            }

            RhsPtr work = rhs::var("v");
            for (int w = 0; w < work_factor; w++) {
                ArithOp op = small(0, 1) == 0 ? ArithOp::Add : ArithOp::Sub;
                int amount = small(0, 3);
                work = rhs::binop(op, std::move(work),
                                  rhs::constant(Interval::constant(amount)));
            }

            std::vector<RhsPtr> effects;
            for (int k = 0; k < globals_per_component; k++) {
                Unknown g = *sys.table().find(global_label(c, k));
                effects.push_back(rhs::set(g, rhs::var("w")));
            }

            RhsPtr result = rhs::var("w");
            if (i == chain_length - 1 && globals_per_component > 0) {
                // Component roots read their globals back, closing the
                // side-effect feedback through destabilization.
                for (int k = 0; k < globals_per_component; k++) {
                    Unknown g = *sys.table().find(global_label(c, k));
                    result = rhs::join2(std::move(result), rhs::get(g));
                }
            }

            RhsPtr body;
            if (effects.empty()) {
                body = std::move(result);
            } else {
                effects.push_back(std::move(result));
                body = rhs::seq(std::move(effects));
            }
            RhsPtr full = rhs::let("v", std::move(source),
                                   rhs::let("w", std::move(work), std::move(body)));
            sys.set_rhs(self, std::move(full));
        }
    }

    std::vector<Unknown> roots;
    if (components > 1) {
        std::vector<RhsPtr> items;
        for (int c = 0; c < components; c++)
            items.push_back(rhs::demand(*sys.table().find(local_label(c, chain_length - 1))));
        items.push_back(rhs::constant(Interval::constant(0)));
        sys.set_rhs(main_root, rhs::seq(std::move(items)));
        roots.push_back(main_root);
    } else {
        roots.push_back(*sys.table().find(local_label(0, chain_length - 1)));
    }

    return {std::move(sys), std::move(roots)};
}

}  // namespace fixlab
