#ifndef FIXLAB_ATOMIC_RECORD_TABLE_HPP
#define FIXLAB_ATOMIC_RECORD_TABLE_HPP

#include <atomic>
#include <cstdint>
#include <vector>

#include "fixlab/eqsys.hpp"

namespace fixlab {

/// Thread-safe set of unknown ids: lock-free push, duplicates tolerated and
/// removed when the set is taken. take_all atomically returns-and-clears,
/// which also transfers node ownership to the taker, so nodes are freed
/// eagerly (adders never dereference another thread's nodes).
class InfluenceSet {
public:
    InfluenceSet() = default;
    InfluenceSet(const InfluenceSet&) = delete;
    InfluenceSet& operator=(const InfluenceSet&) = delete;

    ~InfluenceSet() { free_chain(head_.exchange(nullptr, std::memory_order_acquire)); }

    void add(std::uint32_t id) {
        Node* node = new Node{id, head_.load(std::memory_order_relaxed)};
        while (!head_.compare_exchange_weak(node->next, node, std::memory_order_acq_rel,
                                            std::memory_order_relaxed)) {
        }
    }

    /// Sorted, deduplicated snapshot; the set is left empty.
    std::vector<std::uint32_t> take_all();

private:
    struct Node {
        std::uint32_t id;
        Node* next;
    };
    static void free_chain(Node* node) {
        while (node) {
            Node* next = node->next;
            delete node;
            node = next;
        }
    }
    std::atomic<Node*> head_{nullptr};
};

/// One solver record: the transactional snapshot (swapped whole via CAS)
/// plus the influence set, which lives outside the transaction because it
/// takes writes from every reader. Snapshots are immutable once published.
struct Snapshot {
    LatticeValue value;
    std::uint32_t growth_count = 0;  // strictly growing side contributions
    bool stable = false;
    bool called = false;
    bool toplevel = false;
    bool widen_point = false;
};

struct AtomicRecord {
    explicit AtomicRecord(Unknown unknown) : u(unknown) {}

    Unknown u;
    std::atomic<const Snapshot*> snap{nullptr};
    InfluenceSet influences;
    std::atomic<std::int32_t> owner{-1};  // debug: worker holding the claim
};

/// Hash table from Unknown to records. Bucket count is fixed at start;
/// buckets are lock-free append-only linked queues (records are never
/// removed or replaced), so find_or_insert is linearizable and wait-free
/// for readers. Replaced snapshots are retired and reclaimed when the
/// table is destroyed.
class AtomicRecordTable {
public:
    AtomicRecordTable(const EquationSystem& sys, std::uint32_t buckets);
    ~AtomicRecordTable();

    AtomicRecordTable(const AtomicRecordTable&) = delete;
    AtomicRecordTable& operator=(const AtomicRecordTable&) = delete;

    /// Returns the unique record for u, creating it (value = bottom, globals
    /// born stable) on first use. Concurrent calls return the same handle.
    AtomicRecord& find_or_insert(Unknown u);

    /// Record for u or null; never blocks.
    const AtomicRecord* find(Unknown u) const;

    /// Publish a replacement snapshot; the old one is retired. Expects the
    /// caller to have won the CAS on the record.
    void retire(const Snapshot* old_snapshot);

    std::uint64_t size() const { return count_.load(std::memory_order_acquire); }

    /// Post-run, single-threaded iteration over every record.
    template <class Fn>
    void for_each(Fn&& fn) const {
        for (const auto& head : buckets_) {
            for (BucketNode* n = head.load(std::memory_order_acquire); n;
                 n = n->next.load(std::memory_order_acquire)) {
                fn(n->record);
            }
        }
    }

private:
    struct BucketNode {
        explicit BucketNode(Unknown u) : record(u) {}
        AtomicRecord record;
        std::atomic<BucketNode*> next{nullptr};
    };
    struct RetiredSnap {
        const Snapshot* snap;
        RetiredSnap* next;
    };

    std::size_t bucket_of(Unknown u) const {
        // Fibonacci hashing spreads consecutive ids across buckets.
        return (static_cast<std::uint64_t>(u.id) * 11400714819323198485ull) >> shift_;
    }

    const EquationSystem& sys_;
    std::vector<std::atomic<BucketNode*>> buckets_;
    unsigned shift_;
    std::atomic<std::uint64_t> count_{0};
    std::atomic<RetiredSnap*> retired_{nullptr};
};

}  // namespace fixlab

#endif  // FIXLAB_ATOMIC_RECORD_TABLE_HPP
