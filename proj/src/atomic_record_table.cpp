#include <algorithm>
#include <bit>

#include "fixlab/atomic_record_table.hpp"

namespace fixlab {

std::vector<std::uint32_t> InfluenceSet::take_all() {
    Node* chain = head_.exchange(nullptr, std::memory_order_acq_rel);
    std::vector<std::uint32_t> out;
    for (Node* n = chain; n; n = n->next) out.push_back(n->id);
    free_chain(chain);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

AtomicRecordTable::AtomicRecordTable(const EquationSystem& sys, std::uint32_t buckets)
    : sys_(sys) {
    if (buckets < 2 || (buckets & (buckets - 1)) != 0)
        throw ContractError("record table bucket count must be a power of two >= 2");
    buckets_ = std::vector<std::atomic<BucketNode*>>(buckets);
    shift_ = 64 - static_cast<unsigned>(std::countr_zero(static_cast<std::uint64_t>(buckets)));
}

AtomicRecordTable::~AtomicRecordTable() {
    for (RetiredSnap* r = retired_.load(std::memory_order_relaxed); r;) {
        RetiredSnap* next = r->next;
        delete r->snap;
        delete r;
        r = next;
    }
    for (auto& head : buckets_) {
        BucketNode* n = head.load(std::memory_order_relaxed);
        while (n) {
            BucketNode* next = n->next.load(std::memory_order_relaxed);
            delete n->record.snap.load(std::memory_order_relaxed);
            delete n;
            n = next;
        }
    }
}

AtomicRecord& AtomicRecordTable::find_or_insert(Unknown u) {
    std::atomic<BucketNode*>& head = buckets_[bucket_of(u)];
    BucketNode* candidate = nullptr;

    auto make_candidate = [&]() {
        if (candidate) return;
        candidate = new BucketNode(u);
        auto* snap = new Snapshot();
        snap->value = sys_.bottom_of(u);
        // Globals have no rhs to iterate; they are born stable and side()
        // keeps them included in the result set.
        snap->stable = sys_.is_global(u);
        candidate->record.snap.store(snap, std::memory_order_release);
    };

    BucketNode* cur = head.load(std::memory_order_acquire);
    if (!cur) {
        make_candidate();
        BucketNode* expected = nullptr;
        if (head.compare_exchange_strong(expected, candidate, std::memory_order_acq_rel,
                                         std::memory_order_acquire)) {
            count_.fetch_add(1, std::memory_order_relaxed);
            return candidate->record;
        }
        cur = expected;  // lost the race; walk from the installed head
    }

    for (;;) {
        if (cur->record.u == u) {
            if (candidate) {
                delete candidate->record.snap.load(std::memory_order_relaxed);
                delete candidate;
            }
            return cur->record;
        }
        BucketNode* next = cur->next.load(std::memory_order_acquire);
        if (next) {
            cur = next;
            continue;
        }
        make_candidate();
        BucketNode* expected = nullptr;
        if (cur->next.compare_exchange_strong(expected, candidate, std::memory_order_acq_rel,
                                              std::memory_order_acquire)) {
            count_.fetch_add(1, std::memory_order_relaxed);
            return candidate->record;
        }
        cur = expected;  // another insert landed here; keep walking
    }
}

const AtomicRecord* AtomicRecordTable::find(Unknown u) const {
    for (BucketNode* n = buckets_[bucket_of(u)].load(std::memory_order_acquire); n;
         n = n->next.load(std::memory_order_acquire)) {
        if (n->record.u == u) return &n->record;
    }
    return nullptr;
}

void AtomicRecordTable::retire(const Snapshot* old_snapshot) {
    auto* r = new RetiredSnap{old_snapshot, retired_.load(std::memory_order_relaxed)};
    while (!retired_.compare_exchange_weak(r->next, r, std::memory_order_acq_rel,
                                           std::memory_order_relaxed)) {
    }
}

}  // namespace fixlab
