#ifndef FIXLAB_WORK_POOL_HPP
#define FIXLAB_WORK_POOL_HPP

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <unordered_map>

namespace fixlab {

/// Thread-safe top-level workset. FIFO over ids with set semantics: adding a
/// present id is a no-op, re-adding after removal lands at the back, and
/// draining follows insertion order. A short critical section guards the
/// queue; pool traffic is per-task, not per-record, so it is cold compared
/// to the record table.
class WorkPool {
public:
    void add(std::uint32_t id) {
        std::lock_guard<std::mutex> lock(m_);
        if (in_.emplace(id, ++stamp_).second) queue_.push_back({id, stamp_});
    }

    void remove(std::uint32_t id) {
        std::lock_guard<std::mutex> lock(m_);
        in_.erase(id);
    }

    std::optional<std::uint32_t> try_pop() {
        std::lock_guard<std::mutex> lock(m_);
        scrub();
        if (queue_.empty()) return std::nullopt;
        std::uint32_t id = queue_.front().id;
        queue_.pop_front();
        in_.erase(id);
        return id;
    }

    bool empty() const {
        std::lock_guard<std::mutex> lock(m_);
        return in_.empty();
    }

private:
    struct Entry {
        std::uint32_t id;
        std::uint64_t stamp;
    };

    void scrub() {
        while (!queue_.empty()) {
            auto it = in_.find(queue_.front().id);
            if (it != in_.end() && it->second == queue_.front().stamp) break;
            queue_.pop_front();
        }
    }

    mutable std::mutex m_;
    std::deque<Entry> queue_;
    std::unordered_map<std::uint32_t, std::uint64_t> in_;
    std::uint64_t stamp_ = 0;
};

}  // namespace fixlab

#endif  // FIXLAB_WORK_POOL_HPP
