#ifndef FIXLAB_MS_QUEUE_HPP
#define FIXLAB_MS_QUEUE_HPP

#include <atomic>
#include <optional>
#include <utility>

namespace fixlab {

/// Michael-Scott two-pointer lock-free queue.
///
/// enqueue and try_dequeue are safe for concurrent multi-producer,
/// multi-consumer use. Dequeued nodes are retired, not freed, until the
/// queue is destroyed; that rules out ABA and use-after-free without hazard
/// pointers, at the cost of memory proportional to total traffic. Destruction
/// must not race with any other operation.
template <class T>
class MsQueue {
public:
    MsQueue() {
        Node* dummy = new Node();
        head_.store(dummy, std::memory_order_relaxed);
        tail_.store(dummy, std::memory_order_relaxed);
    }

    MsQueue(const MsQueue&) = delete;
    MsQueue& operator=(const MsQueue&) = delete;

    ~MsQueue() {
        Node* node = retired_.load(std::memory_order_relaxed);
        while (node) {
            Node* next = node->retired_next;
            delete node;
            node = next;
        }
        node = head_.load(std::memory_order_relaxed);
        while (node) {
            Node* next = node->next.load(std::memory_order_relaxed);
            delete node;
            node = next;
        }
    }

    void enqueue(T value) {
        Node* node = new Node(std::move(value));
        for (;;) {
            Node* last = tail_.load(std::memory_order_acquire);
            Node* next = last->next.load(std::memory_order_acquire);
            if (last != tail_.load(std::memory_order_acquire)) continue;
            if (next == nullptr) {
                if (last->next.compare_exchange_weak(next, node, std::memory_order_acq_rel,
                                                     std::memory_order_relaxed)) {
                    tail_.compare_exchange_strong(last, node, std::memory_order_acq_rel,
                                                  std::memory_order_relaxed);
                    return;
                }
            } else {
                // Help a lagging enqueuer swing the tail forward.
                tail_.compare_exchange_strong(last, next, std::memory_order_acq_rel,
                                              std::memory_order_relaxed);
            }
        }
    }

    std::optional<T> try_dequeue() {
        for (;;) {
            Node* first = head_.load(std::memory_order_acquire);
            Node* last = tail_.load(std::memory_order_acquire);
            Node* next = first->next.load(std::memory_order_acquire);
            if (first != head_.load(std::memory_order_acquire)) continue;
            if (first == last) {
                if (next == nullptr) return std::nullopt;
                tail_.compare_exchange_strong(last, next, std::memory_order_acq_rel,
                                              std::memory_order_relaxed);
                continue;
            }
            T value = next->value;
            if (head_.compare_exchange_weak(first, next, std::memory_order_acq_rel,
                                            std::memory_order_relaxed)) {
                retire(first);
                return value;
            }
        }
    }

    /// Approximate: exact only while producers are quiescent.
    bool empty() const {
        Node* first = head_.load(std::memory_order_acquire);
        return first->next.load(std::memory_order_acquire) == nullptr;
    }

private:
    struct Node {
        T value{};
        std::atomic<Node*> next{nullptr};
        Node* retired_next = nullptr;

        Node() = default;
        explicit Node(T v) : value(std::move(v)) {}
    };

    void retire(Node* node) {
        Node* old = retired_.load(std::memory_order_relaxed);
        do {
            node->retired_next = old;
        } while (!retired_.compare_exchange_weak(old, node, std::memory_order_acq_rel,
                                                 std::memory_order_relaxed));
    }

    std::atomic<Node*> head_{nullptr};
    std::atomic<Node*> tail_{nullptr};
    std::atomic<Node*> retired_{nullptr};
};

}  // namespace fixlab

#endif  // FIXLAB_MS_QUEUE_HPP
