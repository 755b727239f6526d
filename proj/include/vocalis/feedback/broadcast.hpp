#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace vocalis::feedback {

inline constexpr std::size_t kSubscriberCapacity = 1024;

// Bounded per-subscriber queue. Overflow disconnects the subscriber.
template <class T>
class Subscription {
public:
    explicit Subscription(std::size_t capacity = kSubscriberCapacity) : capacity_(capacity) {}

    // Called from the publisher after each successful push.
    void set_notify(std::function<void()> notify) {
        std::lock_guard lock(mutex_);
        notify_ = std::move(notify);
    }

    bool push(const T& value) {
        std::function<void()> notify;
        {
            std::lock_guard lock(mutex_);
            if (closed_) return false;
            if (queue_.size() >= capacity_) {
                closed_ = true;
                overflowed_ = true;
                cv_.notify_all();
                notify = notify_;
            } else {
                queue_.push_back(value);
                cv_.notify_all();
                notify = notify_;
            }
        }
        if (notify) notify();
        return !overflowed();
    }

    std::optional<T> try_pop() {
        std::lock_guard lock(mutex_);
        if (queue_.empty()) return std::nullopt;
        T v = std::move(queue_.front());
        queue_.pop_front();
        return v;
    }

    // Waits until an item arrives, the subscription closes, or the timeout passes.
    std::optional<T> pop_for(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return std::nullopt;
        T v = std::move(queue_.front());
        queue_.pop_front();
        return v;
    }

    std::vector<T> drain() {
        std::lock_guard lock(mutex_);
        std::vector<T> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
        queue_.clear();
        return out;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

    bool overflowed() const {
        std::lock_guard lock(mutex_);
        return overflowed_;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return queue_.size();
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> queue_;
    std::size_t capacity_;
    bool closed_ = false;
    bool overflowed_ = false;
    std::function<void()> notify_;
};

// Fan-out to every live subscription; publishing never waits on a subscriber.
template <class T>
class Broadcaster {
public:
    std::shared_ptr<Subscription<T>> subscribe(std::size_t capacity = kSubscriberCapacity) {
        auto sub = std::make_shared<Subscription<T>>(capacity);
        std::lock_guard lock(mutex_);
        subscribers_.push_back(sub);
        return sub;
    }

    void publish(const T& value) {
        std::vector<std::shared_ptr<Subscription<T>>> targets;
        {
            std::lock_guard lock(mutex_);
            targets = subscribers_;
        }
        bool dropped = false;
        for (const auto& s : targets) {
            if (!s->push(value)) dropped = true;
        }
        if (dropped) prune();
    }

    void close_all() {
        std::lock_guard lock(mutex_);
        for (const auto& s : subscribers_) s->close();
        subscribers_.clear();
    }

    std::size_t subscriber_count() {
        prune();
        std::lock_guard lock(mutex_);
        return subscribers_.size();
    }

private:
    void prune() {
        std::lock_guard lock(mutex_);
        std::erase_if(subscribers_, [](const auto& s) { return s->closed(); });
    }

    std::mutex mutex_;
    std::vector<std::shared_ptr<Subscription<T>>> subscribers_;
};

} // namespace vocalis::feedback
