#pragma once

#include <cstddef>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

#include "dyntok/error.hpp"

namespace dyntok {

enum class CacheEvent { Hit, Miss, Evict };

// Thread-safe least-recently-used cache. The compute callback runs outside
// the lock, so two threads missing on the same key may both compute; the
// second insert just refreshes the entry.
template <typename Key, typename Value, typename Hash = std::hash<Key>>
class LruCache {
 public:
  using Observer = std::function<void(CacheEvent, const Key&)>;

  explicit LruCache(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw Error(ErrorCode::DomainError, "cache capacity must be at least 1");
  }

  LruCache(const LruCache&) = delete;
  LruCache& operator=(const LruCache&) = delete;

  void set_observer(Observer observer) {
    std::lock_guard lock(mu_);
    observer_ = std::move(observer);
  }

  std::size_t capacity() const noexcept { return capacity_; }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return map_.size();
  }

  bool contains(const Key& key) const {
    std::lock_guard lock(mu_);
    return map_.contains(key);
  }

  std::optional<Value> get(const Key& key) {
    std::lock_guard lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
  }

  void put(const Key& key, Value value) {
    std::lock_guard lock(mu_);
    insert_locked(key, std::move(value));
  }

  // Returns the cached value on a hit, refreshing its recency; otherwise runs
  // `compute`, inserts the result, and returns it. Exceptions from `compute`
  // propagate and nothing is cached.
  template <typename Compute>
  Value get_or_compute(const Key& key, Compute&& compute) {
    {
      std::lock_guard lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) {
        order_.splice(order_.begin(), order_, it->second);
        notify(CacheEvent::Hit, key);
        return it->second->second;
      }
      notify(CacheEvent::Miss, key);
    }
    Value value = std::forward<Compute>(compute)(key);
    std::lock_guard lock(mu_);
    insert_locked(key, value);
    return value;
  }

 private:
  using Entry = std::pair<Key, Value>;

  void notify(CacheEvent ev, const Key& key) {
    if (observer_) observer_(ev, key);
  }

  void insert_locked(const Key& key, Value value) {
    if (auto it = map_.find(key); it != map_.end()) {
      it->second->second = std::move(value);
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    if (map_.size() == capacity_) {
      const Key& victim = order_.back().first;
      notify(CacheEvent::Evict, victim);
      map_.erase(victim);
      order_.pop_back();
    }
    order_.emplace_front(key, std::move(value));
    map_.emplace(key, order_.begin());
  }

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;
  std::unordered_map<Key, typename std::list<Entry>::iterator, Hash> map_;
  Observer observer_;
};

}  // namespace dyntok
