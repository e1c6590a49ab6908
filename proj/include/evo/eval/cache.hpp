#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "evo/tensor.hpp"

namespace evo {

/// Cross-configuration value cache keyed by (node, selected-ancestor
/// sub-configuration). Values are deterministic, so the only concurrency
/// concern is computing a key once: the first thread claims the key and
/// others wait on it.
class EvalCache {
public:
  struct Entry {
    bool ok = false;
    std::shared_ptr<const Tensor> value;
    std::string error;
  };

  /// Returns the entry if present. Otherwise claims the key for this caller
  /// (returns nullopt) or blocks until the claiming thread publishes.
  std::optional<Entry> lookup_or_claim(const std::string& key) {
    std::unique_lock lock(mu_);
    for (;;) {
      auto it = slots_.find(key);
      if (it == slots_.end()) {
        slots_[key].state = Slot::Computing;
        return std::nullopt;  // caller must publish()
      }
      if (it->second.state == Slot::Ready) return it->second.entry;
      cv_.wait(lock);
    }
  }

  void publish(const std::string& key, Entry entry) {
    {
      std::lock_guard lock(mu_);
      Slot& s = slots_[key];
      s.entry = std::move(entry);
      s.state = Slot::Ready;
      ++computations_;
    }
    cv_.notify_all();
  }

  /// Number of distinct keys computed so far.
  long computations() const {
    std::lock_guard lock(mu_);
    return computations_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return slots_.size();
  }

private:
  struct Slot {
    enum State { Computing, Ready };
    State state = Computing;
    Entry entry;
  };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Slot> slots_;
  long computations_ = 0;
};

}  // namespace evo
