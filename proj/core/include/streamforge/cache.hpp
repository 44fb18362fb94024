#pragma once

#include <cstddef>
#include <vector>

#include "streamforge/errors.hpp"
#include "streamforge/linalg.hpp"

namespace streamforge {

// One cached context entry: the final clean x0 of a previously generated
// block. Never a noisy intermediate (clean KV prefill).
struct KVEntry {
    std::size_t block_index = 0;
    Mat feature;  // block_size x d
};

// Context store consumed by the causal student. Implementations must only
// ever hand out blocks older than the one being generated.
class ContextCache {
  public:
    virtual ~ContextCache() = default;
    virtual void insert(KVEntry entry) = 0;
    virtual std::vector<KVEntry> context() const = 0;
    virtual std::size_t size() const = 0;
    virtual void clear() = 0;
};

// Keeps everything; the training-time context policy.
class UnboundedCache final : public ContextCache {
  public:
    void insert(KVEntry entry) override {
        if (!entries_.empty() && entry.block_index <= entries_.back().block_index)
            throw ContractViolation("UnboundedCache: out-of-order insert");
        entries_.push_back(std::move(entry));
    }
    std::vector<KVEntry> context() const override { return entries_; }
    std::size_t size() const override { return entries_.size(); }
    void clear() override { entries_.clear(); }

  private:
    std::vector<KVEntry> entries_;
};

}  // namespace streamforge
