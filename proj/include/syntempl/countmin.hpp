#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

#include "syntempl/util.hpp"

namespace syntempl {

// Count-min sketch used as a first-pass prefilter for huge corpora. Estimates
// only ever overestimate, so dropping n-grams with estimate < tau can never
// lose a true template.
class CountMinSketch {
  public:
    CountMinSketch(size_t width, size_t depth, uint64_t seed = 0x5eed)
        : width_(width), depth_(depth), table_(width * depth, 0) {
        uint64_t h = seed;
        for (size_t i = 0; i < depth_; ++i) {
            h = h * 6364136223846793005ULL + 1442695040888963407ULL;
            salts_.push_back(h | 1);
        }
    }

    void add(std::string_view key, uint64_t count = 1) {
        for (size_t i = 0; i < depth_; ++i) table_[slot(i, key)] += count;
    }

    uint64_t estimate(std::string_view key) const {
        uint64_t best = UINT64_MAX;
        for (size_t i = 0; i < depth_; ++i) best = std::min(best, table_[slot(i, key)]);
        return best;
    }

    size_t width() const { return width_; }
    size_t depth() const { return depth_; }

  private:
    size_t slot(size_t row, std::string_view key) const {
        return row * width_ + fnv1a64(key, salts_[row]) % width_;
    }

    size_t width_;
    size_t depth_;
    std::vector<uint64_t> table_;
    std::vector<uint64_t> salts_;
};

}  // namespace syntempl
