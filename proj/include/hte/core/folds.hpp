#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/rng.hpp"

namespace hte {

struct FoldAssignment {
    std::vector<int> fold_of;   // length n, entries in [0, k)
    int k = 0;

    std::size_t n() const { return fold_of.size(); }

    std::vector<std::size_t> fold_indices(int fold) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] == fold) idx.push_back(i);
        return idx;
    }

    std::vector<std::size_t> complement_indices(int fold) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] != fold) idx.push_back(i);
        return idx;
    }
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

} // namespace detail

// Assigns each index to one of k folds. Fold sizes differ by at most one.
// With stratification the arms are dealt round-robin with a continuing fold
// cursor, so per-arm fold counts also differ by at most one.
inline FoldAssignment make_folds(std::size_t n, int k,
                                 std::span<const int> stratify_by, RngStream& rng) {
    if (k < 2) throw ConfigError("make_folds: k must be >= 2");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("make_folds: k exceeds n");
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(n, -1);

    int cursor = 0;
    auto deal = [&](std::vector<std::size_t>& idx) {
        detail::shuffle_indices(idx, rng);
        for (std::size_t i : idx) {
            fa.fold_of[i] = cursor;
            cursor = (cursor + 1) % k;
        }
    };

    if (!stratify_by.empty()) {
        if (stratify_by.size() != n) throw ConfigError("make_folds: stratify length mismatch");
        std::vector<std::size_t> arm0, arm1;
        for (std::size_t i = 0; i < n; ++i) (stratify_by[i] == 0 ? arm0 : arm1).push_back(i);
        deal(arm1);
        deal(arm0);
    } else {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        deal(all);
    }
    return fa;
}

inline FoldAssignment make_folds(std::size_t n, int k, RngStream& rng) {
    return make_folds(n, k, std::span<const int>(), rng);
}

} // namespace hte
