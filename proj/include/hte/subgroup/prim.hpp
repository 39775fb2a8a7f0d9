#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/subgroup/rules.hpp"

namespace hte {

struct PrimOptions {
    double alpha = 0.05;        // peel fraction per step
    double min_support = 0.10;  // of the original sample
    int max_boxes = 3;
};

namespace detail {

struct PrimState {
    std::vector<double> lower, upper;
    std::vector<std::size_t> inside;   // row indices currently in the box
};

inline double mean_target(std::span<const double> target,
                          const std::vector<std::size_t>& idx) {
    if (idx.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t i : idx) s += target[i];
    return s / static_cast<double>(idx.size());
}

// One greedy peel: removes the alpha-fraction strip (either side of any
// feature) that leaves the highest remaining mean. Returns false when no
// strip improves the mean or the support floor would be crossed.
inline bool peel_once(const Matrix& x, std::span<const double> target,
                      const PrimOptions& opt, std::size_t n_total, PrimState& box) {
    const std::size_t m = box.inside.size();
    const std::size_t strip =
        std::max<std::size_t>(1, static_cast<std::size_t>(opt.alpha * static_cast<double>(m)));
    if (m <= strip) return false;
    if (static_cast<double>(m - strip) <
        opt.min_support * static_cast<double>(n_total))
        return false;

    const double current = mean_target(target, box.inside);
    double best_mean = current;
    int best_feature = -1;
    bool best_low_side = true;
    double best_bound = 0.0;

    std::vector<double> values(m);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t k = 0; k < m; ++k) values[k] = x(box.inside[k], j);
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() == sorted.back()) continue;

        // Low strip: x_j < cut; ties at the cut stay inside.
        {
            const double cut = sorted[strip];
            if (cut > sorted.front()) {
                double sum = 0.0;
                std::size_t kept = 0;
                for (std::size_t k = 0; k < m; ++k)
                    if (values[k] >= cut) {
                        sum += target[box.inside[k]];
                        ++kept;
                    }
                if (kept >= 1 &&
                    static_cast<double>(kept) >=
                        opt.min_support * static_cast<double>(n_total)) {
                    const double mean = sum / static_cast<double>(kept);
                    if (mean > best_mean) {
                        best_mean = mean;
                        best_feature = static_cast<int>(j);
                        best_low_side = true;
                        best_bound = cut;
                    }
                }
            }
        }
        // High strip: x_j > cut.
        {
            const double cut = sorted[m - 1 - strip];
            if (cut < sorted.back()) {
                double sum = 0.0;
                std::size_t kept = 0;
                for (std::size_t k = 0; k < m; ++k)
                    if (values[k] <= cut) {
                        sum += target[box.inside[k]];
                        ++kept;
                    }
                if (kept >= 1 &&
                    static_cast<double>(kept) >=
                        opt.min_support * static_cast<double>(n_total)) {
                    const double mean = sum / static_cast<double>(kept);
                    if (mean > best_mean) {
                        best_mean = mean;
                        best_feature = static_cast<int>(j);
                        best_low_side = false;
                        best_bound = cut;
                    }
                }
            }
        }
    }
    if (best_feature < 0) return false;

    std::vector<std::size_t> kept;
    for (std::size_t i : box.inside) {
        const double v = x(i, best_feature);
        if (best_low_side ? v >= best_bound : v <= best_bound) kept.push_back(i);
    }
    box.inside = std::move(kept);
    if (best_low_side)
        box.lower[best_feature] = std::max(box.lower[best_feature], best_bound);
    else
        box.upper[best_feature] = std::min(box.upper[best_feature], best_bound);
    return true;
}

// Pasting re-expands a face while the box mean strictly increases. Candidate
// extensions re-admit the nearest alpha-fraction of outside points along one
// feature, keeping all other bounds.
inline bool paste_once(const Matrix& x, std::span<const double> target,
                       const std::vector<std::size_t>& candidates,
                       const PrimOptions& opt, PrimState& box) {
    const std::size_t m = box.inside.size();
    const std::size_t grow =
        std::max<std::size_t>(1, static_cast<std::size_t>(opt.alpha * static_cast<double>(m)));
    const double current = mean_target(target, box.inside);

    auto inside_except = [&](std::size_t i, std::size_t skip_feature) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j == skip_feature) continue;
            const double v = x(i, j);
            if (v < box.lower[j] || v > box.upper[j]) return false;
        }
        return true;
    };

    double best_mean = current;
    int best_feature = -1;
    bool best_low_side = true;
    double best_bound = 0.0;

    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (int side = 0; side < 2; ++side) {
            const bool low = side == 0;
            const double bound = low ? box.lower[j] : box.upper[j];
            if (!std::isfinite(bound)) continue;
            // Outside points beyond this face, respecting the other bounds.
            std::vector<std::pair<double, std::size_t>> beyond;
            for (std::size_t i : candidates) {
                const double v = x(i, j);
                const bool outside = low ? v < bound : v > bound;
                if (outside && inside_except(i, j)) beyond.push_back({v, i});
            }
            if (beyond.empty()) continue;
            std::sort(beyond.begin(), beyond.end());
            if (!low) std::reverse(beyond.begin(), beyond.end());
            const std::size_t add = std::min(grow, beyond.size());
            double sum = 0.0;
            for (std::size_t i : box.inside) sum += target[i];
            for (std::size_t k = 0; k < add; ++k) sum += target[beyond[k].second];
            const double mean = sum / static_cast<double>(m + add);
            if (mean > best_mean) {
                best_mean = mean;
                best_feature = static_cast<int>(j);
                best_low_side = low;
                best_bound = beyond[add - 1].first;
            }
        }
    }
    if (best_feature < 0) return false;

    if (best_low_side)
        box.lower[best_feature] = best_bound;
    else
        box.upper[best_feature] = best_bound;
    std::vector<std::size_t> inside;
    for (std::size_t i : candidates) {
        bool in = true;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            if (v < box.lower[j] || v > box.upper[j]) {
                in = false;
                break;
            }
        }
        if (in) inside.push_back(i);
    }
    box.inside = std::move(inside);
    return true;
}

} // namespace detail

// Patient rule induction: greedy peeling of quantile strips followed by
// pasting, repeated on the complement for up to max_boxes boxes. The
// subgroup is the union of boxes with positive mean target.
inline SubgroupRule prim(const Matrix& x, std::span<const double> target,
                         const PrimOptions& opt,
                         const std::vector<std::string>& feature_names = {}) {
    if (x.rows() == 0) throw DataError("prim: empty data");
    if (target.size() != x.rows()) throw DataError("prim: target length mismatch");
    if (!(opt.alpha > 0.0 && opt.alpha < 0.5))
        throw ConfigError("prim: alpha must lie in (0, 0.5)");
    if (!(opt.min_support > 0.0 && opt.min_support < 1.0))
        throw ConfigError("prim: min_support must lie in (0,1)");

    const std::size_t n = x.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> remaining(n);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = i;

    SubgroupRule rule;
    rule.representation = SubgroupRule::Rep::PrimBoxes;
    rule.feature_names = feature_names;

    for (int b = 0; b < opt.max_boxes; ++b) {
        if (static_cast<double>(remaining.size()) <
            opt.min_support * static_cast<double>(n))
            break;
        detail::PrimState box;
        box.lower.assign(x.cols(), -inf);
        box.upper.assign(x.cols(), inf);
        box.inside = remaining;

        while (detail::peel_once(x, target, opt, n, box)) {}
        while (detail::paste_once(x, target, remaining, opt, box)) {}

        PrimBox out;
        out.lower = box.lower;
        out.upper = box.upper;
        out.support = static_cast<double>(box.inside.size()) / static_cast<double>(n);
        out.mean_target = detail::mean_target(target, box.inside);
        rule.boxes.push_back(out);

        // Next box searches the complement.
        std::vector<char> in_box(n, 0);
        for (std::size_t i : box.inside) in_box[i] = 1;
        std::vector<std::size_t> next;
        for (std::size_t i : remaining)
            if (!in_box[i]) next.push_back(i);
        if (next.size() == remaining.size()) break;   // nothing was carved out
        remaining = std::move(next);
        if (remaining.empty()) break;
    }

    // Membership clauses from the positive-mean boxes.
    for (const auto& box : rule.boxes) {
        if (!(box.mean_target > 0.0)) continue;
        std::vector<Condition> clause;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (std::isfinite(box.lower[j]))
                clause.push_back(Condition{static_cast<int>(j), Condition::Op::Ge,
                                           box.lower[j]});
            if (std::isfinite(box.upper[j]))
                clause.push_back(Condition{static_cast<int>(j), Condition::Op::Le,
                                           box.upper[j]});
        }
        rule.clauses.push_back(std::move(clause));
    }
    return rule;
}

} // namespace hte
