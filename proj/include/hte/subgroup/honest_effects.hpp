#pragma once
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hte/core/dataset.hpp"
#include "hte/core/folds.hpp"
#include "hte/core/rng.hpp"
#include "hte/subgroup/rules.hpp"

namespace hte {

using SubgroupSearch = std::function<SubgroupRule(const Dataset&, RngStream&)>;

enum class SubgroupEffectKind { ArmMeanDiff, ScoreMean };

// How "treatment effect within a subgroup" is measured: difference of arm
// means (randomized designs) or the mean of per-row scores such as AIPW
// pseudo-outcomes (observational designs).
struct EffectSpec {
    SubgroupEffectKind kind = SubgroupEffectKind::ArmMeanDiff;
    std::vector<double> scores;   // aligned with the dataset rows for ScoreMean

    std::string tag() const {
        return kind == SubgroupEffectKind::ArmMeanDiff ? "arm_mean_diff" : "score_mean";
    }
};

struct SubgroupEffects {
    double naive = std::numeric_limits<double>::quiet_NaN();
    double corrected = std::numeric_limits<double>::quiet_NaN();
    std::string method;
    std::string effect_kind;
    int B = 0;
    int skipped = 0;
    bool warn_high_skip = false;
    bool warn_low_b = false;
    bool spurious = false;                 // naive > 0 but corrected < 0
    std::vector<double> theta_k;           // candidate-family effects (guo-he)
    std::size_t selected = 0;
    double lower_confidence = std::numeric_limits<double>::quiet_NaN();

    nlohmann::json to_json() const {
        nlohmann::json j{{"naive", naive},       {"corrected", corrected},
                         {"method", method},     {"effect_kind", effect_kind},
                         {"B", B},               {"skipped", skipped},
                         {"warn_high_skip", warn_high_skip},
                         {"warn_low_b", warn_low_b},
                         {"spurious", spurious}};
        if (!theta_k.empty()) {
            j["theta_k"] = theta_k;
            j["selected"] = selected;
        }
        if (std::isfinite(lower_confidence)) j["lower_confidence"] = lower_confidence;
        return j;
    }
};

namespace detail {

// Effect within the flagged rows; nullopt when the subgroup is empty or an
// arm is missing.
inline std::optional<double> effect_in_subgroup(const Dataset& data,
                                                std::span<const std::size_t> rows,
                                                const SubgroupRule& rule,
                                                const EffectSpec& spec) {
    double s1 = 0.0, s0 = 0.0, score_sum = 0.0;
    std::size_t n1 = 0, n0 = 0, members = 0;
    for (std::size_t i : rows) {
        if (!rule.contains(data.x.row(i))) continue;
        ++members;
        if (spec.kind == SubgroupEffectKind::ScoreMean) {
            score_sum += spec.scores[i];
        } else if (data.t[i] == 1) {
            s1 += data.y[i];
            ++n1;
        } else {
            s0 += data.y[i];
            ++n0;
        }
    }
    if (spec.kind == SubgroupEffectKind::ScoreMean) {
        if (members == 0) return std::nullopt;
        return score_sum / static_cast<double>(members);
    }
    if (n1 == 0 || n0 == 0) return std::nullopt;
    return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

} // namespace detail

// Bootstrap optimism correction: each resample re-runs the search, and the
// in-sample minus out-of-sample effect difference estimates the selection
// bias, which is subtracted from the naive estimate.
inline SubgroupEffects bootstrap_bias_correction(const Dataset& data,
                                                 const SubgroupSearch& search, int B,
                                                 RngStream& rng,
                                                 const EffectSpec& spec = {}) {
    if (B < 1) throw ConfigError("bootstrap_bias_correction: B must be >= 1");
    const std::size_t n = data.n();
    const auto everything = detail::all_rows(n);

    SubgroupEffects out;
    out.method = "bootstrap_optimism";
    out.effect_kind = spec.tag();
    out.B = B;
    out.warn_low_b = B < 50;

    RngStream search_rng = rng.substream(0);
    const SubgroupRule naive_rule = search(data, search_rng);
    const auto naive = detail::effect_in_subgroup(data, everything, naive_rule, spec);
    if (!naive)
        throw DataError("bootstrap_bias_correction: naive subgroup effect undefined");
    out.naive = *naive;

    double bias_sum = 0.0;
    int used = 0;
    for (int b = 1; b <= B; ++b) {
        RngStream rep_rng = rng.substream(static_cast<std::uint64_t>(b));
        std::vector<std::size_t> idx(n);
        std::vector<char> drawn(n, 0);
        for (std::size_t k = 0; k < n; ++k) {
            idx[k] = rep_rng.uniform_below(n);
            drawn[idx[k]] = 1;
        }
        Dataset boot;
        try {
            boot = data.take_rows(idx);
        } catch (const DataError&) {
            ++out.skipped;   // resample lost an arm entirely
            continue;
        }
        EffectSpec boot_spec = spec;
        if (spec.kind == SubgroupEffectKind::ScoreMean) boot_spec.scores = take(spec.scores, idx);

        RngStream boot_search = rep_rng.substream(1);
        const SubgroupRule rule_b = search(boot, boot_search);

        std::vector<std::size_t> oob;
        for (std::size_t i = 0; i < n; ++i)
            if (!drawn[i]) oob.push_back(i);
        const auto in_sample =
            detail::effect_in_subgroup(boot, detail::all_rows(n), rule_b, boot_spec);
        const auto out_sample = detail::effect_in_subgroup(data, oob, rule_b, spec);
        if (!in_sample || !out_sample) {
            ++out.skipped;
            continue;
        }
        bias_sum += *in_sample - *out_sample;
        ++used;
    }
    if (used == 0)
        throw DataError("bootstrap_bias_correction: every replicate was skipped");
    out.warn_high_skip = out.skipped * 5 > B;   // > 20% skips
    out.corrected = out.naive - bias_sum / static_cast<double>(used);
    out.spurious = out.naive > 0.0 && out.corrected < 0.0;
    return out;
}

// Cross-validation adjusted subgroup effect: per repeat, each fold is
// classified by a rule trained on the other folds; the union of test-fold
// positives defines the subgroup whose effect is measured. Reported as the
// mean over repeats.
inline SubgroupEffects cv_adjusted_subgroup(const Dataset& data,
                                            const SubgroupSearch& search, int folds,
                                            int repeats, RngStream& rng,
                                            const EffectSpec& spec = {}) {
    if (folds < 2) throw ConfigError("cv_adjusted_subgroup: need at least 2 folds");
    if (repeats < 1) throw ConfigError("cv_adjusted_subgroup: need at least 1 repeat");
    const std::size_t n = data.n();

    SubgroupEffects out;
    out.method = "cv_adjusted";
    out.effect_kind = spec.tag();
    out.B = repeats;

    RngStream naive_rng = rng.substream(0);
    const SubgroupRule naive_rule = search(data, naive_rng);
    const auto naive =
        detail::effect_in_subgroup(data, detail::all_rows(n), naive_rule, spec);
    if (naive) out.naive = *naive;

    double total = 0.0;
    int used = 0;
    for (int r = 0; r < repeats; ++r) {
        RngStream rep_rng = rng.substream(0x100u + static_cast<std::uint64_t>(r));
        RngStream fold_rng = rep_rng.substream(0);
        const FoldAssignment fa = make_folds(n, folds, data.t, fold_rng);

        std::vector<std::size_t> positive;
        for (int f = 0; f < fa.k; ++f) {
            const auto train_idx = fa.complement_indices(f);
            const Dataset train = data.take_rows(train_idx);
            RngStream fold_search = rep_rng.substream(1 + static_cast<std::uint64_t>(f));
            const SubgroupRule rule = search(train, fold_search);
            for (std::size_t i : fa.fold_indices(f))
                if (rule.contains(data.x.row(i))) positive.push_back(i);
        }
        if (positive.empty()) {
            ++out.skipped;
            continue;
        }
        SubgroupRule all;
        all.clauses.push_back({});   // membership restricted via the row list
        const auto eff = detail::effect_in_subgroup(data, positive, all, spec);
        if (!eff) {
            ++out.skipped;
            continue;
        }
        total += *eff;
        ++used;
    }
    if (used == 0)
        throw DataError("cv_adjusted_subgroup: every repeat produced an empty subgroup");
    out.corrected = total / static_cast<double>(used);
    out.spurious = std::isfinite(out.naive) && out.naive > 0.0 && out.corrected < 0.0;
    return out;
}

// Shrunken-bootstrap estimator for the maximal effect among K pre-defined
// candidate subgroups. Bootstrap estimates are pulled towards the
// homogeneity null by d_k = (1 - n^{r-1/2})(theta_max - theta_k) before
// taking the max; the winner receives no adjustment. The lower confidence
// limit uses the reverse-percentile construction on the adjusted maxima.
inline SubgroupEffects guo_he_max_subgroup(
    std::span<const double> theta_hat,
    const std::function<std::vector<double>(RngStream&)>& resampler, std::size_t n,
    double r, int B, RngStream& rng, double alpha = 0.05) {
    const std::size_t K = theta_hat.size();
    if (K < 2) throw ConfigError("guo_he_max_subgroup: need at least 2 subgroups");
    if (!(r > 0.0 && r < 0.5))
        throw ConfigError("guo_he_max_subgroup: r must lie in (0, 0.5)");
    if (B < 1) throw ConfigError("guo_he_max_subgroup: B must be >= 1");

    SubgroupEffects out;
    out.method = "guo_he";
    out.effect_kind = "candidate_family";
    out.B = B;
    out.warn_low_b = B < 50;
    out.theta_k.assign(theta_hat.begin(), theta_hat.end());

    std::size_t s = 0;
    for (std::size_t k = 1; k < K; ++k)
        if (theta_hat[k] > theta_hat[s]) s = k;
    out.selected = s;
    const double theta_max = theta_hat[s];
    out.naive = theta_max;

    const double shrink = 1.0 - std::pow(static_cast<double>(n), r - 0.5);
    std::vector<double> d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = shrink * (theta_max - theta_hat[k]);

    std::vector<double> adjusted_max(B);
    for (int b = 0; b < B; ++b) {
        RngStream rep_rng = rng.substream(static_cast<std::uint64_t>(b) + 1);
        const std::vector<double> theta_b = resampler(rep_rng);
        if (theta_b.size() != K)
            throw DataError("guo_he_max_subgroup: resampler returned wrong length");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, theta_b[k] + d[k]);
        adjusted_max[b] = mx;
    }
    double mean_adj = 0.0;
    for (double v : adjusted_max) mean_adj += v;
    mean_adj /= static_cast<double>(B);
    out.corrected = theta_max - (mean_adj - theta_max);

    std::vector<double> offsets(adjusted_max);
    for (double& v : offsets) v -= theta_max;
    std::sort(offsets.begin(), offsets.end());
    const double q = (1.0 - alpha) * static_cast<double>(B - 1);
    const std::size_t lo = static_cast<std::size_t>(q);
    const std::size_t hi = std::min<std::size_t>(lo + 1, B - 1);
    const double upper_offset =
        offsets[lo] + (q - static_cast<double>(lo)) * (offsets[hi] - offsets[lo]);
    out.lower_confidence = theta_max - upper_offset;
    out.spurious = out.naive > 0.0 && out.corrected < 0.0;
    return out;
}

} // namespace hte
