#pragma once
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/sim/scenarios.hpp"

namespace hte {

inline double pearson_corr(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;   // degenerate estimator
    return sab / std::sqrt(saa * sbb);
}

inline double jaccard(std::span<const char> a, std::span<const char> b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ia = a[i] != 0, ib = b[i] != 0;
        inter += ia && ib;
        uni += ia || ib;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// One benchmark result. Aggregate rows carry stat = mean/sd/median with
// replication = -1; per-replication rows carry stat = "rep".
struct MetricsRow {
    std::string scenario;
    std::string method;
    int replication = -1;
    std::string stat = "rep";
    double corr = 0.0;
    double jaccard_index = 0.0;
    std::optional<double> ate_hat, ate_true, bias;
    double eta = 0.0;
    bool failed = false;
    std::string error;
};

// Performance metrics for a fitted CATE model: correlation and Jaccard on
// the training sample, subgroup effects and the utility index eta on the
// independent test sample (the subgroup rule is "estimated effect > 0").
inline MetricsRow compute_metrics(const GeneratedSample& train,
                                  const GeneratedSample& test, const CateModel& model) {
    MetricsRow row;
    row.scenario = to_string(train.spec.id);
    row.method = model.method();

    const std::vector<double> delta_train = model.predict(train.data.x);
    row.corr = pearson_corr(delta_train, train.delta);
    std::vector<char> s_hat(delta_train.size());
    for (std::size_t i = 0; i < delta_train.size(); ++i)
        s_hat[i] = delta_train[i] > 0.0 ? 1 : 0;
    row.jaccard_index = jaccard(s_hat, train.s_true);

    const std::vector<double> delta_test = model.predict(test.data.x);
    double sum_hat = 0.0, sum_true = 0.0;
    std::size_t selected = 0;
    for (std::size_t i = 0; i < delta_test.size(); ++i) {
        if (delta_test[i] <= 0.0) continue;
        ++selected;
        sum_hat += delta_test[i];
        sum_true += test.delta[i];
    }
    if (selected == 0) {
        row.eta = 0.0;   // empty subgroup: effect estimates undefined
        return row;
    }
    const double n_test = static_cast<double>(delta_test.size());
    row.ate_hat = sum_hat / static_cast<double>(selected);
    row.ate_true = sum_true / static_cast<double>(selected);
    row.bias = *row.ate_hat - *row.ate_true;
    row.eta = *row.ate_true * static_cast<double>(selected) / n_test;
    return row;
}

} // namespace hte
