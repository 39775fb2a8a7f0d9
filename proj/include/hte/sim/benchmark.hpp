#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hte/cate/causal_tree.hpp"
#include "hte/cate/meta_learners.hpp"
#include "hte/cate/modified_loss.hpp"
#include "hte/core/parallel.hpp"
#include "hte/nuisance.hpp"
#include "hte/sim/metrics.hpp"
#include "hte/sim/scenarios.hpp"

namespace hte {

enum class CateMethod { T, S, X, R, W, Waug, A, Aaug, CausalTree };

inline std::string to_string(CateMethod m) {
    switch (m) {
        case CateMethod::T: return "T";
        case CateMethod::S: return "S";
        case CateMethod::X: return "X";
        case CateMethod::R: return "R";
        case CateMethod::W: return "W";
        case CateMethod::Waug: return "W_aug";
        case CateMethod::A: return "A";
        case CateMethod::Aaug: return "A_aug";
        case CateMethod::CausalTree: return "causal_tree";
    }
    return "?";
}

inline CateMethod cate_method_from_string(const std::string& s) {
    if (s == "T") return CateMethod::T;
    if (s == "S") return CateMethod::S;
    if (s == "X") return CateMethod::X;
    if (s == "R") return CateMethod::R;
    if (s == "W") return CateMethod::W;
    if (s == "W_aug" || s == "Waug") return CateMethod::Waug;
    if (s == "A") return CateMethod::A;
    if (s == "A_aug" || s == "Aaug") return CateMethod::Aaug;
    if (s == "causal_tree" || s == "CausalTree") return CateMethod::CausalTree;
    throw ConfigError("unknown method '" + s +
                      "'; valid: T S X R W W_aug A A_aug causal_tree");
}

inline std::vector<CateMethod> all_cate_methods() {
    return {CateMethod::T,    CateMethod::S, CateMethod::X,    CateMethod::R,
            CateMethod::W,    CateMethod::Waug, CateMethod::A, CateMethod::Aaug,
            CateMethod::CausalTree};
}

inline TunedLearnerSpec default_outcome_spec() {
    TunedLearnerSpec s;
    s.kind = LearnerKind::Boost;
    s.grid[0].n_rounds = 200;
    s.grid[0].max_depth = 3;
    s.grid[0].shrinkage = 0.1;
    s.grid[0].subsample = 0.8;
    s.grid[0].min_leaf = 10;
    s.chosen = 0;
    return s;
}

inline TunedLearnerSpec default_propensity_spec() {
    TunedLearnerSpec s;
    s.kind = LearnerKind::ElasticNet;
    s.grid[0].lambda = 1e-3;
    s.grid[0].alpha_mix = 1.0;
    s.scoring = Scoring::LogLoss;
    s.chosen = 0;
    return s;
}

struct BenchmarkConfig {
    std::vector<ScenarioId> scenarios{ScenarioId::S1, ScenarioId::S2, ScenarioId::S3,
                                      ScenarioId::S4};
    std::vector<CateMethod> methods = all_cate_methods();
    int replications = 25;
    std::size_t n_train = 1000;
    std::size_t n_test = 10000;
    TunedLearnerSpec outcome_spec = default_outcome_spec();
    TunedLearnerSpec propensity_spec = default_propensity_spec();
    int nuisance_folds = 5;
    double clip_eps = 0.01;
    CausalTreeOptions causal_tree;
    std::uint64_t base_seed = 1;
    int threads = 0;   // 0 = hardware concurrency

    nlohmann::json to_json() const {
        nlohmann::json scen = nlohmann::json::array();
        for (auto s : scenarios) scen.push_back(to_string(s));
        nlohmann::json meth = nlohmann::json::array();
        for (auto m : methods) meth.push_back(to_string(m));
        return nlohmann::json{{"scenarios", scen},
                              {"methods", meth},
                              {"replications", replications},
                              {"n_train", n_train},
                              {"n_test", n_test},
                              {"outcome_spec", outcome_spec.to_json()},
                              {"propensity_spec", propensity_spec.to_json()},
                              {"nuisance_folds", nuisance_folds},
                              {"clip_eps", clip_eps},
                              {"base_seed", base_seed}};
    }
};

// Fits one roster method on a generated training sample, given the shared
// cross-fitted nuisances.
inline CateModelPtr fit_benchmark_method(CateMethod method, const GeneratedSample& train,
                                         const NuisanceFit& nuisance,
                                         const BenchmarkConfig& cfg, RngStream& rng) {
    switch (method) {
        case CateMethod::T:
            return fit_t_learner(train.data, cfg.outcome_spec, rng);
        case CateMethod::S:
            return fit_s_learner(train.data, cfg.outcome_spec, rng);
        case CateMethod::X:
            return fit_x_learner(train.data, nuisance, cfg.outcome_spec, rng);
        case CateMethod::R:
            return fit_r_learner(train.data, nuisance, cfg.outcome_spec, rng);
        case CateMethod::W:
            return fit_mlm(train.data, nuisance, {MlmVariant::W, false}, cfg.outcome_spec,
                           rng);
        case CateMethod::Waug:
            return fit_mlm(train.data, nuisance, {MlmVariant::W, true}, cfg.outcome_spec,
                           rng);
        case CateMethod::A:
            return fit_mlm(train.data, nuisance, {MlmVariant::A, false}, cfg.outcome_spec,
                           rng);
        case CateMethod::Aaug:
            return fit_mlm(train.data, nuisance, {MlmVariant::A, true}, cfg.outcome_spec,
                           rng);
        case CateMethod::CausalTree:
            return fit_causal_tree(train.data, cfg.causal_tree, rng);
    }
    throw ConfigError("fit_benchmark_method: unknown method");
}

struct BenchmarkResult {
    std::vector<MetricsRow> rows;         // canonical order: scenario, rep, method
    std::vector<MetricsRow> aggregates;   // per (scenario, method): mean, sd, median
    nlohmann::json config;
};

namespace detail {

inline void append_aggregates(const BenchmarkConfig& cfg,
                              const std::vector<MetricsRow>& rows,
                              std::vector<MetricsRow>& out) {
    for (ScenarioId scenario : cfg.scenarios) {
        for (CateMethod method : cfg.methods) {
            std::vector<const MetricsRow*> cell;
            for (const auto& r : rows)
                if (r.scenario == to_string(scenario) && r.method == to_string(method) &&
                    !r.failed)
                    cell.push_back(&r);
            if (cell.empty()) continue;

            auto collect = [&](auto getter) {
                std::vector<double> v;
                for (const auto* r : cell) {
                    const auto value = getter(*r);
                    if (value) v.push_back(*value);
                }
                return v;
            };
            auto opt_id = [](const MetricsRow& r, int which) -> std::optional<double> {
                switch (which) {
                    case 0: return r.corr;
                    case 1: return r.jaccard_index;
                    case 2: return r.ate_hat;
                    case 3: return r.ate_true;
                    case 4: return r.bias;
                    default: return r.eta;
                }
            };

            for (const std::string& stat : {std::string("mean"), std::string("sd"),
                                            std::string("median")}) {
                MetricsRow agg;
                agg.scenario = to_string(scenario);
                agg.method = to_string(method);
                agg.replication = -1;
                agg.stat = stat;
                double metrics[6] = {0, 0, 0, 0, 0, 0};
                bool present[6] = {true, true, false, false, false, true};
                for (int which = 0; which < 6; ++which) {
                    const auto values = collect(
                        [&](const MetricsRow& r) { return opt_id(r, which); });
                    if (values.empty()) continue;
                    present[which] = true;
                    if (stat == "mean") {
                        double s = 0.0;
                        for (double v : values) s += v;
                        metrics[which] = s / static_cast<double>(values.size());
                    } else if (stat == "sd") {
                        double s = 0.0;
                        for (double v : values) s += v;
                        const double mean = s / static_cast<double>(values.size());
                        double ss = 0.0;
                        for (double v : values) ss += (v - mean) * (v - mean);
                        metrics[which] =
                            values.size() > 1
                                ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                                : 0.0;
                    } else {
                        metrics[which] = median_of(values);
                    }
                }
                agg.corr = metrics[0];
                agg.jaccard_index = metrics[1];
                if (present[2]) agg.ate_hat = metrics[2];
                if (present[3]) agg.ate_true = metrics[3];
                if (present[4]) agg.bias = metrics[4];
                agg.eta = metrics[5];
                out.push_back(agg);
            }
        }
    }
}

} // namespace detail

// Runs the scenario x method x replication grid. Each (scenario, replication)
// cell draws its own train/test pair from a dedicated substream and shares
// one cross-fitted nuisance estimate across methods, so method comparisons
// within a replication are paired. Results are deterministic for a given
// base seed regardless of the thread count; individual method failures are
// recorded per cell and never abort the run.
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
    const std::size_t n_cells = cfg.scenarios.size() *
                                static_cast<std::size_t>(cfg.replications);
    const std::size_t n_methods = cfg.methods.size();
    std::vector<MetricsRow> rows(n_cells * n_methods);
    const RngStream root(cfg.base_seed);

    parallel_for(n_cells, cfg.threads, [&](std::size_t cell) {
        const std::size_t scenario_idx = cell / static_cast<std::size_t>(cfg.replications);
        const int rep = static_cast<int>(cell % static_cast<std::size_t>(cfg.replications));
        ScenarioSpec spec;
        spec.id = cfg.scenarios[scenario_idx];
        RngStream cell_rng = root.substream(cell);

        spec.n = cfg.n_train;
        RngStream train_rng = cell_rng.substream(0);
        const GeneratedSample train = generate(spec, train_rng);
        spec.n = cfg.n_test;
        RngStream test_rng = cell_rng.substream(1);
        const GeneratedSample test = generate(spec, test_rng);

        NuisanceOptions nopt;
        nopt.k = cfg.nuisance_folds;
        nopt.clip_eps = cfg.clip_eps;
        RngStream nuis_rng = cell_rng.substream(2);
        const NuisanceFit nuisance =
            fit_nuisance(train.data, cfg.outcome_spec, cfg.propensity_spec, nopt, nuis_rng);

        for (std::size_t m = 0; m < n_methods; ++m) {
            MetricsRow& row = rows[cell * n_methods + m];
            RngStream method_rng = cell_rng.substream(16 + m);
            try {
                const auto model =
                    fit_benchmark_method(cfg.methods[m], train, nuisance, cfg, method_rng);
                row = compute_metrics(train, test, *model);
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
                row.scenario = to_string(spec.id);
                row.method = to_string(cfg.methods[m]);
            }
            row.replication = rep;
        }
    });

    BenchmarkResult result;
    result.rows = std::move(rows);
    detail::append_aggregates(cfg, result.rows, result.aggregates);
    result.config = cfg.to_json();
    return result;
}

} // namespace hte
