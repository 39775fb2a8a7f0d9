#pragma once
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/folds.hpp"
#include "hte/learn/learner.hpp"

namespace hte {

enum class Scoring { MSE, LogLoss };

// A learner plus its hyperparameter grid. `chosen` is filled by tune();
// a singleton grid needs no tuning. Tuning is deterministic given the grid
// order and the seed.
struct TunedLearnerSpec {
    LearnerKind kind = LearnerKind::Boost;
    std::vector<LearnerParams> grid = {LearnerParams{}};
    int cv_folds = 5;
    Scoring scoring = Scoring::MSE;
    std::optional<std::size_t> chosen;

    const LearnerParams& chosen_params() const {
        if (!chosen) throw ConfigError("TunedLearnerSpec: grid not resolved, call tune()");
        return grid[*chosen];
    }

    json to_json() const {
        json grid_json = json::array();
        for (const auto& g : grid) grid_json.push_back(g.to_json());
        json j{{"kind", to_string(kind)},
               {"grid", grid_json},
               {"cv_folds", cv_folds},
               {"scoring", scoring == Scoring::LogLoss ? "log_loss" : "mse"}};
        if (chosen) j["chosen"] = *chosen;
        return j;
    }

    static TunedLearnerSpec from_json(const json& j) {
        TunedLearnerSpec s;
        s.kind = learner_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("grid")) {
            s.grid.clear();
            for (const auto& g : j.at("grid")) s.grid.push_back(LearnerParams::from_json(g));
        }
        s.cv_folds = j.value("cv_folds", 5);
        if (j.value("scoring", "mse") == std::string("log_loss")) s.scoring = Scoring::LogLoss;
        if (j.contains("chosen")) s.chosen = j.at("chosen").get<std::size_t>();
        return s;
    }
};

namespace detail {

inline double cv_loss(Scoring scoring, std::span<const double> truth,
                      std::span<const double> pred) {
    double loss = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (scoring == Scoring::LogLoss) {
            const double p = std::clamp(pred[i], 1e-12, 1.0 - 1e-12);
            loss -= truth[i] * std::log(p) + (1.0 - truth[i]) * std::log(1.0 - p);
        } else {
            const double d = truth[i] - pred[i];
            loss += d * d;
        }
    }
    return loss / static_cast<double>(truth.size());
}

} // namespace detail

// Selects the grid point minimizing mean cross-validated loss; ties break
// towards the earliest grid position.
inline TunedLearnerSpec tune(TunedLearnerSpec spec, const Matrix& x,
                             std::span<const double> y, Family family, RngStream& rng) {
    if (spec.grid.empty()) throw ConfigError("tune: empty hyperparameter grid");
    if (spec.grid.size() == 1) {
        spec.chosen = 0;
        return spec;
    }

    std::vector<int> strata;
    if (family == Family::Binomial) {
        strata.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) strata[i] = y[i] > 0.5 ? 1 : 0;
    }
    RngStream fold_rng = rng.substream(0x7475u);
    const FoldAssignment folds =
        make_folds(y.size(), spec.cv_folds,
                   std::span<const int>(strata.data(), strata.size()), fold_rng);

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        double total = 0.0;
        for (int f = 0; f < folds.k; ++f) {
            const auto train_idx = folds.complement_indices(f);
            const auto valid_idx = folds.fold_indices(f);
            const Matrix x_train = x.take_rows(train_idx);
            const std::vector<double> y_train = take(std::vector<double>(y.begin(), y.end()),
                                                     train_idx);
            RngStream fit_rng = rng.substream(0x10000u + g * 256 + static_cast<std::size_t>(f));
            const auto model = fit_predictor(spec.kind, spec.grid[g], x_train, y_train,
                                             {}, family, fit_rng);
            std::vector<double> pred(valid_idx.size()), truth(valid_idx.size());
            for (std::size_t k = 0; k < valid_idx.size(); ++k) {
                pred[k] = model->predict_row(x.row(valid_idx[k]));
                truth[k] = y[valid_idx[k]];
            }
            total += detail::cv_loss(spec.scoring, truth, pred);
        }
        const double mean_loss = total / folds.k;
        if (mean_loss < best_loss) {
            best_loss = mean_loss;
            best = g;
        }
    }
    spec.chosen = best;
    return spec;
}

// Resolves a spec to concrete hyperparameters, tuning on (x, y) if needed.
inline LearnerParams resolve_spec(const TunedLearnerSpec& spec, const Matrix& x,
                                  std::span<const double> y, Family family,
                                  RngStream& rng) {
    if (spec.chosen) return spec.grid[*spec.chosen];
    return tune(spec, x, y, family, rng).chosen_params();
}

} // namespace hte
