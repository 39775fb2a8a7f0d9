#pragma once
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/learn/learner.hpp"

namespace hte {

// A fitted CATE estimator: x -> estimated treatment effect. Prediction is
// deterministic and finite for finite inputs.
class CateModel {
public:
    virtual ~CateModel() = default;
    virtual std::string method() const = 0;
    virtual double predict_row(std::span<const double> x) const = 0;
    virtual json to_json() const = 0;

    std::size_t n_features() const { return n_features_; }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

protected:
    std::size_t n_features_ = 0;
};

using CateModelPtr = std::shared_ptr<const CateModel>;

inline std::vector<double> predict_cate(const CateModel& model, const Matrix& x_new) {
    if (x_new.rows() > 0 && x_new.cols() != model.n_features())
        throw DataError("predict_cate: expected " + std::to_string(model.n_features()) +
                        " covariates, got " + std::to_string(x_new.cols()));
    auto out = model.predict(x_new);
    for (double v : out)
        if (!std::isfinite(v)) throw NumericError("predict_cate: non-finite prediction");
    return out;
}

inline std::vector<double> predict_cate(const CateModelPtr& model, const Matrix& x_new) {
    return predict_cate(*model, x_new);
}

} // namespace hte
