#pragma once

// Least-squares fits used to summarize measured profiles.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lacuna/error.hpp"

namespace lacuna {

/// y ~ intercept + slope * x.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual_norm = 0.0;  // Euclidean norm of y - fit
    std::size_t points = 0;

    [[nodiscard]] double operator()(double x) const { return intercept + slope * x; }
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ParameterError("linear_fit: length mismatch");
    if (x.size() < 2) throw ParameterError("linear_fit: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("linear_fit: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.points = x.size();
    double r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += std::pow(y[i] - fit(x[i]), 2);
    fit.residual_norm = std::sqrt(r2);
    return fit;
}

/// measure ~ prefactor * exp(-rate * x), fitted on log(measure) over the
/// strictly positive samples.
struct ExponentialFit {
    double rate = 0.0;
    double prefactor = 0.0;
    std::size_t points = 0;
};

inline ExponentialFit exponential_fit(std::span<const double> x, std::span<const double> measure) {
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (measure[i] > 0.0) {
            xs.push_back(x[i]);
            ls.push_back(std::log(measure[i]));
        }
    }
    if (xs.size() < 2) throw ParameterError("exponential_fit: fewer than two positive samples");
    const auto lf = linear_fit(xs, ls);
    return {-lf.slope, std::exp(lf.intercept), xs.size()};
}

}  // namespace lacuna
