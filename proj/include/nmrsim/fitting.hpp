/**
 * Copyright 2026 The nmrsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Two-parameter curve fits: a linear amplitude times a shape with one
// nonlinear parameter. The shape parameter is located by a coarse scan with
// the amplitude projected out in closed form, then both are polished with
// Levenberg-Marquardt.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nmrsim/core.hpp"
#include "nmrsim/errors.hpp"

namespace nmrsim {

enum class FitModel {
    exp_decay,           // A e^{-x/p}
    inversion_recovery,  // A (1 - 2 e^{-x/p})
    abs_sine,            // A |sin(pi x / p)|
};

inline std::string to_string(FitModel m) {
    switch (m) {
        case FitModel::exp_decay: return "exp_decay";
        case FitModel::inversion_recovery: return "inversion_recovery";
        case FitModel::abs_sine: return "abs_sine";
    }
    return "?";
}

struct FitResult {
    FitModel model = FitModel::exp_decay;
    double amplitude = 0.0;
    /// tau for the exponential models, t180 for abs_sine.
    double parameter = 0.0;
    double rms_residual = 0.0;
    /// rms residual over rms data.
    double relative_residual = 0.0;
    int iterations = 0;

    double evaluate(double x) const;
};

namespace detail {

inline double shape(FitModel m, double x, double p) {
    switch (m) {
        case FitModel::exp_decay: return std::exp(-x / p);
        case FitModel::inversion_recovery: return 1.0 - 2.0 * std::exp(-x / p);
        case FitModel::abs_sine: return std::abs(std::sin(kPi * x / p));
    }
    return 0.0;
}

inline double shape_dp(FitModel m, double x, double p) {
    switch (m) {
        case FitModel::exp_decay: return std::exp(-x / p) * x / (p * p);
        case FitModel::inversion_recovery: return -2.0 * std::exp(-x / p) * x / (p * p);
        case FitModel::abs_sine: {
            const double arg = kPi * x / p;
            const double s = std::sin(arg);
            const double sign = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
            return sign * std::cos(arg) * (-kPi * x / (p * p));
        }
    }
    return 0.0;
}

inline double sum_sq_residual(FitModel m, const std::vector<double>& x, const std::vector<double>& y, double a, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - a * shape(m, x[i], p);
        s += r * r;
    }
    return s;
}

/// Best amplitude for a fixed shape parameter.
inline double project_amplitude(FitModel m, const std::vector<double>& x, const std::vector<double>& y, double p) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = shape(m, x[i], p);
        num += f * y[i];
        den += f * f;
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace detail

inline double FitResult::evaluate(double x) const { return amplitude * detail::shape(model, x, parameter); }

/// Maximum relative residual accepted before a fit is reported as failed.
inline constexpr double kFitResidualLimit = 0.05;

inline FitResult fit_model(const std::vector<double>& x, const std::vector<double>& y, FitModel model,
                           double residual_limit = kFitResidualLimit) {
    if (x.size() != y.size()) throw ValidationError("fit: x and y lengths differ");
    if (x.size() < 3) throw ValidationError("fit: need at least 3 points");
    double y_rms = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite data");
        y_rms += v * v;
    }
    y_rms = std::sqrt(y_rms / static_cast<double>(y.size()));
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const double xmin = *xmin_it, xmax = *xmax_it;
    const double range = xmax - xmin;
    if (y_rms < 1e-300 || !(range > 0.0)) throw NumericalError("fit failure: degenerate data (no signal or no x spread)");

    // Coarse scan of the shape parameter.
    double lo, hi;
    std::vector<double> xs(x);
    std::sort(xs.begin(), xs.end());
    double min_dx = range;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] > xs[i - 1]) min_dx = std::min(min_dx, xs[i] - xs[i - 1]);
    }
    if (model == FitModel::abs_sine) {
        lo = min_dx;
        hi = 4.0 * range;
    } else {
        lo = std::max(min_dx, range * 1e-6) / 10.0;
        hi = 10.0 * std::max(std::abs(xmax), range);
    }
    const int grid = 4000;
    double best_p = lo, best_s = 1e300;
    for (int i = 0; i <= grid; ++i) {
        const double p = lo * std::pow(hi / lo, static_cast<double>(i) / grid);
        const double a = detail::project_amplitude(model, x, y, p);
        const double s = detail::sum_sq_residual(model, x, y, a, p);
        if (s < best_s) {
            best_s = s;
            best_p = p;
        }
    }

    // Levenberg-Marquardt polish on (a, p).
    double a = detail::project_amplitude(model, x, y, best_p);
    double p = best_p;
    double s = detail::sum_sq_residual(model, x, y, a, p);
    double lambda = 1e-3;
    int it = 0;
    bool done = false;
    for (; it < 200 && !done; ++it) {
        double jaa = 0, jap = 0, jpp = 0, ga = 0, gp = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double f = detail::shape(model, x[i], p);
            const double da = f;
            const double dp = a * detail::shape_dp(model, x[i], p);
            const double r = y[i] - a * f;
            jaa += da * da;
            jap += da * dp;
            jpp += dp * dp;
            ga += da * r;
            gp += dp * r;
        }
        bool improved = false;
        for (int k = 0; k < 30 && !improved; ++k) {
            const double m00 = jaa * (1.0 + lambda), m11 = jpp * (1.0 + lambda), m01 = jap;
            const double det = m00 * m11 - m01 * m01;
            if (!(std::abs(det) > 0.0)) break;
            const double step_a = (m11 * ga - m01 * gp) / det;
            const double step_p = (m00 * gp - m01 * ga) / det;
            const double na = a + step_a;
            const double np = p + step_p;
            if (np > 0.0) {
                const double ns = detail::sum_sq_residual(model, x, y, na, np);
                if (ns <= s) {
                    const double gain = s - ns;
                    a = na;
                    p = np;
                    s = ns;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    improved = true;
                    done = gain <= 1e-30 + 1e-15 * s;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }

    FitResult r;
    r.model = model;
    r.amplitude = a;
    r.parameter = p;
    r.rms_residual = std::sqrt(s / static_cast<double>(x.size()));
    r.relative_residual = r.rms_residual / y_rms;
    r.iterations = it;
    if (!std::isfinite(a) || !std::isfinite(p) || p <= 0.0) throw NumericalError("fit failure: no convergence");
    if (r.relative_residual > residual_limit) {
        throw NumericalError("fit failure: relative residual " + std::to_string(r.relative_residual) + " exceeds " +
                             std::to_string(residual_limit));
    }
    return r;
}

}  // namespace nmrsim
