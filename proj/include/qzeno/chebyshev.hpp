#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qzeno/errors.hpp"

namespace qzeno {

// Chebyshev interpolant of a smooth function on [a, b], used as the fast
// path in bulk sampling loops. Fit at first-kind nodes; evaluated with
// Clenshaw recurrence.
class ChebyshevSeries {
public:
    ChebyshevSeries() = default;

    static ChebyshevSeries fit(const std::function<double(double)>& f, double a,
                               double b, int degree) {
        if (!(b > a)) throw ArgumentError("Chebyshev fit needs b > a");
        if (degree < 0) throw ArgumentError("Chebyshev degree must be non-negative");
        const int n = degree + 1;
        std::vector<double> fx(n);
        for (int j = 0; j < n; ++j) {
            const double theta = std::numbers::pi * (j + 0.5) / n;
            const double t = std::cos(theta);
            fx[j] = f(0.5 * (a + b) + 0.5 * (b - a) * t);
            if (!std::isfinite(fx[j])) {
                throw EvaluationError("Chebyshev fit sampled a non-finite value");
            }
        }
        ChebyshevSeries s;
        s.a_ = a;
        s.b_ = b;
        s.coef_.assign(n, 0.0);
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += fx[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
            }
            s.coef_[k] = (k == 0 ? 1.0 : 2.0) * acc / n;
        }
        return s;
    }

    // Evaluate at t in [-1, 1].
    double eval_unit(double t) const {
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = coef_.size(); k-- > 1;) {
            const double b0 = coef_[k] + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        return coef_[0] + t * b1 - b2;
    }

    double operator()(double x) const {
        return eval_unit((2.0 * x - (a_ + b_)) / (b_ - a_));
    }

    int degree() const { return static_cast<int>(coef_.size()) - 1; }
    double lower() const { return a_; }
    double upper() const { return b_; }

    // Fit with increasing degree until the interpolant matches f at off-node
    // probe points within tol * max(1, max|f|).
    static ChebyshevSeries fit_to_tolerance(const std::function<double(double)>& f,
                                            double a, double b, double tol = 1e-12,
                                            int max_degree = 256) {
        const int probes = 313;
        std::vector<double> xs(probes), fs(probes);
        double scale = 1.0;
        for (int i = 0; i < probes; ++i) {
            xs[i] = a + (b - a) * (i + 0.5) / probes;
            fs[i] = f(xs[i]);
            scale = std::max(scale, std::abs(fs[i]));
        }
        for (int degree = 8; degree <= max_degree; degree *= 2) {
            ChebyshevSeries s = fit(f, a, b, degree);
            double err = 0.0;
            for (int i = 0; i < probes; ++i) err = std::max(err, std::abs(s(xs[i]) - fs[i]));
            if (err <= tol * scale) return s;
        }
        throw EvaluationError("Chebyshev fit did not reach tolerance " +
                              std::to_string(tol) + " by degree " +
                              std::to_string(max_degree));
    }

private:
    std::vector<double> coef_;
    double a_ = -1.0;
    double b_ = 1.0;
};

} // namespace qzeno
