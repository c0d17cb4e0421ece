#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stepiem {

/// Raised when quadrature or root refinement fails to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation is called outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {
inline std::string fmt_err(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}
}  // namespace detail

struct QuadratureOptions {
    double abs_tol = 1e-12;
    unsigned max_depth = 40;
    std::size_t max_panels = 4000;
};

/// Adaptive Gauss-Kronrod (15/31) on [a, b] by recursive bisection. Each
/// panel gets a share of the absolute tolerance proportional to its width;
/// running past the panel cap throws instead of returning a guess.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (a == b) return 0.0;
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
    using Gauss = boost::math::quadrature::gauss<double, 15>;
    const double width = b - a;
    std::size_t panels = 0;
    double total = 0.0;
    struct Panel {
        double lo, hi;
        unsigned depth;
    };
    std::vector<Panel> stack{{a, b, 0u}};
    while (!stack.empty()) {
        Panel pn = stack.back();
        stack.pop_back();
        double k = Kronrod::integrate(f, pn.lo, pn.hi, 0, 0.0);
        double g = Gauss::integrate(f, pn.lo, pn.hi);
        double err = std::fabs(k - g);
        double local = opt.abs_tol * (pn.hi - pn.lo) / width;
        if (!std::isfinite(k)) throw NumericalError("quadrature integrand is not finite");
        if (err <= local || err <= 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(k)) {
            total += k;
            continue;
        }
        if (pn.depth >= opt.max_depth || ++panels > opt.max_panels)
            throw NumericalError("quadrature hit its subdivision cap on [" + std::to_string(a) + ", " +
                                 std::to_string(b) + "], panel error " + detail::fmt_err(err));
        double mid = 0.5 * (pn.lo + pn.hi);
        stack.push_back({mid, pn.hi, pn.depth + 1});
        stack.push_back({pn.lo, mid, pn.depth + 1});
    }
    return total;
}

/// Bracketed root of f on [a, b] by TOMS 748, refined to a few ulps.
template <class F>
double solve_bracketed(F&& f, double a, double b, double fa, double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) == (fb < 0.0))
        throw NumericalError("root not bracketed on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]");
    std::uintmax_t iters = 300;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    if (iters >= 300) throw NumericalError("root refinement did not converge");
    return 0.5 * (r.first + r.second);
}

template <class F>
double solve_bracketed(F&& f, double a, double b) {
    return solve_bracketed(f, a, b, f(a), f(b));
}

/// Chebyshev series on [a, b], built from values at the Chebyshev-Lobatto
/// points x_k = cos(pi k / n), k = 0..n.
class ChebyshevSeries {
public:
    ChebyshevSeries() = default;

    ChebyshevSeries(double a, double b, const std::vector<double>& lobatto_values) : a_(a), b_(b) {
        const std::size_t n = lobatto_values.size() - 1;
        coeffs_.assign(n + 1, 0.0);
        for (std::size_t j = 0; j <= n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= n; ++k) {
                double w = (k == 0 || k == n) ? 0.5 : 1.0;
                s += w * lobatto_values[k] * std::cos(std::numbers::pi * double(j * k % (2 * n)) / double(n));
            }
            coeffs_[j] = 2.0 * s / double(n);
        }
        coeffs_[0] *= 0.5;
        coeffs_[n] *= 0.5;
    }

    /// Node positions in [a, b] for an n-interval Lobatto grid (k = 0 is b).
    static std::vector<double> nodes(double a, double b, std::size_t n) {
        std::vector<double> x(n + 1);
        for (std::size_t k = 0; k <= n; ++k)
            x[k] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(std::numbers::pi * double(k) / double(n));
        x[0] = b;
        x[n] = a;
        return x;
    }

    double operator()(double x) const {
        const double u = (2.0 * x - a_ - b_) / (b_ - a_);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t j = coeffs_.size() - 1; j >= 1; --j) {
            double t = 2.0 * u * b1 - b2 + coeffs_[j];
            b2 = b1;
            b1 = t;
        }
        return u * b1 - b2 + coeffs_[0];
    }

    /// Largest magnitude among the trailing `k` coefficients.
    double tail(std::size_t k) const {
        double m = 0.0;
        for (std::size_t j = coeffs_.size() - std::min(k, coeffs_.size()); j < coeffs_.size(); ++j)
            m = std::max(m, std::fabs(coeffs_[j]));
        return m;
    }

    double scale() const {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::fabs(c));
        return m;
    }

    std::size_t size() const { return coeffs_.size(); }

private:
    double a_ = -1.0, b_ = 1.0;
    std::vector<double> coeffs_;
};

}  // namespace stepiem
