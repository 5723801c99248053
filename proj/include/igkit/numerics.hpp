#pragma once

// Shared numerical kernels: stable log-sum-exp, finite differences, adaptive
// Simpson quadrature, and a Richardson-refined Hessian estimator.

#include <igkit/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace igkit {

inline double log_sum_exp(std::span<const double> terms) {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    double m = -std::numeric_limits<double>::infinity();
    for (double t : terms)
        if (t > m) m = t;
    if (std::isinf(m)) return m;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return m + std::log(acc);
}

inline double log_sum_exp(const std::vector<double>& terms) {
    return log_sum_exp(std::span<const double>(terms));
}

// First derivative, central difference, O(h^2).
template <class F>
double central_diff(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// First derivative, five-point stencil, O(h^4).
template <class F>
double central_diff_5pt(F&& f, double x, double h) {
    return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

// Second derivative, five-point stencil, O(h^4).
template <class F>
double second_diff_5pt(F&& f, double x, double h) {
    return (-f(x + 2 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2 * h)) /
           (12.0 * h * h);
}

namespace detail {

template <class F>
double adaptive_simpson_rec(F&& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth <= 0)
        throw integration_error("adaptive quadrature did not reach tolerance");
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive composite Simpson quadrature with an absolute tolerance. The
// interval is pre-split into panels so narrow features away from the center
// are not missed by the first subdivision.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10, int panels = 16,
                 int max_depth = 48) {
    if (!(a < b)) throw argument_error("integration bracket must satisfy a < b");
    if (!(abs_tol > 0.0)) throw argument_error("integration tolerance must be positive");
    const double h = (b - a) / panels;
    const double panel_tol = abs_tol / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h;
        const double x1 = (i + 1 == panels) ? b : x0 + h;
        const double xm = 0.5 * (x0 + x1);
        const double f0 = f(x0), fm = f(xm), f1 = f(x1);
        const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += detail::adaptive_simpson_rec(f, x0, x1, f0, fm, f1, whole, panel_tol, max_depth);
    }
    return total;
}

// Hessian of a scalar function of a vector, by central second differences with
// one level of Richardson refinement (evaluations at step h and h/2 combined
// to cancel the leading error term). Each off-diagonal pair is computed once,
// so the result is symmetric by construction.
inline Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                       const Eigen::VectorXd& x, double h = 1e-3) {
    const auto n = x.size();
    Eigen::MatrixXd raw(n, n);
    const double fx = f(x);

    auto diag_entry = [&](Eigen::Index i, double step) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        return (f(xp) - 2.0 * fx + f(xm)) / (step * step);
    };
    auto cross_entry = [&](Eigen::Index i, Eigen::Index j, double step) {
        Eigen::VectorXd a = x, b = x, c = x, d = x;
        a[i] += step; a[j] += step;
        b[i] += step; b[j] -= step;
        c[i] -= step; c[j] += step;
        d[i] -= step; d[j] -= step;
        return (f(a) - f(b) - f(c) + f(d)) / (4.0 * step * step);
    };
    auto richardson = [](double coarse, double fine) {
        return (4.0 * fine - coarse) / 3.0;
    };

    for (Eigen::Index i = 0; i < n; ++i) {
        raw(i, i) = richardson(diag_entry(i, h), diag_entry(i, 0.5 * h));
        for (Eigen::Index j = 0; j < i; ++j) {
            raw(i, j) = richardson(cross_entry(i, j, h), cross_entry(i, j, 0.5 * h));
            raw(j, i) = raw(i, j);
        }
    }
    return raw;
}

} // namespace igkit
