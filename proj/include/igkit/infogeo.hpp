#pragma once

// Information geometry: Fisher information (three estimation routes),
// divergences, dual e/m geodesics, dually flat coordinate systems with their
// canonical divergence, and the generalized Pythagorean identity.

#include <igkit/errors.hpp>
#include <igkit/models.hpp>
#include <igkit/numerics.hpp>
#include <igkit/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace igkit::infogeo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FisherMatrix {
    MatrixXd entries;
    bool positive_definite;
};

namespace detail {

inline FisherMatrix make_fisher(MatrixXd m) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) throw degeneracy_error("information matrix is not symmetric");
    m = ((m + m.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
    const bool pd = eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, max_abs);
    return {std::move(m), pd};
}

} // namespace detail

// A parametric family of densities over the real line, described by what the
// estimators need: the log density, an optional analytic score, a sampler,
// and an integration bracket that captures the full mass.
struct ParametricFamily {
    Eigen::Index dim;
    std::function<double(const VectorXd&, double)> log_pdf;
    std::function<VectorXd(const VectorXd&, double)> score; // optional
    std::function<double(const VectorXd&, RandomStream&)> draw;
    std::function<std::pair<double, double>(const VectorXd&)> bracket;
};

// N(mu, sigma) parametrized by theta = (mu, sigma).
inline ParametricFamily gaussian_family() {
    ParametricFamily f;
    f.dim = 2;
    f.log_pdf = [](const VectorXd& th, double x) {
        return models::log_pdf(models::UnivariateGaussian(th[0], th[1]), x);
    };
    f.score = [](const VectorXd& th, double x) {
        const double mu = th[0], sigma = th[1];
        const double d = x - mu;
        VectorXd s(2);
        s << d / (sigma * sigma), d * d / (sigma * sigma * sigma) - 1.0 / sigma;
        return s;
    };
    f.draw = [](const VectorXd& th, RandomStream& rng) { return rng.normal(th[0], th[1]); };
    f.bracket = [](const VectorXd& th) {
        return std::pair<double, double>{th[0] - 12.0 * th[1], th[0] + 12.0 * th[1]};
    };
    return f;
}

// Gradient of the log density in the parameters; analytic when the family
// supplies it, otherwise central differences.
inline VectorXd score(const ParametricFamily& f, const VectorXd& theta, double x,
                      double fd_step = 1e-5) {
    if (f.score) return f.score(theta, x);
    VectorXd s(f.dim);
    for (Eigen::Index i = 0; i < f.dim; ++i) {
        VectorXd tp = theta, tm = theta;
        tp[i] += fd_step;
        tm[i] -= fd_step;
        s[i] = (f.log_pdf(tp, x) - f.log_pdf(tm, x)) / (2.0 * fd_step);
    }
    return s;
}

// Closed-form Fisher information of N(mu, sigma) in (mu, sigma) coordinates.
inline FisherMatrix fim_analytic_gaussian(double sigma) {
    if (!(sigma > 0.0)) throw argument_error("fim_analytic_gaussian requires sigma > 0");
    MatrixXd g = MatrixXd::Zero(2, 2);
    g(0, 0) = 1.0 / (sigma * sigma);
    g(1, 1) = 2.0 / (sigma * sigma);
    return detail::make_fisher(std::move(g));
}

// Empirical Fisher information: mean outer product of the score over samples.
// Rank deficiency is reported through the positive_definite flag, not thrown.
inline FisherMatrix fim_empirical(const ParametricFamily& f, const VectorXd& theta,
                                  std::span<const double> samples) {
    if (static_cast<Eigen::Index>(samples.size()) < f.dim + 1)
        throw argument_error("fim_empirical needs at least dim + 1 samples");
    MatrixXd acc = MatrixXd::Zero(f.dim, f.dim);
    for (double x : samples) {
        const VectorXd s = score(f, theta, x);
        acc.noalias() += s * s.transpose();
    }
    acc /= static_cast<double>(samples.size());
    return detail::make_fisher(std::move(acc));
}

// KL divergence between two members of a family, by quadrature over the union
// of their brackets.
inline double kl_divergence(const ParametricFamily& f, const VectorXd& theta_p,
                            const VectorXd& theta_q, double abs_tol = 1e-10) {
    const auto [plo, phi_] = f.bracket(theta_p);
    const auto [qlo, qhi] = f.bracket(theta_q);
    const double lo = std::min(plo, qlo), hi = std::max(phi_, qhi);
    return integrate(
        [&](double x) {
            const double lp = f.log_pdf(theta_p, x);
            if (std::isinf(lp)) return 0.0;
            return std::exp(lp) * (lp - f.log_pdf(theta_q, x));
        },
        lo, hi, abs_tol);
}

// Fisher information as the Hessian of theta' -> KL(theta || theta') at
// theta' = theta, by Richardson-refined central differences.
inline FisherMatrix fim_from_kl_hessian(const ParametricFamily& f, const VectorXd& theta,
                                        double step = 1e-3) {
    auto kl_second_slot = [&](const VectorXd& tq) { return kl_divergence(f, theta, tq, 1e-12); };
    MatrixXd h = numeric_hessian(kl_second_slot, theta, step);
    return detail::make_fisher(std::move(h));
}

// ---------------------------------------------------------------------------
// Divergences.

inline void require_same_support(const models::DiscreteDistribution& p,
                                 const models::DiscreteDistribution& q) {
    if (p.support != q.support)
        throw argument_error("discrete distributions must share an identical support");
}

inline double kl_divergence(const models::DiscreteDistribution& p,
                            const models::DiscreteDistribution& q) {
    require_same_support(p, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        if (p.probs[i] == 0.0) continue;
        if (q.probs[i] == 0.0)
            throw support_error("q vanishes on a point where p has mass");
        acc += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
    }
    return acc;
}

inline double kl_divergence(const models::UnivariateGaussian& p,
                            const models::UnivariateGaussian& q, double abs_tol = 1e-10) {
    const double lo = std::min(p.mu - 12.0 * p.sigma, q.mu - 12.0 * q.sigma);
    const double hi = std::max(p.mu + 12.0 * p.sigma, q.mu + 12.0 * q.sigma);
    return integrate(
        [&](double x) {
            return std::exp(models::log_pdf(p, x)) *
                   (models::log_pdf(p, x) - models::log_pdf(q, x));
        },
        lo, hi, abs_tol);
}

inline double entropy(const models::DiscreteDistribution& p) {
    double acc = 0.0;
    for (double pi : p.probs)
        if (pi > 0.0) acc -= pi * std::log(pi);
    return acc;
}

// Bregman divergence B_F(x : y) = F(x) - F(y) - <x - y, grad F(y)>.
struct BregmanGenerator {
    std::function<double(const VectorXd&)> F;
    std::function<VectorXd(const VectorXd&)> grad; // optional
};

inline VectorXd bregman_gradient(const BregmanGenerator& gen, const VectorXd& y,
                                 double fd_step = 1e-5) {
    if (gen.grad) return gen.grad(y);
    VectorXd g(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        VectorXd yp = y, ym = y;
        yp[i] += fd_step;
        ym[i] -= fd_step;
        g[i] = (gen.F(yp) - gen.F(ym)) / (2.0 * fd_step);
    }
    return g;
}

inline double bregman_divergence(const BregmanGenerator& gen, const VectorXd& x,
                                 const VectorXd& y) {
    return gen.F(x) - gen.F(y) - (x - y).dot(bregman_gradient(gen, y));
}

// ---------------------------------------------------------------------------
// Metric induced by a two-argument divergence: the negated mixed second
// derivative -d^2 D(theta : theta') / d theta_i d theta'_j on the diagonal.
// The raw mixed matrix need not be symmetric for a numerically evaluated D,
// so the largest asymmetry is reported and the result symmetrized.

struct InducedMetric {
    FisherMatrix metric;
    double asymmetry;
};

inline InducedMetric divergence_induced_metric(
    const std::function<double(const VectorXd&, const VectorXd&)>& D, const VectorXd& theta0,
    double step = 1e-3) {
    const auto n = theta0.size();
    auto mixed = [&](Eigen::Index i, Eigen::Index j, double h) {
        VectorXd pi = theta0, mi = theta0, pj = theta0, mj = theta0;
        pi[i] += h;
        mi[i] -= h;
        pj[j] += h;
        mj[j] -= h;
        return (D(pi, pj) - D(pi, mj) - D(mi, pj) + D(mi, mj)) / (4.0 * h * h);
    };
    MatrixXd raw(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double coarse = mixed(i, j, step);
            const double fine = mixed(i, j, 0.5 * step);
            raw(i, j) = -(4.0 * fine - coarse) / 3.0;
        }
    const double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
    MatrixXd sym = 0.5 * (raw + raw.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
    const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
    const bool pd = eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, max_abs);
    return {{std::move(sym), pd}, asym};
}

// ---------------------------------------------------------------------------
// Dual geodesics. The m-geodesic mixes densities pointwise; the e-geodesic
// interpolates log densities and renormalizes.

inline models::DiscreteDistribution m_geodesic(const models::DiscreteDistribution& p,
                                               const models::DiscreteDistribution& q, double t) {
    require_same_support(p, q);
    if (!(t >= 0.0 && t <= 1.0)) throw argument_error("geodesic parameter must lie in [0, 1]");
    std::vector<double> probs(p.probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        probs[i] = (1.0 - t) * p.probs[i] + t * q.probs[i];
    return {p.support, probs};
}

inline models::DiscreteDistribution e_geodesic(const models::DiscreteDistribution& p,
                                               const models::DiscreteDistribution& q, double t) {
    require_same_support(p, q);
    if (!(t >= 0.0 && t <= 1.0)) throw argument_error("geodesic parameter must lie in [0, 1]");
    std::vector<double> logs(p.probs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!(p.probs[i] > 0.0) || !(q.probs[i] > 0.0))
            throw support_error("e-geodesic endpoints must have full support");
        logs[i] = (1.0 - t) * std::log(p.probs[i]) + t * std::log(q.probs[i]);
    }
    const double norm = log_sum_exp(logs);
    std::vector<double> probs(logs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logs[i] - norm);
    // Remove the residual round-off so the constructor's sum check passes.
    double total = 0.0;
    for (double pr : probs) total += pr;
    for (double& pr : probs) pr /= total;
    return {p.support, probs};
}

// Continuous density given by its log and an integration bracket.
struct Density {
    std::function<double(double)> log_pdf;
    double lo, hi;
};

inline Density density_of(const models::UnivariateGaussian& g) {
    return {[g](double x) { return models::log_pdf(g, x); }, g.mu - 12.0 * g.sigma,
            g.mu + 12.0 * g.sigma};
}

inline double kl_divergence(const Density& p, const Density& q, double abs_tol = 1e-10) {
    const double lo = std::min(p.lo, q.lo), hi = std::max(p.hi, q.hi);
    return integrate(
        [&](double x) {
            const double lp = p.log_pdf(x);
            if (std::isinf(lp) && lp < 0.0) return 0.0;
            return std::exp(lp) * (lp - q.log_pdf(x));
        },
        lo, hi, abs_tol);
}

inline Density m_geodesic(const Density& p, const Density& q, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw argument_error("geodesic parameter must lie in [0, 1]");
    const double lo = std::min(p.lo, q.lo), hi = std::max(p.hi, q.hi);
    auto lp = p.log_pdf, lq = q.log_pdf;
    return {[lp, lq, t](double x) {
                std::vector<double> terms;
                if (t < 1.0) terms.push_back(std::log1p(-t) + lp(x));
                if (t > 0.0) terms.push_back(std::log(t) + lq(x));
                return log_sum_exp(terms);
            },
            lo, hi};
}

// The e-geodesic normalizer a(t) = log integral p^(1-t) q^t is evaluated by
// quadrature on construction.
inline Density e_geodesic(const Density& p, const Density& q, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw argument_error("geodesic parameter must lie in [0, 1]");
    const double lo = std::min(p.lo, q.lo), hi = std::max(p.hi, q.hi);
    auto lp = p.log_pdf, lq = q.log_pdf;
    auto log_kernel = [lp, lq, t](double x) { return (1.0 - t) * lp(x) + t * lq(x); };
    const double a =
        std::log(integrate([&](double x) { return std::exp(log_kernel(x)); }, lo, hi, 1e-12));
    return {[log_kernel, a](double x) { return log_kernel(x) - a; }, lo, hi};
}

// ---------------------------------------------------------------------------
// Dually flat coordinate systems. A structure supplies primal coordinates
// theta, dual coordinates eta, and the Legendre pair (psi, phi) with
// psi(theta(P)) + phi(eta(P)) = theta(P) . eta(P). Points are passed in a
// structure-specific vector encoding (see each constructor).

struct DuallyFlatStructure {
    std::string name;
    std::function<VectorXd(const VectorXd&)> theta_of;
    std::function<VectorXd(const VectorXd&)> eta_of;
    std::function<double(const VectorXd&)> psi; // of theta
    std::function<double(const VectorXd&)> phi; // of eta
    std::function<VectorXd(const VectorXd&)> point_from_theta;
    std::function<VectorXd(const VectorXd&)> point_from_eta;
    std::function<VectorXd(RandomStream&)> random_point;
};

// D(P : Q) = psi(P) + phi(Q) - theta(P) . eta(Q).
inline double canonical_divergence(const DuallyFlatStructure& s, const VectorXd& P,
                                   const VectorXd& Q) {
    return s.psi(s.theta_of(P)) + s.phi(s.eta_of(Q)) - s.theta_of(P).dot(s.eta_of(Q));
}

// Decomposition residual of the generalized Pythagorean relation. `gap` is
// D(P:Q) + D(Q:R) - D(P:R); `inner` is the pairing of the primal displacement
// theta(Q) - theta(P) with the dual displacement eta(Q) - eta(R). The two are
// equal as an algebraic identity of the Legendre pair, so the relation holds
// with equality exactly when the displacements are orthogonal.
struct PythagorasResidual {
    double gap;
    double inner;
};

inline PythagorasResidual pythagoras_residual(const DuallyFlatStructure& s, const VectorXd& P,
                                              const VectorXd& Q, const VectorXd& R) {
    const double gap = canonical_divergence(s, P, Q) + canonical_divergence(s, Q, R) -
                       canonical_divergence(s, P, R);
    const double inner = (s.theta_of(Q) - s.theta_of(P)).dot(s.eta_of(Q) - s.eta_of(R));
    return {gap, inner};
}

// Both mixed pairings at the corner Q of the triple (P, Q, R); each one is the
// inner product of one leg in primal coordinates with the other leg in dual
// coordinates. Either vanishing yields an exact decomposition in the
// corresponding orientation.
struct OrthogonalityReport {
    double primal_dual; // (theta(Q) - theta(P)) . (eta(Q) - eta(R))
    double dual_primal; // (eta(Q) - eta(P)) . (theta(Q) - theta(R))
};

inline OrthogonalityReport orthogonality_check(const DuallyFlatStructure& s, const VectorXd& P,
                                               const VectorXd& Q, const VectorXd& R) {
    return {(s.theta_of(Q) - s.theta_of(P)).dot(s.eta_of(Q) - s.eta_of(R)),
            (s.eta_of(Q) - s.eta_of(P)).dot(s.theta_of(Q) - s.theta_of(R))};
}

// Self-dual structure of R^d with psi = phi = |.|^2 / 2; the canonical
// divergence is half the squared Euclidean distance.
inline DuallyFlatStructure quadratic_structure(Eigen::Index d) {
    if (d < 1) throw argument_error("quadratic structure needs dimension >= 1");
    DuallyFlatStructure s;
    s.name = "quadratic";
    auto id = [](const VectorXd& x) { return x; };
    auto half_sq = [](const VectorXd& x) { return 0.5 * x.squaredNorm(); };
    s.theta_of = id;
    s.eta_of = id;
    s.psi = half_sq;
    s.phi = half_sq;
    s.point_from_theta = id;
    s.point_from_eta = id;
    s.random_point = [d](RandomStream& rng) {
        VectorXd p(d);
        for (Eigen::Index i = 0; i < d; ++i) p[i] = rng.normal();
        return p;
    };
    return s;
}

namespace detail {

inline void require_interior_simplex(const VectorXd& p) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0)) throw argument_error("simplex point must be strictly positive");
        total += p[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw argument_error("simplex point must sum to 1 within 1e-9");
}

} // namespace detail

// Interior of the probability simplex on n outcomes; a point is the full
// probability vector. theta holds the log odds against the last outcome, psi
// the log partition, eta the first n-1 probabilities, phi negative entropy.
// The canonical divergence comes out as kl_divergence(Q, P).
inline DuallyFlatStructure simplex_structure(Eigen::Index n) {
    if (n < 2) throw argument_error("simplex structure needs at least two outcomes");
    DuallyFlatStructure s;
    s.name = "simplex";
    s.theta_of = [n](const VectorXd& p) {
        if (p.size() != n) throw argument_error("simplex point has wrong length");
        detail::require_interior_simplex(p);
        VectorXd th(n - 1);
        for (Eigen::Index i = 0; i + 1 < n; ++i) th[i] = std::log(p[i] / p[n - 1]);
        return th;
    };
    s.eta_of = [n](const VectorXd& p) {
        if (p.size() != n) throw argument_error("simplex point has wrong length");
        detail::require_interior_simplex(p);
        return p.head(n - 1).eval();
    };
    s.psi = [](const VectorXd& th) {
        std::vector<double> terms(static_cast<std::size_t>(th.size()) + 1, 0.0);
        for (Eigen::Index i = 0; i < th.size(); ++i) terms[i] = th[i];
        return log_sum_exp(terms);
    };
    s.phi = [](const VectorXd& eta) {
        double rest = 1.0;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            if (!(eta[i] > 0.0)) throw argument_error("dual simplex point must be positive");
            acc += eta[i] * std::log(eta[i]);
            rest -= eta[i];
        }
        if (!(rest > 0.0)) throw argument_error("dual simplex point must stay interior");
        return acc + rest * std::log(rest);
    };
    s.point_from_theta = [n](const VectorXd& th) {
        if (th.size() != n - 1) throw argument_error("theta has wrong length");
        std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
        for (Eigen::Index i = 0; i + 1 < n; ++i) terms[i] = th[i];
        const double norm = log_sum_exp(terms);
        VectorXd p(n);
        for (Eigen::Index i = 0; i < n; ++i) p[i] = std::exp(terms[i] - norm);
        return p;
    };
    s.point_from_eta = [n](const VectorXd& eta) {
        if (eta.size() != n - 1) throw argument_error("eta has wrong length");
        VectorXd p(n);
        double rest = 1.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            p[i] = eta[i];
            rest -= eta[i];
        }
        p[n - 1] = rest;
        detail::require_interior_simplex(p);
        return p;
    };
    s.random_point = [n](RandomStream& rng) {
        VectorXd p(n);
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            p[i] = -std::log(rng.uniform_pos());
            total += p[i];
        }
        return (p / total).eval();
    };
    return s;
}

// Univariate Gaussians as an exponential family; a point is (mu, sigma).
// theta are the natural parameters, eta the moment parameters (mean, second
// moment), psi the log partition, and phi its Legendre transform. The
// canonical divergence is kl_divergence(Q, P).
inline DuallyFlatStructure gaussian_structure() {
    DuallyFlatStructure s;
    s.name = "gaussian";
    auto check_point = [](const VectorXd& p) {
        if (p.size() != 2) throw argument_error("gaussian point must be (mu, sigma)");
        if (!(p[1] > 0.0)) throw argument_error("gaussian point needs sigma > 0");
    };
    s.theta_of = [check_point](const VectorXd& p) {
        check_point(p);
        const double s2 = p[1] * p[1];
        VectorXd th(2);
        th << p[0] / s2, -0.5 / s2;
        return th;
    };
    s.eta_of = [check_point](const VectorXd& p) {
        check_point(p);
        VectorXd eta(2);
        eta << p[0], p[0] * p[0] + p[1] * p[1];
        return eta;
    };
    s.psi = [](const VectorXd& th) {
        if (!(th[1] < 0.0)) throw argument_error("gaussian theta needs theta_2 < 0");
        return -th[0] * th[0] / (4.0 * th[1]) - 0.5 * std::log(-2.0 * th[1]);
    };
    s.point_from_theta = [](const VectorXd& th) {
        if (!(th[1] < 0.0)) throw argument_error("gaussian theta needs theta_2 < 0");
        const double s2 = -0.5 / th[1];
        VectorXd p(2);
        p << th[0] * s2, std::sqrt(s2);
        return p;
    };
    s.point_from_eta = [](const VectorXd& eta) {
        const double s2 = eta[1] - eta[0] * eta[0];
        if (!(s2 > 0.0))
            throw argument_error("gaussian eta needs second moment above squared mean");
        VectorXd p(2);
        p << eta[0], std::sqrt(s2);
        return p;
    };
    // phi by the Legendre relation phi(eta) = theta(eta) . eta - psi(theta(eta)).
    s.phi = [s](const VectorXd& eta) {
        const VectorXd p = s.point_from_eta(eta);
        const VectorXd th = s.theta_of(p);
        return th.dot(eta) - s.psi(th);
    };
    s.random_point = [](RandomStream& rng) {
        VectorXd p(2);
        p << rng.uniform(-2.0, 2.0), rng.uniform(0.4, 2.5);
        return p;
    };
    return s;
}

// ---------------------------------------------------------------------------
// Comparison of the Gaussian Fisher metric with the hyperbolic upper-half-
// plane metric. Substituting u = mu / sqrt(2) pulls the Fisher metric back to
// (2 / sigma^2) I, exactly twice the hyperbolic metric (1 / sigma^2) I: the
// two geometries agree up to a constant factor of 2, not exactly.

struct PoincareRow {
    double sigma;
    Eigen::Matrix2d pullback;   // Fisher metric in (u, sigma) coordinates
    Eigen::Matrix2d hyperbolic; // (1 / sigma^2) I
    double ratio_min, ratio_max;
};

inline std::vector<PoincareRow> poincare_comparison(std::span<const double> sigmas) {
    std::vector<PoincareRow> rows;
    rows.reserve(sigmas.size());
    const double sqrt2 = std::sqrt(2.0);
    Eigen::Matrix2d jac;
    jac << sqrt2, 0.0, 0.0, 1.0; // d(mu, sigma) / d(u, sigma)
    for (double sigma : sigmas) {
        const FisherMatrix fisher = fim_analytic_gaussian(sigma);
        PoincareRow row;
        row.sigma = sigma;
        row.pullback = jac.transpose() * fisher.entries * jac;
        row.hyperbolic = Eigen::Matrix2d::Identity() / (sigma * sigma);
        row.ratio_min = std::min(row.pullback(0, 0) / row.hyperbolic(0, 0),
                                 row.pullback(1, 1) / row.hyperbolic(1, 1));
        row.ratio_max = std::max(row.pullback(0, 0) / row.hyperbolic(0, 0),
                                 row.pullback(1, 1) / row.hyperbolic(1, 1));
        rows.push_back(row);
    }
    return rows;
}

} // namespace igkit::infogeo
