#pragma once

// Expectation-maximization for univariate Gaussian mixtures, the evidence
// decomposition behind it, a maximum-entropy solver driven by its convex
// dual, and the dual-projection (e/m) formulation of the same mixture fit.

#include <igkit/errors.hpp>
#include <igkit/infogeo.hpp>
#include <igkit/models.hpp>
#include <igkit/numerics.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace igkit::emcore {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Variance floor that converts a silently collapsing component into an error.
inline constexpr double variance_floor = 1e-8;

struct EStepResult {
    MatrixXd resp; // n x K, rows are posterior component probabilities
    double loglik; // observed-data log likelihood of the current mixture
};

struct EMState {
    models::GaussianMixture mixture;
    MatrixXd responsibilities;
    double loglik;
    int iterations;
    std::vector<double> loglik_trace; // log likelihood of each iterate, start included
};

struct component_collapse_error : degeneracy_error {
    component_collapse_error(const std::string& msg, int comp,
                             std::optional<EMState> state = std::nullopt)
        : degeneracy_error(msg), component(comp), partial(std::move(state)) {}
    int component;
    std::optional<EMState> partial; // last healthy iterate, when thrown from a driver loop
};

inline EStepResult e_step(std::span<const double> data, const models::GaussianMixture& mix) {
    if (data.empty()) throw argument_error("e_step needs a non-empty dataset");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto k = static_cast<Eigen::Index>(mix.size());
    MatrixXd resp(n, k);
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto lj = models::component_log_joint(mix, data[i]);
        const double norm = log_sum_exp(lj);
        loglik += norm;
        for (Eigen::Index c = 0; c < k; ++c) resp(i, c) = std::exp(lj[c] - norm);
    }
    return {std::move(resp), loglik};
}

// Responsibility-weighted updates: each mean uses its weighted average, each
// variance the weighted spread about that new mean (biased normalization).
// Weights stay at their previous values unless update_weights is set.
inline models::GaussianMixture m_step(std::span<const double> data, const MatrixXd& resp,
                                      const models::GaussianMixture& previous,
                                      bool update_weights = false) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto k = static_cast<Eigen::Index>(previous.size());
    if (resp.rows() != n || resp.cols() != k)
        throw argument_error("responsibility matrix shape does not match data and mixture");

    std::vector<double> weights(previous.weights);
    std::vector<models::UnivariateGaussian> comps;
    comps.reserve(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const double mass = resp.col(c).sum();
        if (!(mass > 1e-12))
            throw component_collapse_error(
                "component " + std::to_string(c) + " received no responsibility mass",
                static_cast<int>(c));
        double mu = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) mu += resp(i, c) * data[i];
        mu /= mass;
        double var = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) var += resp(i, c) * (data[i] - mu) * (data[i] - mu);
        var /= mass;
        if (var < variance_floor)
            throw component_collapse_error(
                "component " + std::to_string(c) + " collapsed below the variance floor",
                static_cast<int>(c));
        comps.emplace_back(mu, std::sqrt(var));
        if (update_weights) weights[c] = mass / static_cast<double>(n);
    }
    if (update_weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        for (double& w : weights) w /= total;
    }
    return {std::move(weights), std::move(comps)};
}

struct EMOptions {
    double tol = 1e-4; // per-parameter absolute change
    int max_iter = 1000;
    bool update_weights = false;
};

// Data-driven random starting point: means uniform over the observed range,
// spreads uniform in [0.3, 1.0] times the sample deviation, uniform weights.
inline models::GaussianMixture random_mixture_init(std::span<const double> data, std::size_t k,
                                                   RandomStream& rng) {
    if (k == 0) throw argument_error("mixture needs at least one component");
    if (data.size() < 2) throw argument_error("need at least two observations");
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const auto fit = models::mle_gaussian(data);
    std::vector<double> weights(k, 1.0 / static_cast<double>(k));
    std::vector<models::UnivariateGaussian> comps;
    comps.reserve(k);
    for (std::size_t c = 0; c < k; ++c)
        comps.push_back({rng.uniform(*lo, *hi), fit.sigma * rng.uniform(0.3, 1.0)});
    return {std::move(weights), std::move(comps)};
}

namespace detail {

inline double parameter_delta(const models::GaussianMixture& a, const models::GaussianMixture& b,
                              bool include_weights) {
    double d = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        d = std::max(d, std::abs(a.components[c].mu - b.components[c].mu));
        d = std::max(d, std::abs(a.components[c].sigma - b.components[c].sigma));
        if (include_weights) d = std::max(d, std::abs(a.weights[c] - b.weights[c]));
    }
    return d;
}

} // namespace detail

// Alternate e_step and m_step until every parameter moves less than tol.
// max_iter = 0 echoes the initial state. A collapse inside m_step is rethrown
// with the last healthy iterate attached.
inline EMState run_em(std::span<const double> data, const models::GaussianMixture& init,
                      const EMOptions& opts = {}) {
    if (opts.max_iter < 0) throw argument_error("max_iter must be non-negative");
    if (!(opts.tol > 0.0)) throw argument_error("tol must be positive");

    models::GaussianMixture cur = init;
    EStepResult es = e_step(data, cur);
    std::vector<double> trace{es.loglik};
    int iterations = 0;
    for (int t = 1; t <= opts.max_iter; ++t) {
        models::GaussianMixture next = [&] {
            try {
                return m_step(data, es.resp, cur, opts.update_weights);
            } catch (component_collapse_error& e) {
                throw component_collapse_error(
                    e.what(), e.component,
                    EMState{cur, es.resp, es.loglik, iterations, trace});
            }
        }();
        const double delta = detail::parameter_delta(cur, next, opts.update_weights);
        cur = std::move(next);
        es = e_step(data, cur);
        trace.push_back(es.loglik);
        iterations = t;
        if (delta < opts.tol) break;
    }
    return {std::move(cur), std::move(es.resp), es.loglik, iterations, std::move(trace)};
}

// ---------------------------------------------------------------------------
// Evidence decomposition log p(x) = ELBO(q) + KL(q || posterior), evaluated
// with all three terms independently accumulated.

struct EvidenceDecomposition {
    double loglik;
    double elbo;
    double kl;
};

inline EvidenceDecomposition evidence_decomposition(std::span<const double> data,
                                                    const models::GaussianMixture& mix,
                                                    const MatrixXd& q) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto k = static_cast<Eigen::Index>(mix.size());
    if (q.rows() != n || q.cols() != k)
        throw argument_error("q matrix shape does not match data and mixture");
    EvidenceDecomposition out{0.0, 0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (!(q(i, c) >= 0.0)) throw argument_error("q entries must be non-negative");
            row_sum += q(i, c);
        }
        if (std::abs(row_sum - 1.0) > 1e-9)
            throw argument_error("each q row must sum to 1 within 1e-9");
        const auto lj = models::component_log_joint(mix, data[i]);
        const double lse = log_sum_exp(lj);
        out.loglik += lse;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (q(i, c) == 0.0) continue;
            const double lq = std::log(q(i, c));
            out.elbo += q(i, c) * (lj[c] - lq);
            out.kl += q(i, c) * (lq - (lj[c] - lse));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Maximum entropy on a finite support under expectation constraints
// E[f_k] = g_k. The solution has Boltzmann form
//   p_i = exp(-sum_k lambda_k f_k(x_i)) / Z(lambda),
// and the multipliers minimize the convex dual  log Z(lambda) + lambda . g.

struct MaxEntProblem {
    std::vector<double> support;
    std::vector<std::function<double(double)>> constraints;
    std::vector<double> targets;
};

struct MaxEntSolution {
    models::DiscreteDistribution distribution;
    VectorXd lambda;
    double log_partition;
    double entropy;
    int iterations;
};

namespace detail {

struct MaxEntDual {
    const MatrixXd& F; // m x n constraint values
    const VectorXd& g;

    double log_partition(const VectorXd& lambda) const {
        std::vector<double> w(static_cast<std::size_t>(F.cols()));
        for (Eigen::Index i = 0; i < F.cols(); ++i) w[i] = -lambda.dot(F.col(i));
        return log_sum_exp(w);
    }

    double value(const VectorXd& lambda) const {
        return log_partition(lambda) + lambda.dot(g);
    }

    // p, gradient g - E_p[f], and Hessian Cov_p(f) at lambda.
    void derivatives(const VectorXd& lambda, VectorXd& p, VectorXd& grad, MatrixXd& hess) const {
        const auto n = F.cols();
        const double logz = log_partition(lambda);
        p.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) p[i] = std::exp(-lambda.dot(F.col(i)) - logz);
        const VectorXd mean = F * p;
        grad = g - mean;
        hess = F * p.asDiagonal() * F.transpose() - mean * mean.transpose();
    }
};

} // namespace detail

inline MaxEntSolution maxent_solve(const MaxEntProblem& problem, double tol = 1e-10,
                                   int max_iter = 500) {
    const auto n = static_cast<Eigen::Index>(problem.support.size());
    const auto m = static_cast<Eigen::Index>(problem.constraints.size());
    if (n == 0) throw argument_error("maxent support must be non-empty");
    if (problem.targets.size() != problem.constraints.size())
        throw argument_error("constraint and target counts differ");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (problem.support[i] == problem.support[j])
                throw argument_error("maxent support points must be distinct");

    if (m == 0) {
        // No constraints: the maximizer is exactly uniform.
        std::vector<double> probs(n, 1.0 / static_cast<double>(n));
        models::DiscreteDistribution dist(problem.support, probs);
        const double logz = std::log(static_cast<double>(n));
        return {std::move(dist), VectorXd::Zero(0), logz, logz, 0};
    }

    MatrixXd F(m, n);
    for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index i = 0; i < n; ++i) F(k, i) = problem.constraints[k](problem.support[i]);
    VectorXd g(m);
    for (Eigen::Index k = 0; k < m; ++k) g[k] = problem.targets[k];

    const detail::MaxEntDual dual{F, g};
    VectorXd lambda = VectorXd::Zero(m);
    double value = dual.value(lambda);
    double damping = 1e-3;
    VectorXd p, grad;
    MatrixXd hess;

    auto finalize = [&](int iters) {
        std::vector<double> probs(p.data(), p.data() + n);
        double total = 0.0;
        for (double pr : probs) total += pr;
        for (double& pr : probs) pr /= total;
        const double logz = dual.log_partition(lambda);
        const double entropy = logz + lambda.dot(g);
        return MaxEntSolution{models::DiscreteDistribution(problem.support, probs), lambda, logz,
                              entropy, iters};
    };

    for (int iter = 1; iter <= max_iter; ++iter) {
        dual.derivatives(lambda, p, grad, hess);
        const double residual = grad.cwiseAbs().maxCoeff();
        if (residual < tol) return finalize(iter - 1);
        // Damped Newton step on the dual; grow the damping until the value
        // actually decreases, relax it again after a successful step. When the
        // predicted decrease of the first attempt is already below double
        // resolution the value cannot improve further, so a small residual
        // that sits above an aggressive tol is accepted as converged.
        bool first_attempt = true;
        while (true) {
            const MatrixXd damped = hess + damping * MatrixXd::Identity(m, m);
            const VectorXd delta = damped.ldlt().solve(-grad);
            const VectorXd candidate = lambda + delta;
            const double cand_value = dual.value(candidate);
            if (cand_value < value) {
                lambda = candidate;
                value = cand_value;
                damping = std::max(damping / 10.0, 1e-12);
                break;
            }
            const double predicted = -0.5 * grad.dot(delta);
            if (first_attempt && residual < 1e-6 &&
                predicted < 8.0 * std::numeric_limits<double>::epsilon() *
                                (1.0 + std::abs(value)))
                return finalize(iter - 1);
            first_attempt = false;
            damping *= 10.0;
            if (damping > 1e18)
                throw convergence_error("maxent dual made no progress at maximal damping");
        }
        if (lambda.cwiseAbs().maxCoeff() > 1e12)
            throw infeasibility_error(
                "maxent multipliers diverged: targets appear infeasible for this support");
    }
    throw convergence_error("maxent solver exhausted its iteration budget");
}

// Finite-difference check of the dual identities: the entropy gradient in the
// targets recovers the multipliers, and the log-partition gradient in the
// multipliers recovers the negated targets.
struct MaxEntIdentityReport {
    double max_entropy_gradient_error; // | dS/dg_k - lambda_k |
    double max_logz_gradient_error;    // | dlogZ/dlambda_k + g_k |
};

inline MaxEntIdentityReport check_maxent_identities(const MaxEntProblem& problem,
                                                    double delta = 1e-4) {
    const MaxEntSolution base = maxent_solve(problem, 1e-12);
    const auto m = static_cast<Eigen::Index>(problem.constraints.size());
    MaxEntIdentityReport report{0.0, 0.0};

    for (Eigen::Index k = 0; k < m; ++k) {
        MaxEntProblem plus = problem, minus = problem;
        plus.targets[k] += delta;
        minus.targets[k] -= delta;
        const double s_plus = maxent_solve(plus, 1e-12).entropy;
        const double s_minus = maxent_solve(minus, 1e-12).entropy;
        const double fd = (s_plus - s_minus) / (2.0 * delta);
        report.max_entropy_gradient_error =
            std::max(report.max_entropy_gradient_error, std::abs(fd - base.lambda[k]));
    }

    MatrixXd F(m, static_cast<Eigen::Index>(problem.support.size()));
    for (Eigen::Index k = 0; k < m; ++k)
        for (std::size_t i = 0; i < problem.support.size(); ++i)
            F(k, static_cast<Eigen::Index>(i)) = problem.constraints[k](problem.support[i]);
    VectorXd g(m);
    for (Eigen::Index k = 0; k < m; ++k) g[k] = problem.targets[k];
    const detail::MaxEntDual dual{F, g};
    for (Eigen::Index k = 0; k < m; ++k) {
        VectorXd lp = base.lambda, lm = base.lambda;
        lp[k] += delta;
        lm[k] -= delta;
        const double fd = (dual.log_partition(lp) - dual.log_partition(lm)) / (2.0 * delta);
        report.max_logz_gradient_error =
            std::max(report.max_logz_gradient_error, std::abs(fd + g[k]));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Dual projections.

// m-projection of an empirical distribution onto the Boltzmann family with
// statistics f_k: the KL minimizer matches moments, so it is the maximum-
// entropy member with targets E_phat[f_k].
inline MaxEntSolution m_projection(const models::DiscreteDistribution& p_hat,
                                   const std::vector<std::function<double(double)>>& stats) {
    MaxEntProblem problem;
    problem.support = p_hat.support;
    problem.constraints = stats;
    problem.targets.reserve(stats.size());
    for (const auto& f : stats) {
        double target = 0.0;
        for (std::size_t i = 0; i < p_hat.support.size(); ++i)
            target += p_hat.probs[i] * f(p_hat.support[i]);
        problem.targets.push_back(target);
    }
    return maxent_solve(problem, 1e-12);
}

// m-projection of a sample onto the Gaussian family by moment matching.
inline models::UnivariateGaussian m_projection_gaussian(std::span<const double> data) {
    if (data.size() < 2) throw argument_error("m_projection_gaussian needs at least two samples");
    double m1 = 0.0, m2 = 0.0;
    for (double x : data) {
        m1 += x;
        m2 += x * x;
    }
    m1 /= static_cast<double>(data.size());
    m2 /= static_cast<double>(data.size());
    const double var = m2 - m1 * m1;
    if (!(var > 0.0)) throw degeneracy_error("constant data: matched variance is degenerate");
    return {m1, std::sqrt(var)};
}

// e-projection of a joint model onto the manifold of distributions with the
// empirical observed marginal: q(x, z) = q_hat(x) p(z | x). The conditional
// stays in exponential-family form with the hidden-block natural parameters
// passed through untouched.
struct DataManifoldPoint {
    std::vector<double> x;  // observed atoms
    MatrixXd conditional;   // n x K, rows p(z | x_i)
    VectorXd hidden_eta;    // hidden-block natural parameters of the conditional
};

inline DataManifoldPoint e_projection(const models::JointExponentialFamily& joint,
                                      std::span<const double> data) {
    if (data.empty()) throw argument_error("e_projection needs a non-empty dataset");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto k = static_cast<Eigen::Index>(joint.z_support.size());
    MatrixXd conditional(n, k);
    VectorXd hidden_eta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const models::ExponentialFamilyModel cond =
            models::conditional_given_observed(joint, data[i]);
        if (i == 0) {
            hidden_eta.resize(static_cast<Eigen::Index>(joint.hidden_block.size()));
            for (std::size_t b = 0; b < joint.hidden_block.size(); ++b)
                hidden_eta[static_cast<Eigen::Index>(b)] = cond.eta()[joint.hidden_block[b]];
        }
        for (Eigen::Index c = 0; c < k; ++c)
            conditional(i, c) = std::exp(cond.log_pdf(joint.z_support[c]));
    }
    return {std::vector<double>(data.begin(), data.end()), std::move(conditional),
            std::move(hidden_eta)};
}

// ---------------------------------------------------------------------------
// Geometric formulation of the mixture fit: alternate the e-projection of the
// current model onto the data manifold with the m-projection of that point
// back onto the model family (moment matching per component). The recorded
// divergence KL(q_t || p_theta) equals the negative evidence lower bound; for
// the exact-posterior q_t produced by the e-projection it is -loglik(theta_t).

struct GeometricEMStep {
    VectorXd eta;   // per component: responsibility mass, first, second moment
    VectorXd theta; // per component: weight, mean, deviation
    double kl;
};

struct GeometricEMResult {
    models::GaussianMixture mixture;
    std::vector<GeometricEMStep> trajectory;
    int iterations;
    std::vector<double> loglik_trace; // same convention as EMState
};

inline GeometricEMResult run_em_geometric(std::span<const double> data,
                                          const models::GaussianMixture& init,
                                          const EMOptions& opts = {}) {
    if (opts.max_iter < 0) throw argument_error("max_iter must be non-negative");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto k = static_cast<Eigen::Index>(init.size());

    models::GaussianMixture cur = init;
    GeometricEMResult out{cur, {}, 0, {}};
    std::vector<double>& loglik_trace = out.loglik_trace;

    auto pack_theta = [&](const models::GaussianMixture& mix) {
        VectorXd th(3 * k);
        for (Eigen::Index c = 0; c < k; ++c) {
            th[3 * c] = mix.weights[c];
            th[3 * c + 1] = mix.components[c].mu;
            th[3 * c + 2] = mix.components[c].sigma;
        }
        return th;
    };

    for (int t = 1; t <= opts.max_iter; ++t) {
        const models::JointExponentialFamily joint = models::joint_from_mixture(cur);
        const DataManifoldPoint q = e_projection(joint, data);
        const EvidenceDecomposition ed = evidence_decomposition(data, cur, q.conditional);
        loglik_trace.push_back(ed.loglik);

        VectorXd eta(3 * k);
        for (Eigen::Index c = 0; c < k; ++c) {
            double mass = 0.0, m1 = 0.0, m2 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                mass += q.conditional(i, c);
                m1 += q.conditional(i, c) * data[i];
                m2 += q.conditional(i, c) * data[i] * data[i];
            }
            eta[3 * c] = mass / static_cast<double>(n);
            eta[3 * c + 1] = m1 / static_cast<double>(n);
            eta[3 * c + 2] = m2 / static_cast<double>(n);
        }

        models::GaussianMixture next = [&] {
            std::vector<double> weights(cur.weights);
            std::vector<models::UnivariateGaussian> comps;
            comps.reserve(k);
            for (Eigen::Index c = 0; c < k; ++c) {
                const double mass = eta[3 * c];
                const double mu = mass > 0.0 ? eta[3 * c + 1] / mass : 0.0;
                const double var = mass > 0.0 ? eta[3 * c + 2] / mass - mu * mu : 0.0;
                if (!(mass > 1e-12) || var < variance_floor)
                    throw component_collapse_error(
                        "component " + std::to_string(c) + " collapsed in the moment update",
                        static_cast<int>(c),
                        EMState{cur, q.conditional, ed.loglik, t - 1, loglik_trace});
                comps.emplace_back(mu, std::sqrt(var));
                if (opts.update_weights) weights[c] = mass;
            }
            if (opts.update_weights) {
                double total = 0.0;
                for (double w : weights) total += w;
                for (double& w : weights) w /= total;
            }
            return models::GaussianMixture(std::move(weights), std::move(comps));
        }();

        out.trajectory.push_back({std::move(eta), pack_theta(next), -ed.elbo});
        const double delta = detail::parameter_delta(cur, next, opts.update_weights);
        cur = std::move(next);
        out.iterations = t;
        if (delta < opts.tol) break;
    }
    loglik_trace.push_back(e_step(data, cur).loglik);
    out.mixture = std::move(cur);
    return out;
}

// Gap between "map of the mean" and "mean of the map" for a statistic applied
// to hidden-variable posteriors; zero (up to round-off) exactly when the
// statistic is affine, which is what makes the two mixture-fit formulations
// coincide.
struct LinearityReport {
    VectorXd mean_of_map;
    VectorXd map_of_mean;
    double gap; // max-norm difference
};

inline LinearityReport linearity_equivalence_check(
    const std::function<VectorXd(const VectorXd&)>& map,
    const std::vector<VectorXd>& samples) {
    if (samples.empty()) throw argument_error("linearity check needs at least one sample");
    VectorXd mean = VectorXd::Zero(samples.front().size());
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    VectorXd mean_map = VectorXd::Zero(map(samples.front()).size());
    for (const auto& s : samples) mean_map += map(s);
    mean_map /= static_cast<double>(samples.size());
    const VectorXd map_mean = map(mean);
    return {mean_map, map_mean, (mean_map - map_mean).cwiseAbs().maxCoeff()};
}

} // namespace igkit::emcore
