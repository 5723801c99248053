#pragma once

// Probability models used across the library: univariate Gaussians, finite
// Gaussian mixtures, finite discrete distributions, and generic
// exponential-family forms. All mixture arithmetic runs in log space.

#include <igkit/errors.hpp>
#include <igkit/numerics.hpp>
#include <igkit/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace igkit::models {

inline constexpr double log_two_pi = 1.8378770664093454835606594728112;

struct UnivariateGaussian {
    double mu;
    double sigma;

    UnivariateGaussian(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
        if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
            throw argument_error("Gaussian requires finite mu and sigma > 0");
    }
};

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<UnivariateGaussian> components;

    GaussianMixture(std::vector<double> w, std::vector<UnivariateGaussian> comps)
        : weights(std::move(w)), components(std::move(comps)) {
        if (weights.empty() || weights.size() != components.size())
            throw argument_error("mixture needs matching, non-empty weights and components");
        double total = 0.0;
        for (double wi : weights) {
            if (!(wi >= 0.0)) throw argument_error("mixture weights must be non-negative");
            total += wi;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw argument_error("mixture weights must sum to 1 within 1e-12");
    }

    std::size_t size() const { return components.size(); }
};

struct DiscreteDistribution {
    std::vector<double> support;
    std::vector<double> probs;

    DiscreteDistribution(std::vector<double> support_, std::vector<double> probs_)
        : support(std::move(support_)), probs(std::move(probs_)) {
        if (support.empty() || support.size() != probs.size())
            throw argument_error("discrete distribution needs matching, non-empty support/probs");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw argument_error("probabilities must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw argument_error("probabilities must sum to 1 within 1e-12");
        for (std::size_t i = 0; i < support.size(); ++i)
            for (std::size_t j = i + 1; j < support.size(); ++j)
                if (support[i] == support[j])
                    throw argument_error("support points must be distinct");
    }
};

inline double log_pdf(const UnivariateGaussian& g, double x) {
    const double z = (x - g.mu) / g.sigma;
    return -0.5 * z * z - std::log(g.sigma) - 0.5 * log_two_pi;
}

// Membership is by exact support value; off-support points have zero mass.
inline double log_pdf(const DiscreteDistribution& d, double x) {
    for (std::size_t i = 0; i < d.support.size(); ++i)
        if (d.support[i] == x)
            return d.probs[i] > 0.0 ? std::log(d.probs[i])
                                    : -std::numeric_limits<double>::infinity();
    return -std::numeric_limits<double>::infinity();
}

inline std::vector<double> component_log_joint(const GaussianMixture& mix, double x) {
    std::vector<double> lj(mix.size());
    for (std::size_t c = 0; c < mix.size(); ++c)
        lj[c] = (mix.weights[c] > 0.0 ? std::log(mix.weights[c])
                                      : -std::numeric_limits<double>::infinity()) +
                log_pdf(mix.components[c], x);
    return lj;
}

inline double log_pdf(const GaussianMixture& mix, double x) {
    return log_sum_exp(component_log_joint(mix, x));
}

// Posterior component probabilities p(z = c | x), normalized in log space.
inline std::vector<double> responsibilities(const GaussianMixture& mix, double x) {
    auto lj = component_log_joint(mix, x);
    const double norm = log_sum_exp(lj);
    std::vector<double> r(lj.size());
    for (std::size_t c = 0; c < lj.size(); ++c) r[c] = std::exp(lj[c] - norm);
    return r;
}

// Maximum-likelihood Gaussian: sample mean and biased (1/n) variance.
inline UnivariateGaussian mle_gaussian(std::span<const double> data) {
    if (data.size() < 2) throw argument_error("mle_gaussian needs at least two samples");
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (double x : data) var += (x - mean) * (x - mean);
    var /= static_cast<double>(data.size());
    if (!(var > 0.0))
        throw degeneracy_error("constant data: maximum-likelihood variance is degenerate");
    return {mean, std::sqrt(var)};
}

struct ClipRange {
    double lo;
    double hi;
};

inline double apply_clip(double x, const std::optional<ClipRange>& clip) {
    if (!clip) return x;
    return std::clamp(x, clip->lo, clip->hi);
}

inline std::vector<double> sample(const UnivariateGaussian& g, std::size_t n, RandomStream& rng,
                                  std::optional<ClipRange> clip = {}) {
    std::vector<double> out(n);
    for (auto& x : out) x = apply_clip(rng.normal(g.mu, g.sigma), clip);
    return out;
}

// Draws the component from the weights (one uniform), then the Gaussian.
inline std::vector<double> sample(const GaussianMixture& mix, std::size_t n, RandomStream& rng,
                                  std::optional<ClipRange> clip = {}) {
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t c = mix.size() - 1;
        for (std::size_t i = 0; i < mix.size(); ++i) {
            acc += mix.weights[i];
            if (u < acc) {
                c = i;
                break;
            }
        }
        x = apply_clip(rng.normal(mix.components[c].mu, mix.components[c].sigma), clip);
    }
    return out;
}

inline std::vector<double> sample(const DiscreteDistribution& d, std::size_t n,
                                  RandomStream& rng) {
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t c = d.support.size() - 1;
        for (std::size_t i = 0; i < d.support.size(); ++i) {
            acc += d.probs[i];
            if (u < acc) {
                c = i;
                break;
            }
        }
        x = d.support[c];
    }
    return out;
}

// Seeded Fisher-Yates shuffle.
template <class T>
void shuffle(std::vector<T>& values, RandomStream& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(values[i - 1], values[j]);
    }
}

// Reference two-group study population: equal-weight mixture of N(3.7, 0.5)
// and N(2.8, 0.15) scores clipped to [0, 4].
inline GaussianMixture gpa_mixture() {
    return GaussianMixture({0.5, 0.5}, {{3.7, 0.5}, {2.8, 0.15}});
}

// Stratified draw from gpa_mixture(): exactly n_per_class scores from each
// component, clipped, then shuffled with the same stream.
inline std::vector<double> generate_gpa_dataset(std::uint64_t seed, std::size_t n_per_class) {
    const GaussianMixture mix = gpa_mixture();
    const ClipRange clip{0.0, 4.0};
    RandomStream rng(seed, 1);
    std::vector<double> data = sample(mix.components[0], n_per_class, rng, clip);
    const std::vector<double> second = sample(mix.components[1], n_per_class, rng, clip);
    data.insert(data.end(), second.begin(), second.end());
    shuffle(data, rng);
    return data;
}

// ---------------------------------------------------------------------------
// Exponential-family form: p(x) = h(x) exp(eta . T(x) - A(eta)).

struct EFSupport {
    bool is_discrete;
    std::vector<double> points; // discrete case
    double lo = 0.0, hi = 0.0;  // continuous case

    static EFSupport discrete(std::vector<double> pts) { return {true, std::move(pts), 0, 0}; }
    static EFSupport continuous(double lo, double hi) { return {false, {}, lo, hi}; }
};

class ExponentialFamilyModel {
  public:
    ExponentialFamilyModel(std::function<double(double)> log_h,
                           std::function<Eigen::VectorXd(double)> T, Eigen::VectorXd eta,
                           EFSupport support,
                           std::function<double(const Eigen::VectorXd&)> log_partition = nullptr)
        : log_h_(std::move(log_h)), T_(std::move(T)), eta_(std::move(eta)),
          support_(std::move(support)), log_partition_(std::move(log_partition)) {}

    const Eigen::VectorXd& eta() const { return eta_; }
    const EFSupport& support() const { return support_; }
    Eigen::VectorXd T(double x) const { return T_(x); }

    // Analytic log-partition when supplied, else computed from the support:
    // log sum (discrete) or log integral (continuous) of h(x) exp(eta . T(x)).
    double log_partition() const {
        if (log_partition_) return log_partition_(eta_);
        if (support_.is_discrete) {
            std::vector<double> terms;
            terms.reserve(support_.points.size());
            for (double x : support_.points) terms.push_back(log_h_(x) + eta_.dot(T_(x)));
            return log_sum_exp(terms);
        }
        auto log_kernel = [&](double x) { return log_h_(x) + eta_.dot(T_(x)); };
        double shift = -std::numeric_limits<double>::infinity();
        const int grid = 256;
        for (int i = 0; i <= grid; ++i)
            shift = std::max(shift, log_kernel(support_.lo +
                                               (support_.hi - support_.lo) * i / grid));
        const double mass = integrate(
            [&](double x) { return std::exp(log_kernel(x) - shift); }, support_.lo, support_.hi,
            1e-12);
        return shift + std::log(mass);
    }

    double log_pdf(double x) const { return log_h_(x) + eta_.dot(T_(x)) - log_partition(); }

  private:
    std::function<double(double)> log_h_;
    std::function<Eigen::VectorXd(double)> T_;
    Eigen::VectorXd eta_;
    EFSupport support_;
    std::function<double(const Eigen::VectorXd&)> log_partition_;
};

// N(mu, sigma) written in exponential-family coordinates:
// T(x) = (x, x^2), eta = (mu/sigma^2, -1/(2 sigma^2)), h(x) = 1/sqrt(2 pi).
inline ExponentialFamilyModel gaussian_in_exponential_family(const UnivariateGaussian& g) {
    const double s2 = g.sigma * g.sigma;
    Eigen::VectorXd eta(2);
    eta << g.mu / s2, -0.5 / s2;
    auto log_partition = [](const Eigen::VectorXd& e) {
        const double var = -0.5 / e[1];
        const double mu = e[0] * var;
        return mu * mu / (2.0 * var) + 0.5 * std::log(var);
    };
    return {[](double) { return -0.5 * log_two_pi; },
            [](double x) {
                Eigen::VectorXd t(2);
                t << x, x * x;
                return t;
            },
            eta,
            EFSupport::continuous(g.mu - 12.0 * g.sigma, g.mu + 12.0 * g.sigma),
            log_partition};
}

// Bernoulli(p) over {0, 1}: T(x) = x, eta = log(p / (1-p)).
inline ExponentialFamilyModel bernoulli_in_exponential_family(double p) {
    if (!(p > 0.0 && p < 1.0)) throw argument_error("Bernoulli parameter must lie in (0, 1)");
    Eigen::VectorXd eta(1);
    eta << std::log(p / (1.0 - p));
    return {[](double) { return 0.0; },
            [](double x) {
                Eigen::VectorXd t(1);
                t << x;
                return t;
            },
            eta,
            EFSupport::discrete({0.0, 1.0}),
            [](const Eigen::VectorXd& e) { return std::log1p(std::exp(e[0])); }};
}

// ---------------------------------------------------------------------------
// Joint exponential family over an observed real variable x and a hidden
// variable z with a finite alphabet:
//   p(x, z) = h(x, z) exp(eta . T(x, z) - A).
// `hidden_block` lists the indices of eta that multiply statistics depending
// on z alone; conditioning on x leaves those coordinates untouched.

struct JointExponentialFamily {
    std::function<double(double, double)> log_h;
    std::function<Eigen::VectorXd(double, double)> T;
    Eigen::VectorXd eta;
    double log_partition;
    std::vector<double> z_support;
    std::vector<int> hidden_block;

    double log_pdf(double x, double z) const {
        return log_h(x, z) + eta.dot(T(x, z)) - log_partition;
    }

    Eigen::VectorXd hidden_eta() const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(hidden_block.size()));
        for (std::size_t i = 0; i < hidden_block.size(); ++i) out[i] = eta[hidden_block[i]];
        return out;
    }
};

// Gaussian mixture as a joint family over (x, z), z in {0, .., K-1}. Per
// component c the statistics are (1[z=c], 1[z=c] x, 1[z=c] x^2); the matching
// natural parameters encode (weight, mean, variance). The indicator
// coordinates form the hidden block.
inline JointExponentialFamily joint_from_mixture(const GaussianMixture& mix) {
    const auto k = mix.size();
    for (double w : mix.weights)
        if (!(w > 0.0))
            throw argument_error("joint form requires strictly positive mixture weights");
    Eigen::VectorXd eta(3 * static_cast<Eigen::Index>(k));
    std::vector<int> hidden;
    hidden.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double s2 = mix.components[c].sigma * mix.components[c].sigma;
        eta[3 * c] = std::log(mix.weights[c]) - std::log(mix.components[c].sigma) -
                     mix.components[c].mu * mix.components[c].mu / (2.0 * s2);
        eta[3 * c + 1] = mix.components[c].mu / s2;
        eta[3 * c + 2] = -0.5 / s2;
        hidden.push_back(static_cast<int>(3 * c));
    }
    std::vector<double> z_support(k);
    for (std::size_t c = 0; c < k; ++c) z_support[c] = static_cast<double>(c);
    auto T = [k](double x, double z) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(k));
        const auto c = static_cast<Eigen::Index>(z);
        t[3 * c] = 1.0;
        t[3 * c + 1] = x;
        t[3 * c + 2] = x * x;
        return t;
    };
    return {[](double, double) { return -0.5 * log_two_pi; }, T, eta, 0.0, z_support, hidden};
}

// Conditional p(z | x) of a joint family, returned in exponential-family form
// over z. Bayes substitution cancels the base measure and the joint log
// partition, so the natural parameter vector carries over unchanged and only
// the log partition is adjusted. Requires the base measure to be constant in z
// at the conditioning point; otherwise the family form is not preserved.
inline ExponentialFamilyModel conditional_given_observed(const JointExponentialFamily& joint,
                                                         double x) {
    if (joint.z_support.empty()) throw argument_error("joint family has empty hidden alphabet");
    const double ref = joint.log_h(x, joint.z_support.front());
    for (double z : joint.z_support)
        if (std::abs(joint.log_h(x, z) - ref) > 1e-12 * std::max(1.0, std::abs(ref)))
            throw unsupported_model_error(
                "base measure depends on the hidden variable: conditional is not in "
                "exponential-family form");
    auto T = [joint_T = joint.T, x](double z) { return joint_T(x, z); };
    return {[](double) { return 0.0; }, T, joint.eta, EFSupport::discrete(joint.z_support)};
}

// ---------------------------------------------------------------------------
// Dataset files: one value per line, printed with 17 significant digits so a
// round trip through text reproduces the double bit pattern.

inline void write_dataset(std::ostream& out, std::span<const double> values) {
    char buf[64];
    for (double v : values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << '\n';
    }
    if (!out) throw io_error("failed writing dataset stream");
}

inline void write_dataset(const std::string& path, std::span<const double> values) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open dataset file for writing: " + path);
    write_dataset(out, values);
}

inline std::vector<double> read_dataset(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(begin, end - begin + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            throw io_error("dataset line " + std::to_string(line_no) + " is not a number");
        }
        if (used != token.size())
            throw io_error("dataset line " + std::to_string(line_no) + " has trailing characters");
        values.push_back(v);
    }
    return values;
}

inline std::vector<double> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset file: " + path);
    return read_dataset(in);
}

} // namespace igkit::models
