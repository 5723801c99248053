#pragma once

// Small dense feedforward networks trained by plain gradient descent, by a
// natural-gradient step preconditioned with the empirical Fisher matrix of
// per-sample score vectors, or by a componentwise variant that preconditions
// each layer's weight gradient with its own Gram matrix. All solves go
// through damped SPD factorizations; no matrix is inverted explicitly.

#include <igkit/errors.hpp>
#include <igkit/models.hpp>
#include <igkit/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace igkit::natgrad {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { relu, identity, softmax_final };

struct DenseLayer {
    MatrixXd W; // out x in
    VectorXd b;
    Activation act;
};

struct Network {
    std::vector<DenseLayer> layers;

    Eigen::Index param_count() const {
        Eigen::Index p = 0;
        for (const auto& l : layers) p += l.W.size() + l.b.size();
        return p;
    }
};

// He-style normal initialization of the weights, zero biases.
inline Network make_network(const std::vector<int>& dims,
                            const std::vector<Activation>& activations, std::uint64_t seed) {
    if (dims.size() < 2 || activations.size() != dims.size() - 1)
        throw argument_error("network needs dims (>= 2) and one activation per layer");
    RandomStream rng(seed, 3);
    Network net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] < 1 || dims[l + 1] < 1) throw argument_error("layer sizes must be positive");
        DenseLayer layer;
        layer.W.resize(dims[l + 1], dims[l]);
        const double scale = std::sqrt(2.0 / dims[l]);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
                layer.W(i, j) = scale * rng.normal();
        layer.b = VectorXd::Zero(dims[l + 1]);
        layer.act = activations[l];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace detail {

inline MatrixXd apply_activation(const MatrixXd& z, Activation act) {
    switch (act) {
    case Activation::identity:
        return z;
    case Activation::relu:
        return z.cwiseMax(0.0);
    case Activation::softmax_final: {
        MatrixXd out(z.rows(), z.cols());
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double m = z.col(j).maxCoeff();
            VectorXd e = (z.col(j).array() - m).exp();
            out.col(j) = e / e.sum();
        }
        return out;
    }
    }
    throw argument_error("unknown activation");
}

// Derivative mask of the activation at pre-activation z; relu'(0) = 0.
inline MatrixXd activation_mask(const MatrixXd& z, Activation act) {
    switch (act) {
    case Activation::identity:
        return MatrixXd::Ones(z.rows(), z.cols());
    case Activation::relu:
        return (z.array() > 0.0).cast<double>();
    case Activation::softmax_final:
        throw argument_error("softmax is only supported as the final activation");
    }
    throw argument_error("unknown activation");
}

} // namespace detail

struct ForwardTrace {
    std::vector<MatrixXd> pre;  // pre-activations per layer
    std::vector<MatrixXd> post; // post[0] is the input batch
};

inline ForwardTrace forward(const Network& net, const MatrixXd& X) {
    if (net.layers.empty()) throw argument_error("network has no layers");
    if (X.rows() != net.layers.front().W.cols())
        throw argument_error("input dimension does not match the first layer");
    ForwardTrace trace;
    trace.post.push_back(X);
    for (const auto& layer : net.layers) {
        MatrixXd z = layer.W * trace.post.back();
        z.colwise() += layer.b;
        trace.post.push_back(detail::apply_activation(z, layer.act));
        trace.pre.push_back(std::move(z));
    }
    return trace;
}

// Mean negative log likelihood of the labels under the network output
// probabilities; probabilities are clamped at 1e-12 under the log.
inline double cross_entropy_loss(const MatrixXd& probs, std::span<const int> labels) {
    if (static_cast<std::size_t>(probs.cols()) != labels.size())
        throw argument_error("label count does not match batch size");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        if (y < 0 || y >= probs.rows()) throw argument_error("label out of range");
        acc -= std::log(std::max(probs(y, j), 1e-12));
    }
    return acc / static_cast<double>(probs.cols());
}

struct GradientBundle {
    std::vector<MatrixXd> dW;
    std::vector<VectorXd> db;
};

namespace detail {

// Unreduced per-sample errors dZ_l for the cross-entropy loss behind a final
// softmax layer; column j belongs to sample j.
inline std::vector<MatrixXd> backward_errors(const Network& net, const ForwardTrace& trace,
                                             std::span<const int> labels) {
    const auto L = net.layers.size();
    if (net.layers.back().act != Activation::softmax_final)
        throw argument_error("cross-entropy backward expects a final softmax layer");
    const MatrixXd& probs = trace.post.back();
    if (static_cast<std::size_t>(probs.cols()) != labels.size())
        throw argument_error("label count does not match batch size");

    std::vector<MatrixXd> dz(L);
    dz[L - 1] = probs;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        if (y < 0 || y >= probs.rows()) throw argument_error("label out of range");
        dz[L - 1](y, j) -= 1.0;
    }
    for (std::size_t l = L - 1; l > 0; --l) {
        MatrixXd da = net.layers[l].W.transpose() * dz[l];
        dz[l - 1] = da.cwiseProduct(activation_mask(trace.pre[l - 1], net.layers[l - 1].act));
    }
    return dz;
}

} // namespace detail

// Gradients of the mean cross-entropy loss.
inline GradientBundle backward(const Network& net, const ForwardTrace& trace,
                               std::span<const int> labels) {
    const auto dz = detail::backward_errors(net, trace, labels);
    const double m = static_cast<double>(labels.size());
    GradientBundle g;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g.dW.push_back(dz[l] * trace.post[l].transpose() / m);
        g.db.push_back(dz[l].rowwise().sum() / m);
    }
    return g;
}

// Flattened gradient of each sample's own negative log likelihood, one column
// per sample. Columns average to the flattened mean-loss gradient.
inline MatrixXd per_sample_gradients(const Network& net, const ForwardTrace& trace,
                                     std::span<const int> labels) {
    const auto dz = detail::backward_errors(net, trace, labels);
    const auto m = static_cast<Eigen::Index>(labels.size());
    Eigen::Index p = 0;
    for (const auto& layer : net.layers) p += layer.W.size() + layer.b.size();
    MatrixXd scores(p, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index off = 0;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const MatrixXd outer = dz[l].col(j) * trace.post[l].col(j).transpose();
            scores.col(j).segment(off, outer.size()) =
                Eigen::Map<const VectorXd>(outer.data(), outer.size());
            off += outer.size();
            scores.col(j).segment(off, dz[l].rows()) = dz[l].col(j);
            off += dz[l].rows();
        }
    }
    return scores;
}

inline VectorXd flatten(const GradientBundle& g) {
    Eigen::Index p = 0;
    for (std::size_t l = 0; l < g.dW.size(); ++l) p += g.dW[l].size() + g.db[l].size();
    VectorXd v(p);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
        v.segment(off, g.dW[l].size()) =
            Eigen::Map<const VectorXd>(g.dW[l].data(), g.dW[l].size());
        off += g.dW[l].size();
        v.segment(off, g.db[l].size()) = g.db[l];
        off += g.db[l].size();
    }
    return v;
}

// Rescale the whole bundle so its global Euclidean norm is at most max_norm.
inline GradientBundle clip_gradients(GradientBundle g, double max_norm) {
    if (!(max_norm > 0.0)) throw argument_error("clip norm must be positive");
    double sq = 0.0;
    for (const auto& m : g.dW) sq += m.squaredNorm();
    for (const auto& v : g.db) sq += v.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& m : g.dW) m *= scale;
        for (auto& v : g.db) v *= scale;
    }
    return g;
}

inline Network sgd_step(Network net, const GradientBundle& g, double lr) {
    if (g.dW.size() != net.layers.size())
        throw argument_error("gradient bundle does not match the network");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].W -= lr * g.dW[l];
        net.layers[l].b -= lr * g.db[l];
    }
    return net;
}

namespace detail {

inline Network apply_flat_update(Network net, const VectorXd& delta, double lr) {
    Eigen::Index off = 0;
    for (auto& layer : net.layers) {
        layer.W -= lr * Eigen::Map<const MatrixXd>(delta.data() + off, layer.W.rows(),
                                                   layer.W.cols());
        off += layer.W.size();
        layer.b -= lr * delta.segment(off, layer.b.size());
        off += layer.b.size();
    }
    return net;
}

// Solve (G + gamma I) d = rhs. With zero damping the matrix must be strictly
// positive definite; otherwise the caller is told to add damping.
inline VectorXd damped_spd_solve(const MatrixXd& G, double gamma, const VectorXd& rhs) {
    if (!(gamma >= 0.0)) throw argument_error("damping must be non-negative");
    if (gamma == 0.0) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(G);
        const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
        if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, max_abs)))
            throw degeneracy_error(
                "information matrix is singular; use a positive damping value");
    }
    const MatrixXd damped = G + gamma * MatrixXd::Identity(G.rows(), G.cols());
    return damped.ldlt().solve(rhs);
}

} // namespace detail

struct NaturalGradientConfig {
    double lr = 0.01;
    double gamma = 0.1;
};

// Natural-gradient step with an explicitly supplied information matrix.
inline Network natural_gradient_step_with_fim(const Network& net, const GradientBundle& grads,
                                              const MatrixXd& G,
                                              const NaturalGradientConfig& cfg) {
    const VectorXd flat = flatten(grads);
    if (G.rows() != flat.size() || G.cols() != flat.size())
        throw argument_error("information matrix size does not match the parameter count");
    const VectorXd delta = detail::damped_spd_solve(G, cfg.gamma, flat);
    return detail::apply_flat_update(net, delta, cfg.lr);
}

// Natural-gradient step with G estimated as the empirical outer-product
// Fisher matrix of the flattened per-sample score vectors.
inline Network natural_gradient_step(const Network& net, const GradientBundle& grads,
                                     const MatrixXd& scores, const NaturalGradientConfig& cfg) {
    const MatrixXd G = scores * scores.transpose() / static_cast<double>(scores.cols());
    return natural_gradient_step_with_fim(net, grads, G, cfg);
}

// Componentwise step: each layer's weight gradient is preconditioned on the
// output side by its own Gram matrix, W -= lr (dW dW^T + gamma I)^{-1} dW,
// while biases take a plain gradient step.
inline Network componentwise_ngd_step(Network net, const GradientBundle& grads,
                                      const NaturalGradientConfig& cfg) {
    if (grads.dW.size() != net.layers.size())
        throw argument_error("gradient bundle does not match the network");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const MatrixXd& dW = grads.dW[l];
        const MatrixXd F = dW * dW.transpose();
        MatrixXd update(dW.rows(), dW.cols());
        if (cfg.gamma == 0.0) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> eig(F);
            const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
            if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, max_abs)))
                throw degeneracy_error(
                    "layer Gram matrix is singular; use a positive damping value");
        }
        const MatrixXd damped = F + cfg.gamma * MatrixXd::Identity(F.rows(), F.cols());
        update = damped.ldlt().solve(dW);
        net.layers[l].W -= cfg.lr * update;
        net.layers[l].b -= cfg.lr * grads.db[l];
    }
    return net;
}

// ---------------------------------------------------------------------------
// Training on synthetic two-class Gaussian blobs.

struct Dataset {
    MatrixXd X; // dim x n
    std::vector<int> labels;
};

// Class c has mean +/- separation / 2 on every coordinate, unit deviations.
inline Dataset make_blobs(int n_per_class, int dim, double separation, std::uint64_t seed) {
    if (n_per_class < 1 || dim < 1) throw argument_error("blob sizes must be positive");
    Dataset data;
    data.X.resize(dim, 2 * n_per_class);
    data.labels.resize(static_cast<std::size_t>(2 * n_per_class));
    RandomStream rng(seed, 11);
    for (int c = 0; c < 2; ++c) {
        const double mean = (c == 0 ? -0.5 : 0.5) * separation;
        const auto vals = models::sample(models::UnivariateGaussian(mean, 1.0),
                                         static_cast<std::size_t>(n_per_class * dim), rng);
        for (int j = 0; j < n_per_class; ++j) {
            const int col = c * n_per_class + j;
            for (int d = 0; d < dim; ++d) data.X(d, col) = vals[static_cast<std::size_t>(j * dim + d)];
            data.labels[static_cast<std::size_t>(col)] = c;
        }
    }
    return data;
}

enum class Optimizer { sgd, ngd, cw_ngd };

struct TrainConfig {
    Optimizer optimizer = Optimizer::sgd;
    double lr = 0.01;
    double gamma = 0.1;
    double clip_norm = 0.5;
    int epochs = 10;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Network net;
    std::vector<double> loss_trace; // batch loss before each update step
};

struct divergence_error : error {
    divergence_error(const std::string& msg, std::vector<double> trace)
        : error(msg), loss_trace(std::move(trace)) {}
    std::vector<double> loss_trace;
};

inline TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw argument_error("epochs and batch size must be positive");
    const auto n = static_cast<int>(data.labels.size());
    if (data.X.cols() != n || n == 0) throw argument_error("dataset is empty or inconsistent");

    TrainResult result{std::move(net), {}};
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    RandomStream shuffle_rng(cfg.seed, 7);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        models::shuffle(order, shuffle_rng);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(start + cfg.batch_size, n);
            const int m = stop - start;
            MatrixXd X(data.X.rows(), m);
            std::vector<int> labels(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                X.col(j) = data.X.col(order[static_cast<std::size_t>(start + j)]);
                labels[static_cast<std::size_t>(j)] =
                    data.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + j)])];
            }

            const ForwardTrace trace = forward(result.net, X);
            const double loss = cross_entropy_loss(trace.post.back(), labels);
            if (!std::isfinite(loss) || loss > 1e6)
                throw divergence_error("training loss diverged", result.loss_trace);
            result.loss_trace.push_back(loss);

            GradientBundle grads =
                clip_gradients(backward(result.net, trace, labels), cfg.clip_norm);
            switch (cfg.optimizer) {
            case Optimizer::sgd:
                result.net = sgd_step(std::move(result.net), grads, cfg.lr);
                break;
            case Optimizer::ngd: {
                const MatrixXd scores = per_sample_gradients(result.net, trace, labels);
                result.net = natural_gradient_step(result.net, grads, scores,
                                                   {cfg.lr, cfg.gamma});
                break;
            }
            case Optimizer::cw_ngd:
                result.net = componentwise_ngd_step(std::move(result.net), grads,
                                                    {cfg.lr, cfg.gamma});
                break;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Monte-Carlo check that the sample-mean estimator attains the information
// bound: over repeated N(mu, sigma) samples of size n, the variance of the
// mean is compared against sigma^2 / n.

struct CRLBReport {
    double estimator_variance;
    double bound;
    double ratio;
};

inline CRLBReport crlb_check(double sigma, int n, int trials, std::uint64_t seed) {
    if (!(sigma > 0.0) || n < 1 || trials < 2)
        throw argument_error("crlb_check needs sigma > 0, n >= 1, trials >= 2");
    RandomStream rng(seed, 21);
    std::vector<double> means(static_cast<std::size_t>(trials));
    for (auto& m : means) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += rng.normal(0.0, sigma);
        m = acc / n;
    }
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= trials;
    double var = 0.0;
    for (double m : means) var += (m - grand) * (m - grand);
    var /= trials;
    const double bound = sigma * sigma / n;
    return {var, bound, var / bound};
}

} // namespace igkit::natgrad
