#include <igkit/natgrad.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace igkit;
using namespace igkit::natgrad;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Network tiny_net(std::uint64_t seed) {
    return make_network({2, 3, 2}, {Activation::relu, Activation::softmax_final}, seed);
}

double loss_at(const Network& net, const MatrixXd& X, const std::vector<int>& labels) {
    const auto trace = forward(net, X);
    return cross_entropy_loss(trace.post.back(), labels);
}

MatrixXd random_batch(int dim, int n, RandomStream& rng) {
    MatrixXd X(dim, n);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.normal();
    return X;
}

} // namespace

TEST(MakeNetwork, ShapesSeedsAndValidation) {
    const auto net = tiny_net(5);
    ASSERT_EQ(net.layers.size(), 2u);
    EXPECT_EQ(net.layers[0].W.rows(), 3);
    EXPECT_EQ(net.layers[0].W.cols(), 2);
    EXPECT_EQ(net.layers[1].W.rows(), 2);
    EXPECT_EQ(net.param_count(), 3 * 2 + 3 + 2 * 3 + 2);
    EXPECT_TRUE(net.layers[0].b.isZero(0.0));
    const auto again = tiny_net(5);
    EXPECT_EQ(net.layers[0].W(0, 0), again.layers[0].W(0, 0));
    const auto other = tiny_net(6);
    EXPECT_NE(net.layers[0].W(0, 0), other.layers[0].W(0, 0));
    EXPECT_THROW(make_network({2}, {}, 0), argument_error);
    EXPECT_THROW(make_network({2, 3}, {}, 0), argument_error);
    EXPECT_THROW(make_network({2, 0}, {Activation::relu}, 0), argument_error);
}

TEST(Forward, IdentityLayerPassesInputThrough) {
    Network net;
    DenseLayer layer{MatrixXd::Identity(2, 2), VectorXd::Zero(2), Activation::identity};
    net.layers.push_back(layer);
    MatrixXd X(2, 3);
    X << 1.0, -2.0, 0.5, 0.0, 3.0, -1.5;
    const auto trace = forward(net, X);
    EXPECT_TRUE(trace.post.back().isApprox(X, 0.0));
    MatrixXd bad(3, 1);
    EXPECT_THROW(forward(net, bad), argument_error);
}

TEST(Forward, ReluZeroesNegativePreActivations) {
    Network net;
    net.layers.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), Activation::relu});
    MatrixXd X(2, 2);
    X << -1.0, 2.0, 3.0, -4.0;
    const auto out = forward(net, X).post.back();
    EXPECT_DOUBLE_EQ(out(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(out(1, 0), 3.0);
    EXPECT_DOUBLE_EQ(out(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(out(1, 1), 0.0);
}

TEST(Forward, TwoLayerHandComposition) {
    Network net;
    MatrixXd W0(2, 2), W1(2, 2);
    W0 << 1.0, 2.0, -1.0, 0.5;
    W1 << 0.3, -0.2, 0.1, 0.4;
    VectorXd b0(2), b1(2);
    b0 << 0.1, -0.3;
    b1 << 0.0, 0.2;
    net.layers.push_back({W0, b0, Activation::relu});
    net.layers.push_back({W1, b1, Activation::identity});
    VectorXd x(2);
    x << 0.7, -0.4;
    const VectorXd h = (W0 * x + b0).cwiseMax(0.0);
    const VectorXd y = W1 * h + b1;
    const auto out = forward(net, x).post.back();
    EXPECT_NEAR(out(0, 0), y[0], 1e-12);
    EXPECT_NEAR(out(1, 0), y[1], 1e-12);
}

TEST(Forward, SoftmaxColumnsAreDistributions) {
    const auto net = tiny_net(3);
    RandomStream rng(1, 11);
    const MatrixXd X = random_batch(2, 5, rng);
    const MatrixXd probs = forward(net, X).post.back();
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
        EXPECT_NEAR(probs.col(j).sum(), 1.0, 1e-12);
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            EXPECT_GT(probs(i, j), 0.0);
            EXPECT_LT(probs(i, j), 1.0);
        }
    }
}

TEST(CrossEntropy, KnownValues) {
    MatrixXd perfect(2, 2);
    perfect << 1.0, 0.0, 0.0, 1.0;
    const std::vector<int> labels{0, 1};
    EXPECT_DOUBLE_EQ(cross_entropy_loss(perfect, labels), 0.0);
    MatrixXd even = MatrixXd::Constant(2, 2, 0.5);
    EXPECT_NEAR(cross_entropy_loss(even, labels), std::log(2.0), 1e-14);
    MatrixXd mixed(2, 2);
    mixed << 0.9, 0.2, 0.1, 0.8;
    const double expected = -0.5 * (std::log(0.9) + std::log(0.8));
    EXPECT_NEAR(cross_entropy_loss(mixed, labels), expected, 1e-14);
    EXPECT_THROW(cross_entropy_loss(even, std::vector<int>{0}), argument_error);
    EXPECT_THROW(cross_entropy_loss(even, std::vector<int>{0, 2}), argument_error);
}

TEST(CrossEntropy, VanishingProbabilityIsClamped) {
    MatrixXd probs(2, 1);
    probs << 0.0, 1.0;
    const std::vector<int> labels{0};
    EXPECT_NEAR(cross_entropy_loss(probs, labels), -std::log(1e-12), 1e-9);
}

TEST(Backward, MatchesCentralDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto net = tiny_net(seed);
        RandomStream rng(seed, 11);
        const MatrixXd X = random_batch(2, 4, rng);
        const std::vector<int> labels{0, 1, 0, 1};
        const auto trace = forward(net, X);
        const auto grads = backward(net, trace, labels);
        const double h = 1e-6;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            for (Eigen::Index i = 0; i < net.layers[l].W.rows(); ++i)
                for (Eigen::Index j = 0; j < net.layers[l].W.cols(); ++j) {
                    Network plus = net, minus = net;
                    plus.layers[l].W(i, j) += h;
                    minus.layers[l].W(i, j) -= h;
                    const double fd =
                        (loss_at(plus, X, labels) - loss_at(minus, X, labels)) / (2.0 * h);
                    EXPECT_NEAR(grads.dW[l](i, j), fd,
                                1e-6 * std::max(1.0, std::abs(fd)))
                        << "seed " << seed << " layer " << l;
                }
            for (Eigen::Index i = 0; i < net.layers[l].b.size(); ++i) {
                Network plus = net, minus = net;
                plus.layers[l].b[i] += h;
                minus.layers[l].b[i] -= h;
                const double fd =
                    (loss_at(plus, X, labels) - loss_at(minus, X, labels)) / (2.0 * h);
                EXPECT_NEAR(grads.db[l][i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST(Backward, SaturatedCorrectLogitsHaveVanishingGradient) {
    Network net;
    VectorXd b(2);
    b << 40.0, -40.0;
    net.layers.push_back({MatrixXd::Zero(2, 2), b, Activation::softmax_final});
    MatrixXd X(2, 2);
    X << 0.3, -0.8, 1.1, 0.4;
    const std::vector<int> labels{0, 0};
    const auto trace = forward(net, X);
    EXPECT_LT(cross_entropy_loss(trace.post.back(), labels), 1e-10);
    const auto grads = backward(net, trace, labels);
    EXPECT_LT(flatten(grads).norm(), 1e-8);
}

TEST(Backward, DuplicatedSamplesLeaveTheMeanGradientAlone) {
    const auto net = tiny_net(2);
    RandomStream rng(0, 11);
    const MatrixXd x = random_batch(2, 1, rng);
    MatrixXd xx(2, 2);
    xx << x, x;
    const auto single = backward(net, forward(net, x), std::vector<int>{1});
    const auto doubled = backward(net, forward(net, xx), std::vector<int>{1, 1});
    for (std::size_t l = 0; l < single.dW.size(); ++l) {
        EXPECT_LT((single.dW[l] - doubled.dW[l]).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((single.db[l] - doubled.db[l]).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Backward, PerSampleColumnsAverageToTheMeanGradient) {
    const auto net = tiny_net(8);
    RandomStream rng(3, 11);
    const MatrixXd X = random_batch(2, 6, rng);
    const std::vector<int> labels{0, 1, 1, 0, 1, 0};
    const auto trace = forward(net, X);
    const VectorXd mean_grad = flatten(backward(net, trace, labels));
    const MatrixXd scores = per_sample_gradients(net, trace, labels);
    ASSERT_EQ(scores.rows(), net.param_count());
    ASSERT_EQ(scores.cols(), 6);
    const VectorXd averaged = scores.rowwise().mean();
    EXPECT_LT((averaged - mean_grad).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sgd, ZeroRateLeavesParametersUntouched) {
    const auto net = tiny_net(1);
    RandomStream rng(2, 11);
    const MatrixXd X = random_batch(2, 4, rng);
    const std::vector<int> labels{0, 0, 1, 1};
    const auto grads = backward(net, forward(net, X), labels);
    const auto stepped = sgd_step(net, grads, 0.0);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        EXPECT_TRUE(stepped.layers[l].W.isApprox(net.layers[l].W, 0.0));
        EXPECT_TRUE(stepped.layers[l].b.isApprox(net.layers[l].b, 0.0));
    }
}

TEST(Sgd, TwoHalfStepsEqualOneFullStepOnAFrozenGradient) {
    const auto net = tiny_net(4);
    RandomStream rng(4, 11);
    const MatrixXd X = random_batch(2, 4, rng);
    const std::vector<int> labels{1, 0, 1, 0};
    const auto grads = backward(net, forward(net, X), labels);
    const auto full = sgd_step(net, grads, 0.2);
    const auto halves = sgd_step(sgd_step(net, grads, 0.1), grads, 0.1);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        EXPECT_LT((full.layers[l].W - halves.layers[l].W).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sgd, ExactOneStepMinimizationOfAQuadratic) {
    // loss c |params|^2 has gradient 2 c params; the step size 1 / (2c)
    // lands on the minimizer in one move.
    for (double c : {0.1, 1.0, 10.0}) {
        Network net;
        MatrixXd W(2, 2);
        W << 1.3, -0.4, 0.2, 2.1;
        VectorXd b(2);
        b << -0.9, 0.55;
        net.layers.push_back({W, b, Activation::identity});
        GradientBundle grads;
        grads.dW.push_back(2.0 * c * W);
        grads.db.push_back(2.0 * c * b);
        const auto stepped = sgd_step(net, grads, 1.0 / (2.0 * c));
        EXPECT_LT(stepped.layers[0].W.cwiseAbs().maxCoeff(), 1e-12) << "c = " << c;
        EXPECT_LT(stepped.layers[0].b.cwiseAbs().maxCoeff(), 1e-12) << "c = " << c;
    }
}

TEST(NaturalGradient, IdentityMetricReducesToSgdBitwise) {
    const auto net = tiny_net(7);
    RandomStream rng(7, 11);
    const MatrixXd X = random_batch(2, 5, rng);
    const std::vector<int> labels{0, 1, 0, 1, 1};
    const auto grads = backward(net, forward(net, X), labels);
    const MatrixXd G = MatrixXd::Identity(net.param_count(), net.param_count());
    const auto natural = natural_gradient_step_with_fim(net, grads, G, {0.05, 0.0});
    const auto plain = sgd_step(net, grads, 0.05);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        EXPECT_TRUE(natural.layers[l].W.isApprox(plain.layers[l].W, 0.0));
        EXPECT_TRUE(natural.layers[l].b.isApprox(plain.layers[l].b, 0.0));
    }
}

TEST(NaturalGradient, DiagonalMetricRescalesCoordinates) {
    Network net;
    MatrixXd W(2, 1);
    W << 1.0, 1.0;
    VectorXd b = VectorXd::Zero(2);
    net.layers.push_back({W, b, Activation::identity});
    GradientBundle grads;
    MatrixXd dW(2, 1);
    dW << 0.8, 0.4;
    grads.dW.push_back(dW);
    VectorXd db(2);
    db << 0.2, -0.6;
    grads.db.push_back(db);
    VectorXd diag(4);
    diag << 4.0, 1.0, 1.0, 1.0; // flat order: vec(W) then b
    const MatrixXd G = diag.asDiagonal();
    const auto stepped = natural_gradient_step_with_fim(net, grads, G, {1.0, 0.0});
    EXPECT_NEAR(stepped.layers[0].W(0, 0), 1.0 - 0.8 / 4.0, 1e-12);
    EXPECT_NEAR(stepped.layers[0].W(1, 0), 1.0 - 0.4, 1e-12);
    EXPECT_NEAR(stepped.layers[0].b[0], -0.2, 1e-12);
    EXPECT_NEAR(stepped.layers[0].b[1], 0.6, 1e-12);
}

TEST(NaturalGradient, HeavyDampingApproachesAScaledSgdStep) {
    const auto net = tiny_net(9);
    RandomStream rng(9, 11);
    const MatrixXd X = random_batch(2, 4, rng);
    const std::vector<int> labels{1, 1, 0, 0};
    const auto trace = forward(net, X);
    const auto grads = backward(net, trace, labels);
    const MatrixXd scores = per_sample_gradients(net, trace, labels);
    const double gamma = 1e8;
    const auto natural = natural_gradient_step(net, grads, scores, {1.0, gamma});
    const auto scaled = sgd_step(net, grads, 1.0 / gamma);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        EXPECT_LT((natural.layers[l].W - scaled.layers[l].W).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NaturalGradient, UndampedSingularMetricIsRejected) {
    const auto net = tiny_net(11);
    RandomStream rng(11, 11);
    const MatrixXd X = random_batch(2, 3, rng);
    const std::vector<int> labels{0, 1, 0};
    const auto trace = forward(net, X);
    const auto grads = backward(net, trace, labels);
    // 3 samples cannot span the parameter space: the outer-product matrix
    // is rank deficient and gamma = 0 must refuse it.
    const MatrixXd scores = per_sample_gradients(net, trace, labels);
    try {
        natural_gradient_step(net, grads, scores, {0.1, 0.0});
        FAIL() << "expected degeneracy_error";
    } catch (const degeneracy_error& e) {
        EXPECT_NE(std::string(e.what()).find("damping"), std::string::npos);
    }
    const MatrixXd wrong = MatrixXd::Identity(3, 3);
    EXPECT_THROW(natural_gradient_step_with_fim(net, grads, wrong, {0.1, 0.1}),
                 argument_error);
}

TEST(Componentwise, MatchesTheFullStepOnItsInducedBlockMetric) {
    const auto net = tiny_net(13);
    RandomStream rng(13, 11);
    const MatrixXd X = random_batch(2, 6, rng);
    const std::vector<int> labels{0, 1, 1, 0, 0, 1};
    auto grads = backward(net, forward(net, X), labels);
    for (auto& db : grads.db) db.setZero();

    const NaturalGradientConfig cfg{0.3, 0.2};
    const auto blockwise = componentwise_ngd_step(net, grads, cfg);

    // with column-major flattening the per-layer update solves
    // (I_in kron dW dW^T) as the corresponding diagonal block
    const auto p = net.param_count();
    MatrixXd G = MatrixXd::Zero(p, p);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const MatrixXd F = grads.dW[l] * grads.dW[l].transpose();
        const auto rows = F.rows();
        for (Eigen::Index col = 0; col < grads.dW[l].cols(); ++col) {
            G.block(off, off, rows, rows) = F;
            off += rows;
        }
        off += grads.db[l].size();
    }
    const auto full = natural_gradient_step_with_fim(net, grads, G, cfg);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        EXPECT_LT((blockwise.layers[l].W - full.layers[l].W).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_TRUE(blockwise.layers[l].b.isApprox(net.layers[l].b, 0.0));
    }
}

TEST(Componentwise, HeavyDampingApproachesAScaledSgdStep) {
    const auto net = tiny_net(15);
    RandomStream rng(15, 11);
    const MatrixXd X = random_batch(2, 4, rng);
    const std::vector<int> labels{1, 0, 0, 1};
    const auto grads = backward(net, forward(net, X), labels);
    const double gamma = 1e8;
    const auto cw = componentwise_ngd_step(net, grads, {1.0, gamma});
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const MatrixXd expected = net.layers[l].W - grads.dW[l] / gamma;
        EXPECT_LT((cw.layers[l].W - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Componentwise, UndampedSingularGramIsRejected) {
    Network net;
    net.layers.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), Activation::identity});
    GradientBundle grads;
    MatrixXd dW(2, 2);
    dW << 1.0, 2.0, 0.0, 0.0; // second row zero: the Gram matrix is singular
    grads.dW.push_back(dW);
    grads.db.push_back(VectorXd::Zero(2));
    EXPECT_THROW(componentwise_ngd_step(net, grads, {0.1, 0.0}), degeneracy_error);
}

TEST(Clip, NormIsCappedAndSmallBundlesPassThrough) {
    GradientBundle big;
    big.dW.push_back(MatrixXd::Constant(2, 2, 3.0));
    big.db.push_back(VectorXd::Constant(2, -4.0));
    const auto clipped = clip_gradients(big, 0.5);
    double sq = clipped.dW[0].squaredNorm() + clipped.db[0].squaredNorm();
    EXPECT_LE(std::sqrt(sq), 0.5 + 1e-12);
    EXPECT_NEAR(std::sqrt(sq), 0.5, 1e-12);
    // direction is preserved
    EXPECT_NEAR(clipped.dW[0](0, 0) / clipped.db[0][0], 3.0 / -4.0, 1e-12);

    GradientBundle small;
    small.dW.push_back(MatrixXd::Constant(2, 2, 0.01));
    small.db.push_back(VectorXd::Constant(2, 0.01));
    const auto kept = clip_gradients(small, 0.5);
    EXPECT_TRUE(kept.dW[0].isApprox(small.dW[0], 0.0));
    EXPECT_THROW(clip_gradients(small, 0.0), argument_error);
}

TEST(Blobs, ShapeLabelsAndDeterminism) {
    const auto data = make_blobs(200, 3, 3.0, 2024);
    EXPECT_EQ(data.X.rows(), 3);
    EXPECT_EQ(data.X.cols(), 400);
    ASSERT_EQ(data.labels.size(), 400u);
    for (int j = 0; j < 200; ++j) {
        EXPECT_EQ(data.labels[static_cast<std::size_t>(j)], 0);
        EXPECT_EQ(data.labels[static_cast<std::size_t>(200 + j)], 1);
    }
    const double mean0 = data.X.leftCols(200).mean();
    const double mean1 = data.X.rightCols(200).mean();
    EXPECT_NEAR(mean0, -1.5, 0.3);
    EXPECT_NEAR(mean1, 1.5, 0.3);
    const auto again = make_blobs(200, 3, 3.0, 2024);
    EXPECT_TRUE(data.X.isApprox(again.X, 0.0));
    EXPECT_THROW(make_blobs(0, 2, 1.0, 0), argument_error);
    EXPECT_THROW(make_blobs(10, 0, 1.0, 0), argument_error);
}

TEST(Train, AllOptimizersDescendOnSeparableBlobs) {
    const auto blobs = make_blobs(100, 2, 3.0, 2024);
    const auto net = make_network({2, 8, 2}, {Activation::relu, Activation::softmax_final}, 5);
    for (Optimizer opt : {Optimizer::sgd, Optimizer::ngd, Optimizer::cw_ngd}) {
        TrainConfig cfg;
        cfg.optimizer = opt;
        cfg.lr = 0.1;
        cfg.gamma = 0.1;
        cfg.epochs = 10;
        cfg.batch_size = 32;
        cfg.seed = 7;
        const auto result = train(net, blobs, cfg);
        ASSERT_EQ(result.loss_trace.size(), 70u);
        EXPECT_LT(result.loss_trace[50], result.loss_trace[0]);
        EXPECT_LT(result.loss_trace.back(), 0.1);
    }
}

TEST(Train, ZeroRateKeepsTheLossFlat) {
    const auto blobs = make_blobs(100, 2, 3.0, 2024);
    const auto net = make_network({2, 8, 2}, {Activation::relu, Activation::softmax_final}, 5);
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 4;
    cfg.batch_size = 200; // full-batch so only summation order can vary
    cfg.seed = 7;
    const auto result = train(net, blobs, cfg);
    ASSERT_EQ(result.loss_trace.size(), 4u);
    for (double loss : result.loss_trace) EXPECT_NEAR(loss, result.loss_trace[0], 1e-12);
}

TEST(Train, OverflowingRateRaisesDivergenceWithTheTrace) {
    const auto blobs = make_blobs(100, 2, 3.0, 2024);
    const auto net = make_network({2, 8, 2}, {Activation::relu, Activation::softmax_final}, 5);
    TrainConfig cfg;
    cfg.lr = 1e200;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.seed = 7;
    try {
        train(net, blobs, cfg);
        FAIL() << "expected divergence_error";
    } catch (const divergence_error& e) {
        EXPECT_GE(e.loss_trace.size(), 1u);
        EXPECT_TRUE(std::isfinite(e.loss_trace.front()));
    }
}

TEST(Train, InvalidConfigurationIsRejected) {
    const auto blobs = make_blobs(10, 2, 3.0, 1);
    const auto net = tiny_net(0);
    TrainConfig cfg;
    cfg.epochs = 0;
    EXPECT_THROW(train(net, blobs, cfg), argument_error);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    EXPECT_THROW(train(net, blobs, cfg), argument_error);
}

TEST(Crlb, SampleMeanAttainsTheBound) {
    const auto report = crlb_check(1.0, 100, 10000, 1);
    EXPECT_NEAR(report.bound, 0.01, 1e-15);
    EXPECT_GT(report.ratio, 0.95);
    EXPECT_LT(report.ratio, 1.05);
    EXPECT_NEAR(report.estimator_variance, 0.01, 0.0005);
}

TEST(Crlb, BoundScalesInverselyWithSampleSize) {
    const auto small = crlb_check(2.0, 50, 4000, 3);
    const auto large = crlb_check(2.0, 200, 4000, 3);
    EXPECT_NEAR(small.bound / large.bound, 4.0, 1e-12);
    EXPECT_GT(small.ratio, 0.9);
    EXPECT_LT(small.ratio, 1.1);
    EXPECT_GT(large.ratio, 0.9);
    EXPECT_LT(large.ratio, 1.1);
    EXPECT_THROW(crlb_check(0.0, 10, 10, 0), argument_error);
    EXPECT_THROW(crlb_check(1.0, 0, 10, 0), argument_error);
    EXPECT_THROW(crlb_check(1.0, 10, 1, 0), argument_error);
}
