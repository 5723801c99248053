#include <igkit/models.hpp>
#include <igkit/numerics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace igkit;
using models::DiscreteDistribution;
using models::GaussianMixture;
using models::UnivariateGaussian;

TEST(Gaussian, RejectsBadParameters) {
    EXPECT_THROW(UnivariateGaussian(0.0, 0.0), argument_error);
    EXPECT_THROW(UnivariateGaussian(0.0, -1.0), argument_error);
    EXPECT_THROW(UnivariateGaussian(std::nan(""), 1.0), argument_error);
}

TEST(Gaussian, StandardNormalAtZero) {
    const UnivariateGaussian g(0.0, 1.0);
    EXPECT_NEAR(models::log_pdf(g, 0.0), -0.5 * std::log(2.0 * M_PI), 1e-15);
}

TEST(Gaussian, NormalizesToOne) {
    const UnivariateGaussian g(1.3, 0.7);
    const double mass = integrate([&](double x) { return std::exp(models::log_pdf(g, x)); },
                                  g.mu - 12.0 * g.sigma, g.mu + 12.0 * g.sigma, 1e-10);
    EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(Mixture, DegenerateWeightMatchesComponent) {
    const GaussianMixture mix({1.0, 0.0}, {{0.0, 1.0}, {5.0, 2.0}});
    for (double x : {-1.0, 0.0, 2.5})
        EXPECT_DOUBLE_EQ(models::log_pdf(mix, x), models::log_pdf(mix.components[0], x));
}

TEST(Mixture, WeightsMustSumToOne) {
    EXPECT_THROW(GaussianMixture({0.5, 0.4}, {{0.0, 1.0}, {1.0, 1.0}}), argument_error);
    EXPECT_THROW(GaussianMixture({-0.5, 1.5}, {{0.0, 1.0}, {1.0, 1.0}}), argument_error);
}

TEST(Discrete, UniformLogMass) {
    const DiscreteDistribution d({0.0, 1.0, 2.0, 3.0}, {0.25, 0.25, 0.25, 0.25});
    EXPECT_NEAR(models::log_pdf(d, 2.0), std::log(0.25), 1e-15);
    EXPECT_EQ(models::log_pdf(d, 9.0), -std::numeric_limits<double>::infinity());
}

TEST(Discrete, SupportMustBeDistinct) {
    EXPECT_THROW(DiscreteDistribution({1.0, 1.0}, {0.5, 0.5}), argument_error);
}

TEST(Mle, TwoSymmetricPoints) {
    const std::vector<double> data{0.0, 2.0};
    const auto fit = models::mle_gaussian(data);
    EXPECT_DOUBLE_EQ(fit.mu, 1.0);
    EXPECT_DOUBLE_EQ(fit.sigma, 1.0);
}

TEST(Mle, HandComputedFourPoints) {
    const std::vector<double> data{1.0, 1.0, 1.0, 3.0};
    const auto fit = models::mle_gaussian(data);
    EXPECT_DOUBLE_EQ(fit.mu, 1.5);
    EXPECT_NEAR(fit.sigma, std::sqrt(0.75), 1e-15);
}

TEST(Mle, ConstantDataIsDegenerate) {
    const std::vector<double> data{2.0, 2.0, 2.0};
    EXPECT_THROW(models::mle_gaussian(data), degeneracy_error);
}

TEST(Mle, RecoversPopulationMean) {
    RandomStream rng(101, 0);
    const auto data = models::sample(UnivariateGaussian(3.7, 0.5), 100000, rng);
    const auto fit = models::mle_gaussian(data);
    EXPECT_NEAR(fit.mu, 3.7, 0.01);
    EXPECT_NEAR(fit.sigma, 0.5, 0.01);
}

TEST(Mle, PerturbationNeverImprovesLikelihood) {
    RandomStream rng(7, 0);
    const auto data = models::sample(UnivariateGaussian(1.0, 2.0), 500, rng);
    const auto fit = models::mle_gaussian(data);
    auto loglik = [&](double mu, double sigma) {
        double acc = 0.0;
        for (double x : data) acc += models::log_pdf(UnivariateGaussian(mu, sigma), x);
        return acc;
    };
    const double best = loglik(fit.mu, fit.sigma);
    for (double dm : {-1e-3, 0.0, 1e-3})
        for (double ds : {-1e-3, 0.0, 1e-3})
            EXPECT_LE(loglik(fit.mu + dm, fit.sigma + ds), best + 1e-9);
}

TEST(Responsibilities, SymmetricComponents) {
    const GaussianMixture mix({0.5, 0.5}, {{1.0, 2.0}, {1.0, 2.0}});
    const auto r = models::responsibilities(mix, 0.3);
    EXPECT_NEAR(r[0], 0.5, 1e-15);
    EXPECT_NEAR(r[1], 0.5, 1e-15);
}

TEST(Responsibilities, DegenerateWeight) {
    const GaussianMixture mix({1.0, 0.0}, {{0.0, 1.0}, {5.0, 1.0}});
    const auto r = models::responsibilities(mix, 0.7);
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
}

TEST(Responsibilities, WellSeparatedComponents) {
    const GaussianMixture mix({0.5, 0.5}, {{0.0, 1.0}, {10.0, 1.0}});
    const auto r = models::responsibilities(mix, 0.0);
    EXPECT_NEAR(r[0], 1.0, 1e-10);
}

TEST(Responsibilities, StableAtExtremeInputs) {
    const GaussianMixture mix({0.5, 0.5}, {{0.0, 1e-6}, {1.0, 1.0}});
    for (double x : {-1e6, -10.0, 0.0, 1e6}) {
        const auto r = models::responsibilities(mix, x);
        ASSERT_FALSE(std::isnan(r[0]));
        ASSERT_FALSE(std::isnan(r[1]));
        EXPECT_NEAR(r[0] + r[1], 1.0, 1e-12);
    }
}

TEST(Sampling, EmptyAndDeterministic) {
    RandomStream a(3, 0), b(3, 0);
    const UnivariateGaussian g(0.0, 1.0);
    EXPECT_TRUE(models::sample(g, 0, a).empty());
    RandomStream a2(3, 0);
    const auto s1 = models::sample(g, 50, a2);
    const auto s2 = models::sample(g, 50, b);
    EXPECT_EQ(s1, s2);
}

TEST(Sampling, MixtureMeanMatchesPopulation) {
    RandomStream rng(11, 0);
    const auto data = models::sample(UnivariateGaussian(2.8, 0.15), 100000, rng);
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(data.size());
    EXPECT_NEAR(mean, 2.8, 0.005);
}

TEST(Sampling, ClipTruncatesRange) {
    RandomStream rng(5, 0);
    const auto data =
        models::sample(UnivariateGaussian(0.0, 10.0), 1000, rng, models::ClipRange{-1.0, 1.0});
    for (double x : data) {
        EXPECT_GE(x, -1.0);
        EXPECT_LE(x, 1.0);
    }
}

TEST(Shuffle, DeterministicPermutation) {
    std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8}, b = a;
    RandomStream r1(9, 2), r2(9, 2);
    models::shuffle(a, r1);
    models::shuffle(b, r2);
    EXPECT_EQ(a, b);
    std::sort(a.begin(), a.end());
    EXPECT_EQ(a, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(StudyData, ShapeAndRange) {
    const auto data = models::generate_gpa_dataset(42, 20);
    ASSERT_EQ(data.size(), 40u);
    for (double x : data) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 4.0);
    }
    EXPECT_EQ(data, models::generate_gpa_dataset(42, 20));
}

TEST(StudyData, LargeSampleMeanNearMixtureMean) {
    const auto data = models::generate_gpa_dataset(1, 1000);
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(data.size());
    EXPECT_NEAR(mean, 3.25, 0.25);
}

TEST(ExponentialFamily, GaussianFormMatchesDirectDensity) {
    const UnivariateGaussian g(0.4, 1.7);
    const auto ef = models::gaussian_in_exponential_family(g);
    for (double x : {-3.0, -0.5, 0.4, 1.0, 6.0})
        EXPECT_NEAR(ef.log_pdf(x), models::log_pdf(g, x), 1e-12);
}

TEST(ExponentialFamily, NumericLogPartitionAgreesWithAnalytic) {
    const UnivariateGaussian g(0.0, 1.2);
    const auto with = models::gaussian_in_exponential_family(g);
    // Same family with the closed-form log-partition removed.
    const models::ExponentialFamilyModel without(
        [](double) { return -0.5 * models::log_two_pi; },
        [](double x) {
            Eigen::VectorXd t(2);
            t << x, x * x;
            return t;
        },
        with.eta(), models::EFSupport::continuous(-14.4, 14.4));
    EXPECT_NEAR(with.log_partition(), without.log_partition(), 1e-8);
}

TEST(ExponentialFamily, BernoulliMass) {
    const auto ef = models::bernoulli_in_exponential_family(0.3);
    EXPECT_NEAR(std::exp(ef.log_pdf(1.0)), 0.3, 1e-12);
    EXPECT_NEAR(std::exp(ef.log_pdf(0.0)), 0.7, 1e-12);
    EXPECT_THROW(models::bernoulli_in_exponential_family(0.0), argument_error);
}

TEST(JointFamily, DensityMatchesMixtureTimesResponsibility) {
    const GaussianMixture mix({0.3, 0.7}, {{-1.0, 0.8}, {2.0, 0.5}});
    const auto joint = models::joint_from_mixture(mix);
    for (double x : {-2.0, 0.0, 1.5}) {
        const auto resp = models::responsibilities(mix, x);
        for (std::size_t c = 0; c < 2; ++c) {
            const double expected = models::log_pdf(mix, x) + std::log(resp[c]);
            EXPECT_NEAR(joint.log_pdf(x, static_cast<double>(c)), expected, 1e-10);
        }
    }
}

TEST(JointFamily, RequiresPositiveWeights) {
    const GaussianMixture mix({1.0, 0.0}, {{0.0, 1.0}, {1.0, 1.0}});
    EXPECT_THROW(models::joint_from_mixture(mix), argument_error);
}

TEST(Conditional, EqualsResponsibilities) {
    const GaussianMixture mix({0.4, 0.6}, {{0.0, 1.0}, {3.0, 0.5}});
    const auto joint = models::joint_from_mixture(mix);
    for (double x : {-1.0, 0.5, 3.2}) {
        const auto cond = models::conditional_given_observed(joint, x);
        const auto resp = models::responsibilities(mix, x);
        for (std::size_t c = 0; c < 2; ++c)
            EXPECT_NEAR(std::exp(cond.log_pdf(static_cast<double>(c))), resp[c], 1e-12);
    }
}

TEST(Conditional, IndependentBlocksGiveMarginal) {
    // T(x, z) = (x, z) with no coupling term: conditioning on x must leave the
    // z-marginal untouched.
    models::JointExponentialFamily joint;
    joint.log_h = [](double, double) { return 0.0; };
    joint.T = [](double x, double z) {
        Eigen::VectorXd t(2);
        t << x, z;
        return t;
    };
    joint.eta = Eigen::Vector2d(0.3, -0.8);
    joint.log_partition = 0.0;
    joint.z_support = {0.0, 1.0};
    joint.hidden_block = {1};
    const auto at0 = models::conditional_given_observed(joint, 0.0);
    const auto at5 = models::conditional_given_observed(joint, 5.0);
    for (double z : {0.0, 1.0}) EXPECT_NEAR(at0.log_pdf(z), at5.log_pdf(z), 1e-12);
    const double expected1 = 1.0 / (1.0 + std::exp(0.8));
    EXPECT_NEAR(std::exp(at0.log_pdf(1.0)), expected1, 1e-12);
}

TEST(Conditional, CouplingShiftsTheHiddenParameter) {
    // T(x, z) = (z, x z): p(z|x) is Bernoulli with natural parameter
    // eta_z + eta_xz x.
    models::JointExponentialFamily joint;
    joint.log_h = [](double, double) { return 0.0; };
    joint.T = [](double x, double z) {
        Eigen::VectorXd t(2);
        t << z, x * z;
        return t;
    };
    joint.eta = Eigen::Vector2d(0.4, 1.1);
    joint.log_partition = 0.0;
    joint.z_support = {0.0, 1.0};
    joint.hidden_block = {0};
    for (double x : {-1.0, 0.0, 2.0}) {
        const auto cond = models::conditional_given_observed(joint, x);
        const double nat = 0.4 + 1.1 * x;
        const double p1 = 1.0 / (1.0 + std::exp(-nat));
        EXPECT_NEAR(std::exp(cond.log_pdf(1.0)), p1, 1e-12);
    }
}

TEST(Conditional, NonConstantBaseMeasureUnsupported) {
    models::JointExponentialFamily joint;
    joint.log_h = [](double, double z) { return z; };
    joint.T = [](double, double z) {
        Eigen::VectorXd t(1);
        t << z;
        return t;
    };
    joint.eta = Eigen::VectorXd::Ones(1);
    joint.log_partition = 0.0;
    joint.z_support = {0.0, 1.0};
    joint.hidden_block = {0};
    EXPECT_THROW(models::conditional_given_observed(joint, 0.0), unsupported_model_error);
}

TEST(DatasetIo, RoundTripIsBitExact) {
    const std::vector<double> values{0.1, -2.5e-7, 3.141592653589793, 1e17, -0.0};
    std::stringstream buf;
    models::write_dataset(buf, values);
    const auto back = models::read_dataset(buf);
    ASSERT_EQ(back.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(back[i], values[i]);
}

TEST(DatasetIo, RejectsGarbageAndMissingFiles) {
    std::stringstream buf("1.5\nnot-a-number\n");
    EXPECT_THROW(models::read_dataset(buf), io_error);
    EXPECT_THROW(models::read_dataset("/nonexistent/path/data.txt"), io_error);
}
