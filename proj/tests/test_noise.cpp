#include <gtest/gtest.h>

#include <cmath>

#include "noiselab/error.hpp"
#include "noiselab/etp.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/region_sampler.hpp"

using namespace noiselab;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v(i++) = x;
    return v;
}

RegionSpec axis_region(Eigen::Index d, double alpha, double delta_conf, double sigma = 1.0)
{
    RegionSpec rs;
    rs.domain.sigma = sigma;
    rs.domain.mu1 = Vector::Zero(d);
    rs.domain.mu2 = Vector::Constant(d, sigma);
    rs.domain.delta = alpha * (rs.domain.mu2 - rs.domain.mu1);
    rs.delta_conf = delta_conf;
    return rs;
}

NoisyDataset multiclass(std::size_t n, int K)
{
    NoisyDataset d;
    d.kind = LabelKind::Multiclass;
    d.num_classes = K;
    d.x = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i)
        d.clean.push_back(static_cast<int>(i % static_cast<std::size_t>(K)));
    d.noisy = d.clean;
    d.sync_flipped();
    return d;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

TEST(AnnotateWithSource, HandExample)
{
    DomainSpec s{vec({-1}), vec({1}), vec({1}), 1.0};
    NoisyDataset d;
    d.x = Matrix(1, 1);
    d.x(0, 0) = 0.4;
    d.clean = {1};
    d.noisy = {1};
    d.flipped = {false};
    auto a = annotate_with_source(d, s);
    EXPECT_EQ(a.noisy[0], -1);
    EXPECT_TRUE(a.flipped[0]);
    EXPECT_EQ(d.noisy[0], 1);   // input untouched
}

TEST(AnnotateWithSource, NoShiftTinySigmaIsClean)
{
    DomainSpec s{vec({-1, 0}), vec({1, 0}), vec({0, 0}), 1e-3};
    auto a = annotate_with_source(sample_domain(s, Domain::Target, 5000, 1), s);
    EXPECT_EQ(a.noise_rate(), 0.0);
}

TEST(AnnotateWithSource, NoiseRateMatchesClosedForm)
{
    DomainSpec s{vec({0, 0}), vec({2, 0}), vec({1, 0.5}), 1.0};
    auto a = annotate_with_source(sample_domain(s, Domain::Target, 1000000, 2), s);
    const double p = a.noise_rate();
    EXPECT_LE(std::abs(p - mislabel_rate(s)), 3 * std::sqrt(p * (1 - p) / 1e6));
    EXPECT_THROW(annotate_with_source(sample_domain(s, Domain::Target, 10, 2), DomainSpec{vec({0}), vec({1}), vec({0}), 1}),
                 DimensionError);
}

TEST(FlipMargin, ExactlyLowMarginsFlip)
{
    auto md = gen_margin_data(20000, 5, 1.0, 0.5, 3);
    const auto& d = md.data;
    std::size_t low = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double m = d.clean[i] * d.x.row(static_cast<Eigen::Index>(i)).dot(md.mu);
        ASSERT_EQ(d.flipped[i], m <= 0.5);
        low += m <= 0.5;
    }
    EXPECT_EQ(low, static_cast<std::size_t>(d.noise_rate() * static_cast<double>(d.size()) + 0.5));
}

TEST(FlipMargin, BoundaryFlipsAndSentinelKeeps)
{
    NoisyDataset d;
    d.x = Matrix(2, 2);
    d.x << 0.5, 7, -0.2, 1;
    d.clean = {1, 1};
    d.noisy = d.clean;
    d.flipped = {false, false};
    Vector mu = vec({1, 0});
    auto f = flip_margin(d, mu, 0.5);
    EXPECT_TRUE(f.flipped[0]);
    EXPECT_TRUE(f.flipped[1]);
    EXPECT_EQ(f.noisy[0], -1);
    auto none = flip_margin(d, mu, -INFINITY);
    EXPECT_EQ(none.noise_rate(), 0.0);
    EXPECT_THROW(flip_margin(d, vec({1, 1}), 0.5), SpecError);
    EXPECT_THROW(flip_margin(multiclass(4, 3), vec({1}), 0.5), SpecError);
}

TEST(FlipMargin, FlipFractionMatchesNormalTail)
{
    auto md = gen_margin_data(1000000, 1, 1.0, 0.5, 4);
    const double p = md.data.noise_rate();
    EXPECT_NEAR(phi(-0.5), 0.3085375387259869, 1e-15);
    EXPECT_LE(std::abs(p - 0.3085375387259869), 3 * std::sqrt(p * (1 - p) / 1e6));
}

TEST(FlipSymmetric, RateAndBound)
{
    auto d = multiclass(10, 2);
    EXPECT_EQ(flip_symmetric(d, 0.0, 2, 1).noisy, d.noisy);
    EXPECT_THROW(flip_symmetric(d, 0.6, 2, 1), SpecError);
    EXPECT_THROW(flip_symmetric(d, 0.5, 2, 1), SpecError);
    EXPECT_THROW(flip_symmetric(d, 0.1, 3, 1), SpecError);

    auto big = flip_symmetric(multiclass(1000000, 2), 0.4, 2, 7);
    EXPECT_LE(std::abs(big.noise_rate() - 0.4), 3 * std::sqrt(0.24 / 1e6));

    auto five = flip_symmetric(multiclass(200000, 5), 0.7, 5, 8);
    std::vector<double> counts(5, 0.0);
    std::size_t from0 = 0;
    for (std::size_t i = 0; i < five.size(); ++i)
        if (five.clean[i] == 0) {
            ++from0;
            counts[static_cast<std::size_t>(five.noisy[i])] += 1;
        }
    // the true class stays the most likely label: eta/(K-1) < 1 - eta
    for (int k = 1; k < 5; ++k)
        EXPECT_GT(counts[0], counts[static_cast<std::size_t>(k)]);
    EXPECT_NEAR(counts[0] / static_cast<double>(from0), 0.3, 0.01);
    EXPECT_NEAR(counts[3] / static_cast<double>(from0), 0.7 / 4, 0.01);
}

TEST(MatchNoiseRate, IdentityWithoutNoise)
{
    auto d = multiclass(50, 5);
    EXPECT_EQ(match_noise_rate(d, 1).noisy, d.noisy);
}

TEST(MatchNoiseRate, FiveClassesQuarterReturns)
{
    auto d = multiclass(40000, 5);
    for (std::size_t i = 0; i < d.size(); i += 4)
        d.noisy[i] = (d.clean[i] + 1) % 5;
    d.sync_flipped();
    const std::size_t before = static_cast<std::size_t>(d.noise_rate() * 40000 + 0.5);
    auto m = match_noise_rate(d, 3);
    std::size_t back = 0;
    for (std::size_t i = 0; i < d.size(); i += 4) {
        EXPECT_NE(m.noisy[i], d.noisy[i]);
        back += m.noisy[i] == m.clean[i];
    }
    for (std::size_t i = 1; i < d.size(); i += 4)
        EXPECT_EQ(m.noisy[i], d.noisy[i]);
    const double frac = static_cast<double>(back) / static_cast<double>(before);
    EXPECT_NEAR(frac, 0.25, 3 * std::sqrt(0.25 * 0.75 / static_cast<double>(before)));
}

TEST(Region, RadiusAndThreshold)
{
    auto small = axis_region(4, 0.2, 0.01);
    EXPECT_NEAR(region_ball_radius(small), 1.0 - std::log(99.0) / 2.0, 1e-12);
    EXPECT_LT(region_ball_radius(small), 0.0);
    EXPECT_TRUE(region_membership(small.domain.mu1 + small.domain.delta, small).structurally_empty);
    EXPECT_FALSE(region_membership(small.domain.mu1 + small.domain.delta, small).in_r1);

    auto rs = axis_region(100, 0.2, 0.01);
    EXPECT_NEAR(region_alpha_threshold(rs), 0.045951198501345896, 1e-15);
    EXPECT_TRUE(region_nonempty_condition(rs));
    EXPECT_TRUE(region_membership(rs.domain.mu1 + rs.domain.delta, rs).in_r1);
    EXPECT_FALSE(region_nonempty_condition(axis_region(100, 0.0, 0.01)));
    EXPECT_EQ(region_alpha_threshold(axis_region(10, 0.1, 0.5)), 0.0);
    EXPECT_TRUE(region_nonempty_condition(axis_region(10, 0.1, 0.5)));
    RegionSpec bad = rs;
    bad.delta_conf = 1.0;
    EXPECT_THROW(bad.validate(), SpecError);
}

TEST(Region, HalfSpaceAgreesWithSourceRule)
{
    auto rs = axis_region(20, 0.3, 0.1, 0.7);
    rs.domain.mu1 = Vector::LinSpaced(20, -1, 1);
    rs.domain.mu2 = rs.domain.mu1 + Vector::Constant(20, 0.7);
    auto data = sample_domain(rs.domain, Domain::Target, 5000, 5);
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x = data.x.row(static_cast<Eigen::Index>(i)).transpose();
        ASSERT_EQ(region_halfspace_axis(x, rs), region_membership(x, rs).in_r2);
        ASSERT_EQ(region_membership(x, rs).in_r2, source_score(rs.domain, x) < 0);
    }
}

TEST(Region, MassGrowsWithAlpha)
{
    double prev = -1;
    for (int k = 0; k <= 10; ++k) {
        auto rs = axis_region(10, 0.1 * k, 0.2);
        auto data = sample_domain(rs.domain, Domain::Target, 20000, 6);
        mark_region(data, rs);
        double mass = 0;
        for (bool b : *data.in_region)
            mass += b;
        EXPECT_GE(mass, prev);
        prev = mass;
    }
    EXPECT_GT(prev, 0.0);
}

TEST(Posterior, Examples)
{
    DomainSpec s{vec({0, 0}), vec({2, 0}), vec({0.3, 1}), 1.0};
    EXPECT_NEAR(posterior_true_class(s.mu1 + s.delta, s), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(posterior_true_class((s.mu1 + s.mu2) / 2 + s.delta + vec({0, 3}), s), 0.5, 1e-15);

    auto rs = axis_region(100, 0.2, 0.01);
    Vector x0 = (rs.domain.mu1 + rs.domain.mu2) / 2 + rs.domain.delta;
    Vector x1 = x0 - 0.05 * Vector::Ones(100);
    EXPECT_NEAR(std::exp(log_posterior_ratio(x1, rs.domain)), 148.4131591025766, 1e-9);
    // far into component 1 the posterior saturates without overflow
    EXPECT_EQ(posterior_true_class(rs.domain.mu1 - 100.0 * Vector::Ones(100), rs.domain), 1.0);
    EXPECT_GE(posterior_true_class(rs.domain.mu2 + 100.0 * Vector::Ones(100), rs.domain), 0.0);
}

TEST(RegionSampler, DrawsLieInRegionAndAreMislabeled)
{
    auto rs = axis_region(100, 0.2, 0.01);
    auto draws = sample_target_in_region(rs, 2000, 9);
    ASSERT_FALSE(draws.empty);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < draws.y.size(); ++i) {
        Vector x = draws.x.row(static_cast<Eigen::Index>(i)).transpose();
        auto m = region_membership(x, rs);
        ASSERT_TRUE(m.in_r);
        ASSERT_GE(posterior_true_class(x, rs.domain), 0.99);
        bad += label_from_score(source_score(rs.domain, x)) != draws.y[i];
    }
    EXPECT_GE(static_cast<double>(bad) / 2000.0, 0.98);
}

TEST(RegionSampler, EmptyRegionReported)
{
    EXPECT_TRUE(sample_target_in_region(axis_region(4, 0.2, 0.01), 10, 1).empty);
}

TEST(RegionSampler, TruncatedNormalInversion)
{
    EXPECT_NEAR(truncated_standard_normal(-INFINITY, INFINITY, 0.5), 0.0, 1e-12);
    for (double u : {0.01, 0.3, 0.9}) {
        double z = truncated_standard_normal(5.0, INFINITY, u);
        EXPECT_GE(z, 5.0);
        EXPECT_NEAR((phi(-5.0) - phi(-z)) / phi(-5.0), u, 1e-9);
    }
    double w = truncated_standard_normal(-1.0, 2.0, 0.25);
    EXPECT_NEAR((phi(w) - phi(-1)) / (phi(2) - phi(-1)), 0.25, 1e-12);
}
