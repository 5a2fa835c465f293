#include <gtest/gtest.h>

#include <cmath>

#include "noiselab/error.hpp"
#include "noiselab/etp.hpp"

using namespace noiselab;

namespace {

double erf_term(double s, double r) { return std::erf((1 - r) / (std::sqrt(2.0) * s)); }
double exp_term(double s, double r) { return std::exp(-(r - 1) * (r - 1) / (2 * s * s)); }

double loss_fd(const Vector& theta, const NoisyDataset& d, bool half, Eigen::Index k)
{
    Vector a = theta, b = theta;
    a(k) += 1e-6;
    b(k) -= 1e-6;
    return (logistic_loss(a, d, half) - logistic_loss(b, d, half)) / 2e-6;
}

} // namespace

TEST(MarginData, RejectsBadParameters)
{
    EXPECT_THROW(gen_margin_data(10, 3, 1.0, 1.0, 1), SpecError);
    EXPECT_THROW(gen_margin_data(10, 3, 0.0, 0.5, 1), SpecError);
    EXPECT_THROW(gen_margin_data(0, 3, 1.0, 0.5, 1), SpecError);
    EXPECT_EQ(gen_margin_data(1000, 3, 1.0, -INFINITY, 1).data.noise_rate(), 0.0);
}

TEST(MarginData, FlipRateMatchesNormalTail)
{
    auto md = gen_margin_data(1000000, 2, 1.0, 0.5, 2);
    const double p = md.data.noise_rate(), target = 0.5 * std::erfc(0.5 / std::sqrt(2.0));
    EXPECT_LE(std::abs(p - target), 3 * std::sqrt(p * (1 - p) / 1e6));
    EXPECT_DOUBLE_EQ(md.mu(0), 1.0);
    EXPECT_DOUBLE_EQ(md.mu.norm(), 1.0);
}

TEST(LogisticGrad, ZeroThetaAndSaturation)
{
    auto md = gen_margin_data(50, 4, 0.5, 0.3, 3);
    Vector zero = Vector::Zero(4);
    Vector expect = Vector::Zero(4);
    for (std::size_t i = 0; i < 50; ++i)
        expect -= md.data.noisy[i] * md.data.x.row(static_cast<Eigen::Index>(i)).transpose();
    expect /= 100.0;
    EXPECT_TRUE(logistic_grad(zero, md.data).isApprox(expect, 1e-14));

    NoisyDataset one;
    one.x = Matrix(1, 2);
    one.x << 1, 0;
    one.clean = one.noisy = {1};
    one.flipped = {false};
    Vector big(2);
    big << 50, 0;
    EXPECT_LT(logistic_grad(big, one).norm(), 1e-15);
}

TEST(LogisticGrad, MatchesItsLoss)
{
    auto md = gen_margin_data(5, 3, 1.0, 0.5, 4);
    Vector theta(3);
    theta << 0.3, -0.7, 0.2;
    for (bool half : {false, true}) {
        Vector g = logistic_grad(theta, md.data, half);
        for (Eigen::Index k = 0; k < 3; ++k)
            EXPECT_NEAR(g(k), loss_fd(theta, md.data, half, k), 1e-5 * std::max(1e-3, g.norm()));
    }
}

TEST(Kappa, Conventions)
{
    auto clean = gen_margin_data(200, 5, 0.01, -INFINITY, 5);
    auto k = kappa(clean.data, clean.mu);
    EXPECT_TRUE(k.empty);
    EXPECT_EQ(k.value, 1.0);

    auto md = gen_margin_data(20000, 5, 0.6, 0.5, 6);
    EXPECT_FALSE(kappa(md.data, md.mu).empty);
    // mislabeled points have small margins, so theta = mu gets only some of them right
    auto neg = kappa(md.data, Vector(-md.mu));
    EXPECT_NEAR(kappa(md.data, md.mu).value + neg.value, 1.0, 1e-12);

    auto tight = gen_margin_data(1000, 5, 0.01, 0.999, 7);
    EXPECT_EQ(kappa(tight.data, tight.mu).value, 1.0);
    EXPECT_EQ(kappa(tight.data, Vector(-tight.mu)).value, 0.0);
}

TEST(EtpBound, Formula)
{
    const double g = etp_g(0.01, 0.5);
    EXPECT_NEAR(g, erf_term(0.01, 0.5) / (2 * 1.02 * 0.01) + exp_term(0.01, 0.5) / (std::sqrt(2 * M_PI) * 1.02),
                1e-12);
    EXPECT_NEAR(g, 49.0196, 1e-3);
    EXPECT_NEAR(etp_bound(0.01, 0.5), 1 - std::exp(-g * g / 200), 1e-15);
    EXPECT_NEAR(1 - etp_bound(0.01, 0.5), 6.1e-6, 0.1e-6);
    EXPECT_GT(etp_g(0.01, 0.5), etp_g(0.05, 0.5));
    EXPECT_GT(etp_g(0.05, 0.5), etp_g(0.1, 0.5));
    EXPECT_GT(etp_bound(1e-4, 0.5), 1 - 1e-12);
}

TEST(ExpectedCorrelation, ValuesAndLimits)
{
    EXPECT_NEAR(expected_noisy_correlation(1.0, 0.5), 1.087055576076625, 1e-12);
    EXPECT_NEAR(expected_noisy_correlation(1.0, -1e9), 1.0, 1e-15);
    EXPECT_EQ(expected_noisy_correlation(0.3, -INFINITY), 1.0);
    for (double s : {0.01, 0.1, 1.0, 3.0})
        for (double r = -2; r < 1; r += 0.1)
            EXPECT_GT(expected_noisy_correlation(s, r), 0.0);
    EXPECT_NEAR(etp_b0(0.3, 0.5), expected_noisy_correlation(0.3, 0.5) / 2, 1e-15);
}

TEST(ExpectedCorrelation, MonteCarlo)
{
    auto md = gen_margin_data(1000000, 1, 1.0, 0.5, 8);
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < md.data.size(); ++i) {
        double v = md.data.noisy[i] * md.data.x(static_cast<Eigen::Index>(i), 0);
        sum += v;
        sq += v * v;
    }
    const double m = sum / 1e6, se = std::sqrt((sq / 1e6 - m * m) / 1e6);
    EXPECT_LE(std::abs(m - expected_noisy_correlation(1.0, 0.5)), 3 * se);
}

TEST(GdTrain, StopsAtAlignmentAndBeatsBound)
{
    auto md = gen_margin_data(10000, 100, 0.05, 0.5, 0);
    GdOptions opt;
    auto tr = gd_train(md.data, md.mu, opt);
    ASSERT_TRUE(tr.stopping_t.has_value());
    EXPECT_GE(tr.records[*tr.stopping_t].alignment, 0.1);
    EXPECT_LT(tr.records[*tr.stopping_t - 1].alignment, 0.1);
    EXPECT_GE(tr.records[*tr.stopping_t].kappa_b, etp_bound(0.05, 0.5));
    EXPECT_TRUE(alignment_bound_check(tr, md.mu, 0.05, 0.5).holds);
    EXPECT_EQ(tr.records.size(), opt.max_steps + 1);
    for (std::size_t i = 0; i < tr.records.size(); ++i)
        ASSERT_EQ(tr.records[i].step, i);
    auto again = gd_train(md.data, md.mu, opt);
    EXPECT_EQ(again.records.back().norm, tr.records.back().norm);
    EXPECT_EQ(again.records.back().loss, tr.records.back().loss);
}

TEST(GdTrain, StopAtTTruncates)
{
    auto md = gen_margin_data(2000, 10, 0.3, 0.5, 1);
    GdOptions opt;
    opt.stop_at_t = true;
    auto tr = gd_train(md.data, md.mu, opt);
    ASSERT_TRUE(tr.stopping_t);
    EXPECT_EQ(tr.records.size(), *tr.stopping_t + 1);
    ASSERT_TRUE(tr.theta_at_t);
    EXPECT_NEAR(tr.theta_at_t->dot(md.mu), tr.records.back().alignment, 1e-15);
}

TEST(GdTrain, EarlyPeakThenMemorization)
{
    // n <= d keeps the noisy labels linearly realizable
    auto md = gen_margin_data(100, 100, 0.3, 0.5, 2);
    ASSERT_GT(md.data.noise_rate(), 0.0);
    GdOptions probe;
    probe.stop_at_t = true;
    auto first = gd_train(md.data, md.mu, probe);
    ASSERT_TRUE(first.stopping_t);
    const std::size_t T = std::max<std::size_t>(*first.stopping_t, 1);
    GdOptions opt;
    opt.max_steps = 100 * T;
    auto tr = gd_train(md.data, md.mu, opt);
    std::size_t peak = 0;
    for (const auto& r : tr.records)
        if (r.kappa_b > tr.records[peak].kappa_b)
            peak = r.step;
    EXPECT_LE(peak, 5 * T);
    EXPECT_LE(tr.records.back().kappa_b, tr.records[peak].kappa_b - 0.2);
    EXPECT_EQ(tr.records.back().acc_noisy_fit, 1.0);
}

TEST(GdTrain, DivergenceFlagged)
{
    auto md = gen_margin_data(100, 5, 1.0, 0.5, 3);
    GdOptions opt;
    opt.eta = 1e9;
    opt.max_steps = 50;
    auto tr = gd_train(md.data, md.mu, opt);
    EXPECT_TRUE(tr.diverged);
    EXPECT_LT(tr.records.size(), 51u);
    EXPECT_THROW(gd_train(md.data, md.mu, GdOptions{0.0}), SpecError);
}

TEST(AlignmentCheck, PerfectAndAdversarial)
{
    auto md = gen_margin_data(100, 3, 0.05, 0.5, 4);
    TrainTrace good;
    good.stopping_t = 0;
    good.theta_at_t = md.mu;
    auto a = alignment_bound_check(good, md.mu, 0.05, 0.5);
    EXPECT_TRUE(a.holds);
    EXPECT_DOUBLE_EQ(a.cosine, 1.0);
    EXPECT_NEAR(a.threshold, etp_b0(0.05, 0.5) / (10 * 1.1), 1e-15);
    TrainTrace bad = good;
    bad.theta_at_t = -md.mu;
    EXPECT_FALSE(alignment_bound_check(bad, md.mu, 0.05, 0.5).holds);
    TrainTrace none;
    EXPECT_THROW(alignment_bound_check(none, md.mu, 0.05, 0.5), SpecError);
}
