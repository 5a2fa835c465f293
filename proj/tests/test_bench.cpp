#include <gtest/gtest.h>

#include <cmath>

#include "noiselab/bench.hpp"
#include "noiselab/error.hpp"
#include "noiselab/noise.hpp"

using namespace noiselab;

namespace {

GeometryConfig small_geometry()
{
    GeometryConfig g;
    g.num_classes = 3;
    g.dim = 5;
    g.sep = 3.0;
    g.n_source = 3000;
    g.n_target = 600;
    return g;
}

int nearest_mean(const Matrix& means, const Vector& x)
{
    Eigen::VectorXd score = -(means.rowwise() - x.transpose()).rowwise().squaredNorm().transpose();
    return argmax(score);
}

} // namespace

TEST(Domains, GeometryAndShift)
{
    GeometryConfig g = small_geometry();
    g.delta_scale = 2.0;
    g.shift_from = 0;
    g.shift_to = 2;
    auto dom = gen_multiclass_domains(g, 1);
    for (int k = 0; k < 3; ++k)
        for (Eigen::Index j = 0; j < 5; ++j)
            EXPECT_EQ(dom.means(k, j), j == k ? 3.0 : 0.0);
    Vector dir = (dom.means.row(2) - dom.means.row(0)).transpose().normalized();
    EXPECT_TRUE(dom.delta.isApprox(2.0 * dir));
    EXPECT_EQ(dom.source.size(), 3000u);
    EXPECT_EQ(dom.target.size(), 600u);
    EXPECT_EQ(dom.target.noise_rate(), 0.0);

    g.dim = 2;
    EXPECT_THROW(gen_multiclass_domains(g, 1), DimensionError);
}

TEST(Domains, NoShiftMeansAgree)
{
    GeometryConfig g = small_geometry();
    g.delta_scale = 0.0;
    g.n_source = g.n_target = 30000;
    auto dom = gen_multiclass_domains(g, 2);
    Vector ms = dom.source.x.colwise().mean().transpose(), mt = dom.target.x.colwise().mean().transpose();
    EXPECT_LT((ms - mt).cwiseAbs().maxCoeff(), 0.1);
    auto again = gen_multiclass_domains(g, 2);
    EXPECT_EQ(again.target.x, dom.target.x);
}

TEST(Domains, ShiftHurtsTheSourceRule)
{
    GeometryConfig g;   // K=5, d=20, sep=2, delta_scale=1
    g.n_source = g.n_target = 100000;
    auto dom = gen_multiclass_domains(g, 3);
    double src = 0, tgt = 0;
    for (std::size_t i = 0; i < dom.source.size(); ++i) {
        src += nearest_mean(dom.means, dom.source.x.row(static_cast<Eigen::Index>(i)).transpose()) == dom.source.clean[i];
        tgt += nearest_mean(dom.means, dom.target.x.row(static_cast<Eigen::Index>(i)).transpose()) == dom.target.clean[i];
    }
    EXPECT_LT(tgt / 1e5 + 0.01, src / 1e5);
}

TEST(SourceFit, SeparableSourceFitsPerfectly)
{
    GeometryConfig g = small_geometry();
    g.sigma = 0.05;
    g.delta_scale = 0.0;
    auto dom = gen_multiclass_domains(g, 4);
    auto fit = fit_source_model(dom.source, 3, SourceConfig{}, 4);
    EXPECT_EQ(fit.source_accuracy, 1.0);
    EXPECT_FALSE(fit.diverged);
    EXPECT_EQ(pseudo_label(fit.model, dom.target).labeling_accuracy, 1.0);
}

TEST(SourceFit, BinaryDirectionAndHeldOut)
{
    GeometryConfig g;
    g.num_classes = 2;
    g.dim = 20;
    g.sep = 2.0;
    g.delta_scale = 0.0;
    g.n_source = g.n_target = 100000;
    auto dom = gen_multiclass_domains(g, 5);
    auto fit = fit_source_model(dom.source, 2, SourceConfig{}, 5);
    Vector w = (fit.model.weights.row(0) - fit.model.weights.row(1)).transpose();
    Vector bayes = (dom.means.row(0) - dom.means.row(1)).transpose();
    EXPECT_GE(w.normalized().dot(bayes.normalized()), 0.97);
    const double held = accuracy(fit.model, dom.target.x, dom.target.clean);
    const double best = 0.5 * std::erfc(-bayes.norm() / (2.0 * g.sigma) / std::sqrt(2.0));
    EXPECT_NEAR(held, best, 0.01);
    EXPECT_NEAR(fit.source_accuracy, best, 0.01);
}

TEST(PseudoLabel, TiesAndLabelingAccuracy)
{
    Eigen::VectorXd v(4);
    v << 0.2, 0.5, 0.5, 0.1;
    EXPECT_EQ(argmax(v), 1);
    v << 1, 1, 1, 1;
    EXPECT_EQ(argmax(v), 0);

    SoftmaxModel zero(3, 2);
    NoisyDataset t;
    t.kind = LabelKind::Multiclass;
    t.num_classes = 3;
    t.x = Matrix::Random(6, 2);
    t.clean = {0, 1, 2, 0, 1, 2};
    t.noisy = t.clean;
    t.sync_flipped();
    auto pl = pseudo_label(zero, t);
    EXPECT_EQ(pl.data.noisy, std::vector<int>(6, 0));
    EXPECT_NEAR(pl.labeling_accuracy, 2.0 / 6.0, 1e-15);
    EXPECT_NEAR(pl.data.noise_rate(), 4.0 / 6.0, 1e-15);
}

TEST(PseudoLabel, StandardFiveClassSettingIsNoisy)
{
    GeometryConfig g;
    SourceConfig s;
    double prev = -1;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto b = prepare_bench(g, s, seed);
        EXPECT_GT(b.labels.labeling_accuracy, 0.5);
        EXPECT_LT(b.labels.labeling_accuracy, 1.0);
        if (prev >= 0)
            EXPECT_NEAR(b.labels.labeling_accuracy, prev, 0.01);
        prev = b.labels.labeling_accuracy;
    }
}

TEST(BayesModel, MatchesSignRule)
{
    DomainSpec spec;
    spec.mu1 = Vector::Zero(4);
    spec.mu2 = Vector::Ones(4);
    spec.delta = 0.3 * Vector::Ones(4);
    auto data = annotate_with_source(sample_domain(spec, Domain::Target, 2000, 1), spec);
    auto mc = to_multiclass(data);
    SoftmaxModel m = bayes_source_model(spec);
    for (std::size_t i = 0; i < data.size(); ++i) {
        Vector x = data.x.row(static_cast<Eigen::Index>(i)).transpose();
        ASSERT_EQ(argmax(m.predict(x)), mc.noisy[i]);
        ASSERT_EQ(mc.clean[i], data.clean[i] == 1 ? 0 : 1);
        ASSERT_NEAR(m.predict(x)(0), 1.0 / (1.0 + std::exp(-source_score(spec, x))), 1e-12);
    }
    EXPECT_EQ(mc.noise_rate(), data.noise_rate());
}

TEST(Train, EvaluationSchedule)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 6);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 50;   // 12 steps per epoch, evaluate every round(3.6) = 4 steps after step 90
    auto r = train_on_noisy(b.source.model, b.labels.data, cfg, 1);
    std::vector<std::size_t> steps;
    for (const auto& c : r.curve)
        steps.push_back(c.step);
    std::vector<std::size_t> expect;
    for (std::size_t s = 0; s <= 720; ++s)
        if (s <= 90 || s % 4 == 0)
            expect.push_back(s);
    EXPECT_EQ(steps, expect);
    EXPECT_DOUBLE_EQ(r.curve.back().epoch, 60.0);
    for (const auto& c : r.curve) {
        ASSERT_GE(c.acc_vs_ground_truth, 0.0);
        ASSERT_LE(c.acc_vs_ground_truth, 1.0);
        ASSERT_GE(c.kappa_on_mislabeled, 0.0);
        ASSERT_LE(c.kappa_on_mislabeled, 1.0);
    }
    // step 0 is the untouched source model
    EXPECT_DOUBLE_EQ(r.curve.front().acc_vs_noisy_labels, 1.0);
    EXPECT_DOUBLE_EQ(r.curve.front().acc_vs_ground_truth, b.labels.labeling_accuracy);
}

TEST(Train, FinalStepAlwaysRecorded)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 7);
    TrainConfig cfg;
    cfg.epochs = 31;
    cfg.batch_size = 128;   // 5 steps per epoch, 155 steps, every 2 -> 155 is odd
    auto r = train_on_noisy(b.source.model, b.labels.data, cfg, 1);
    EXPECT_EQ(r.curve.back().step, 155u);
}

TEST(Train, DeterministicPerSeed)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 8);
    for (auto kind : {LossSpec{CrossEntropy{}}, LossSpec{JensenShannon{}}}) {
        TrainConfig cfg;
        cfg.loss = kind;
        cfg.epochs = 3;
        cfg.elr = ElrConfig{};
        auto a = train_on_noisy(b.source.model, b.labels.data, cfg, 3);
        auto c = train_on_noisy(b.source.model, b.labels.data, cfg, 3);
        EXPECT_EQ(a.model.weights, c.model.weights);
        EXPECT_EQ(a.curve.size(), c.curve.size());
    }
}

TEST(Train, ValidationErrors)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 9);
    TrainConfig cfg;
    cfg.lr = 0;
    EXPECT_THROW(train_on_noisy(b.source.model, b.labels.data, cfg, 1), SpecError);
    cfg = TrainConfig{};
    cfg.corrector_threshold = 1.5;
    EXPECT_THROW(train_on_noisy(b.source.model, b.labels.data, cfg, 1), SpecError);
    EXPECT_THROW(train_on_noisy(SoftmaxModel(3, 4), b.labels.data, TrainConfig{}, 1), DimensionError);
}

TEST(Train, DivergenceFlagged)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 10);
    TrainConfig cfg;
    cfg.lr = 1e300;
    cfg.epochs = 2;
    auto r = train_on_noisy(b.source.model, b.labels.data, cfg, 1);
    EXPECT_TRUE(r.diverged);
}

TEST(Memorization, CleanDataFitsImmediately)
{
    GeometryConfig g = small_geometry();
    g.sigma = 0.05;
    auto b = prepare_bench(g, SourceConfig{}, 11);
    ASSERT_EQ(b.labels.data.noise_rate(), 0.0);
    TrainConfig cfg;
    cfg.epochs = 2;
    auto s = memorization_speed(b.source.model, b.labels.data, b.labels.data, cfg, 1);
    EXPECT_EQ(s.unbounded, s.bounded);
    EXPECT_EQ(s.unbounded, 0u);
}

TEST(Memorization, NeverFitSentinel)
{
    auto b = prepare_bench(small_geometry(), SourceConfig{}, 12);
    auto& d = b.labels.data;
    auto random = flip_symmetric(d, 0.6, 3, 5);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.lr = 1e-6;
    auto s = memorization_speed(b.source.model, d, random, cfg, 1);
    EXPECT_EQ(s.unbounded, 0u);
    EXPECT_EQ(s.bounded, kNeverFit);
}
