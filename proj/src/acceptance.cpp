#include "noiselab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "noiselab/bench.hpp"
#include "noiselab/domain.hpp"
#include "noiselab/error.hpp"
#include "noiselab/etp.hpp"
#include "noiselab/losses.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/output.hpp"
#include "noiselab/region_sampler.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

namespace {

constexpr std::uint64_t kSuiteSeed = 7;
constexpr std::size_t kBenchSeeds = 5;

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string g4(double v) { return fmt("%.4g", v); }

struct Context {
    bool quick;
    std::filesystem::path dir;
    // bench runs shared between the bench criteria, keyed by (seed, variant label)
    std::map<std::uint64_t, BenchSetup> setups;
    std::map<std::pair<std::uint64_t, std::string>, TrainResult> runs;

    const BenchSetup& setup(std::uint64_t seed)
    {
        auto it = setups.find(seed);
        if (it == setups.end()) {
            BenchParams b = standard_bench();
            it = setups.emplace(seed, prepare_bench(b.geometry, b.source, seed)).first;
        }
        return it->second;
    }

    const TrainResult& run(std::uint64_t seed, const BenchVariant& v)
    {
        auto key = std::make_pair(seed, v.label);
        auto it = runs.find(key);
        if (it == runs.end()) {
            const auto& s = setup(seed);
            it = runs.emplace(key, train_on_noisy(s.source.model, s.labels.data, v.train, seed + 1)).first;
        }
        return it->second;
    }
};

const BenchVariant& variant(const std::string& label)
{
    static const std::vector<BenchVariant> all = standard_variants();
    for (const auto& v : all)
        if (v.label == label)
            return v;
    throw SpecError("no standard variant " + label);
}

// ---- A1 ----

DomainSpec random_spec(std::size_t index, std::size_t d)
{
    Stream s(kSuiteSeed, StreamTag::MonteCarlo, 1000 + index);
    const auto n = static_cast<Eigen::Index>(d);
    DomainSpec spec;
    spec.sigma = 0.5 + 1.5 * s.uniform();
    spec.mu1 = Vector(n);
    Vector dir(n), orth(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        spec.mu1(i) = s.normal();
        dir(i) = s.normal();
        orth(i) = s.normal();
    }
    dir.normalize();
    const double sep = spec.sigma * (0.5 + 3.5 * s.uniform());
    spec.mu2 = spec.mu1 + sep * dir;
    const double alpha = -1.0 + 2.0 * s.uniform();
    orth -= orth.dot(dir) * dir;
    spec.delta = alpha * (spec.mu2 - spec.mu1) + s.uniform() * orth;
    return spec;
}

CriterionResult a1(Context& ctx)
{
    CriterionResult c{"A1", "closed-form mislabeling rate vs Monte Carlo", false, "", 0, 60};
    const std::size_t n = ctx.quick ? 100000 : 1000000;
    const std::size_t dims[] = {1, 2, 10, 100};
    CsvTable csv({"spec", "dim", "alpha", "closed_form", "monte_carlo", "std_error", "z"});
    std::size_t ok = 0;
    double max_z = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        DomainSpec spec = random_spec(i, dims[i % 4]);
        double cf = mislabel_rate(spec);
        auto mc = mislabel_rate_monte_carlo(spec, n, kSuiteSeed + i);
        double z = std::abs(cf - mc.estimate) / mc.std_error;
        max_z = std::max(max_z, z);
        ok += std::abs(cf - mc.estimate) <= 3.0 * mc.std_error;
        csv.add({static_cast<double>(i), static_cast<double>(spec.dim()), shift_projection(spec).alpha, cf, mc.estimate,
                 mc.std_error, z});
    }
    csv.write(ctx.dir / "A1.csv");
    c.pass = ok == 20;
    c.detail = std::to_string(ok) + "/20 specs within 3 SE, max |z| " + g4(max_z) + ", n " + std::to_string(n);
    return c;
}

// ---- A2 ----

CriterionResult a2(Context& ctx)
{
    CriterionResult c{"A2", "Bayes-error special case and growth in alpha", false, "", 0, 0};
    CsvTable csv({"spec", "alpha", "rate", "reference"});
    std::size_t exact = 0, increasing = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        DomainSpec spec = random_spec(100 + i, 1 + 11 * i);
        const Vector v = spec.mu2 - spec.mu1;
        const double reference = 0.5 * std::erfc(v.norm() / (2.0 * spec.sigma) / std::sqrt(2.0));
        bool mono = true;
        double prev = -1.0;
        for (int k = 0; k <= 20; ++k) {
            const double alpha = 0.05 * k;
            spec.delta = alpha * v;
            const double rate = mislabel_rate(spec);
            if (k == 0) {
                worst = std::max(worst, std::abs(rate - reference));
                exact += std::abs(rate - reference) <= 1e-10;
            } else if (!(rate > prev)) {
                mono = false;
            }
            prev = rate;
            csv.add({static_cast<double>(i), alpha, rate, k == 0 ? reference : std::nan("")});
        }
        increasing += mono;
    }
    csv.write(ctx.dir / "A2.csv");
    c.pass = exact == 10 && increasing == 10;
    c.detail = "alpha=0 exact in " + std::to_string(exact) + "/10 (max err " + g4(worst) + "), strictly increasing in " +
               std::to_string(increasing) + "/10";
    return c;
}

// ---- A3 ----

RegionSpec standard_region()
{
    const Eigen::Index d = 100;
    RegionSpec rs;
    rs.domain.sigma = 1.0;
    rs.domain.mu1 = Vector::Zero(d);
    rs.domain.mu2 = Vector::Ones(d);
    rs.domain.delta = 0.2 * (rs.domain.mu2 - rs.domain.mu1);
    rs.delta_conf = 0.01;
    return rs;
}

CriterionResult a3(Context& ctx)
{
    CriterionResult c{"A3", "mislabeling inside region R", false, "", 0, 30};
    RegionSpec rs = standard_region();
    const std::size_t n = 100000;
    auto data = annotate_with_source(sample_domain(rs.domain, Domain::Target, n, kSuiteSeed), rs.domain);
    mark_region(data, rs);
    std::size_t in_r = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i)
        if ((*data.in_region)[i]) {
            ++in_r;
            wrong += data.flipped[i];
        }
    const double rate = in_r ? static_cast<double>(wrong) / static_cast<double>(in_r) : std::nan("");
    const double se = in_r ? std::sqrt(rate * (1 - rate) / static_cast<double>(in_r)) : std::nan("");

    // diagnostic only: the same rate under draws conditioned on R
    const std::size_t m = ctx.quick ? 2000 : 20000;
    auto draws = sample_target_in_region(rs, m, kSuiteSeed);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < m; ++i)
        bad += label_from_score(source_score(rs.domain, draws.x.row(static_cast<Eigen::Index>(i)).transpose())) !=
               draws.y[i];
    const double cond = static_cast<double>(bad) / static_cast<double>(m);
    const double cond_se = std::sqrt(cond * (1 - cond) / static_cast<double>(m));

    CsvTable csv({"target_samples", "in_region", "rate", "std_error", "conditional_draws", "conditional_rate",
                  "conditional_std_error", "alpha_threshold", "ball_radius"});
    csv.add({static_cast<double>(n), static_cast<double>(in_r), rate, se, static_cast<double>(m), cond, cond_se,
             region_alpha_threshold(rs), region_ball_radius(rs)});
    csv.write(ctx.dir / "A3.csv");
    const bool cond_ok = region_nonempty_condition(rs);
    c.pass = cond_ok && in_r >= 200 && rate >= 0.99 - 3 * se;
    c.detail = std::string("condition ") + (cond_ok ? "true" : "false") + ", " + std::to_string(in_r) + " of " +
               std::to_string(n) + " samples in R (need 200); conditioned draws mislabeled " + g4(cond) + " +- " +
               g4(cond_se);
    return c;
}

// ---- A4 ----

CriterionResult a4(Context& ctx)
{
    CriterionResult c{"A4", "early-time kappa bound and alignment", false, "", 0, 300};
    const double sigmas[] = {0.01, 0.02, 0.05};
    const double rs[] = {0.3, 0.5, 0.7};
    const std::size_t seeds = ctx.quick ? 1 : 5;
    CsvTable csv({"sigma", "r", "seed", "stopping_t", "kappa_at_t", "bound", "cosine", "threshold", "empty_b"});
    std::size_t total = 0, bound_ok = 0, align_ok = 0;
    for (double sigma : sigmas)
        for (double r : rs)
            for (std::uint64_t seed = 0; seed < seeds; ++seed) {
                auto md = gen_margin_data(10000, 100, sigma, r, seed);
                GdOptions opt;
                opt.stop_at_t = true;
                auto tr = gd_train(md.data, md.mu, opt);
                double k = std::nan(""), cosine = std::nan(""), thr = std::nan("");
                ++total;
                const double bound = etp_bound(sigma, r);
                if (tr.stopping_t) {
                    k = tr.records[*tr.stopping_t].kappa_b;
                    bound_ok += k >= bound;
                    auto ac = alignment_bound_check(tr, md.mu, sigma, r);
                    cosine = ac.cosine;
                    thr = ac.threshold;
                    align_ok += ac.holds;
                }
                csv.add({sigma, r, static_cast<double>(seed),
                         tr.stopping_t ? static_cast<double>(*tr.stopping_t) : std::nan(""), k, bound, cosine, thr,
                         tr.empty_b ? 1.0 : 0.0});
            }
    csv.write(ctx.dir / "A4.csv");
    c.pass = bound_ok == total && align_ok == total;
    c.detail = "kappa bound " + std::to_string(bound_ok) + "/" + std::to_string(total) + ", alignment " +
               std::to_string(align_ok) + "/" + std::to_string(total);
    return c;
}

// ---- A5 ----

CriterionResult a5(Context& ctx)
{
    CriterionResult c{"A5", "expected noisy correlation vs Monte Carlo", false, "", 0, 0};
    const std::size_t n = ctx.quick ? 100000 : 1000000;
    const double sigmas[] = {0.1, 0.5, 1.0};
    const double rs[] = {0.3, 0.5, 0.7};
    CsvTable csv({"sigma", "r", "closed_form", "monte_carlo", "std_error"});
    std::size_t ok = 0;
    for (double sigma : sigmas)
        for (double r : rs) {
            auto md = gen_margin_data(n, 1, sigma, r, kSuiteSeed);
            double sum = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double v = md.data.noisy[i] * md.data.x(static_cast<Eigen::Index>(i), 0);
                sum += v;
                sq += v * v;
            }
            const double mean = sum / static_cast<double>(n);
            const double se = std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n - 1));
            const double cf = expected_noisy_correlation(sigma, r);
            ok += std::abs(cf - mean) <= 3 * se;
            csv.add({sigma, r, cf, mean, se});
        }
    csv.write(ctx.dir / "A5.csv");
    c.pass = ok == 9;
    c.detail = std::to_string(ok) + "/9 grid points within 3 SE";
    return c;
}

// ---- A6 ----

Probs random_simplex(Stream& s, int K)
{
    Probs p(K);
    for (int k = 0; k < K; ++k)
        p(k) = -std::log(s.uniform());
    return p / p.sum();
}

Probs random_positive(Stream& s, int K)
{
    Probs p(K);
    for (int k = 0; k < K; ++k)
        p(k) = 0.05 + 0.9 * s.uniform();
    return p;
}

template <class F>
Eigen::VectorXd central_diff(F f, const Probs& p)
{
    Eigen::VectorXd g(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
        Probs a = p, b = p;
        a(k) += h;
        b(k) -= h;
        g(k) = (f(a) - f(b)) / (2 * h);
    }
    return g;
}

double rel_err(const Eigen::VectorXd& g, const Eigen::VectorXd& fd)
{
    return (g - fd).norm() / std::max(g.norm(), 1e-8);
}

CriterionResult a6(Context& ctx)
{
    CriterionResult c{"A6", "loss-zoo properties and gradients", false, "", 0, 0};
    CsvTable csv({"check", "K", "value"});
    std::vector<std::string> failures;

    auto loss = [](auto kind) {
        LossSpec s;
        s.kind = kind;
        return s;
    };
    const std::vector<std::pair<std::string, LossSpec>> symmetric = {
        {"mae", loss(MeanAbsolute{})},
        {"rce", loss(ReverseCrossEntropy{})},
        {"nce", normalized(loss(CrossEntropy{}))},
        {"nmae", normalized(loss(MeanAbsolute{}))},
        {"ngce", normalized(loss(GeneralizedCrossEntropy{}))},
    };
    std::uint64_t stream = 0;
    for (int K : {2, 10})
        for (const auto& [name, spec] : symmetric) {
            Stream s(kSuiteSeed, StreamTag::MonteCarlo, 5000 + stream++);
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < 1000; ++i) {
                double v = symmetry_sum(spec, random_simplex(s, K));
                sum += v;
                sq += v * v;
            }
            const double mean = sum / 1000;
            const double var = std::max(0.0, sq / 1000 - mean * mean);
            csv.add_cells({"symmetry_variance_" + name, std::to_string(K), format_real(var)});
            if (var > 1e-18)
                failures.push_back("symmetry " + name + " K=" + std::to_string(K));
        }

    {
        Stream s(kSuiteSeed, StreamTag::MonteCarlo, 6000);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const int K = i % 2 ? 10 : 2;
            Probs p = random_simplex(s, K);
            const int y = static_cast<int>(s.below(static_cast<std::uint64_t>(K)));
            worst = std::max(worst, std::abs(loss_value(loss(GeneralizedCrossEntropy{1.0}), p, y) -
                                             0.5 * loss_value(loss(MeanAbsolute{}), p, y)));
        }
        csv.add_cells({"gce_q1_vs_half_mae", "2,10", format_real(worst)});
        if (worst > 1e-12)
            failures.push_back("gce q=1");
    }

    const std::vector<std::pair<std::string, LossSpec>> zoo = {
        {"ce", loss(CrossEntropy{})},
        {"mae", loss(MeanAbsolute{})},
        {"rce", loss(ReverseCrossEntropy{})},
        {"gce", loss(GeneralizedCrossEntropy{})},
        {"sl", loss(SymmetricCrossEntropy{})},
        {"nce", normalized(loss(CrossEntropy{}))},
        {"nmae", normalized(loss(MeanAbsolute{}))},
        {"ngce", normalized(loss(GeneralizedCrossEntropy{}))},
    };
    double worst_grad = 0.0;
    auto grad_check = [&](const std::string& name, double err) {
        worst_grad = std::max(worst_grad, err);
        if (err > 1e-5)
            failures.push_back("gradient " + name);
    };
    for (const auto& [name, spec] : zoo) {
        Stream s(kSuiteSeed, StreamTag::MonteCarlo, 7000 + stream++);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int K = 2 + static_cast<int>(s.below(9));
            Probs p = random_positive(s, K);
            const int y = static_cast<int>(s.below(static_cast<std::uint64_t>(K)));
            auto fd = central_diff([&](const Probs& q) { return loss_value(spec, q, y); }, p);
            worst = std::max(worst, rel_err(loss_grad(spec, p, y), fd));
        }
        csv.add_cells({"grad_rel_err_" + name, "2-10", format_real(worst)});
        grad_check(name, worst);
    }
    {
        Stream s(kSuiteSeed, StreamTag::MonteCarlo, 8000);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int K = 2 + static_cast<int>(s.below(9));
            Probs p = random_positive(s, K), yhat = random_simplex(s, K);
            auto fd = central_diff([&](const Probs& q) { return self_regularization_value(q, yhat); }, p);
            LossSpec sr = loss(SelfRegularization{});
            // the detached target equals the prediction at the evaluation point
            worst = std::max(worst, rel_err(loss_grad(sr, yhat, 0), -yhat));
            worst = std::max(worst, rel_err(-yhat, fd));
        }
        csv.add_cells({"grad_rel_err_sr", "2-10", format_real(worst)});
        grad_check("sr", worst);
    }
    {
        Stream s(kSuiteSeed, StreamTag::MonteCarlo, 8001);
        JensenShannon js;
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int K = 2 + static_cast<int>(s.below(9));
            std::vector<Probs> preds = {random_positive(s, K), random_positive(s, K)};
            const int y = static_cast<int>(s.below(static_cast<std::uint64_t>(K)));
            auto grads = gjs_grads(js, y, preds);
            for (std::size_t m = 0; m < preds.size(); ++m) {
                auto fd = central_diff(
                    [&](const Probs& q) {
                        auto moved = preds;
                        moved[m] = q;
                        return gjs_value(js, y, moved);
                    },
                    preds[m]);
                worst = std::max(worst, rel_err(grads[m], fd));
            }
        }
        csv.add_cells({"grad_rel_err_gjs", "2-10", format_real(worst)});
        grad_check("gjs", worst);
    }
    {
        Stream s(kSuiteSeed, StreamTag::MonteCarlo, 8002);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int K = 2 + static_cast<int>(s.below(9));
            ElrState elr(1, K, 0.7);
            Probs q = random_simplex(s, K), p = random_simplex(s, K);
            elr.update(0, q);
            const Eigen::VectorXd ybar = 0.3 * q;
            const Eigen::VectorXd expect = -ybar / (1.0 - ybar.dot(p));
            worst = std::max(worst, (elr.penalty(0, p).grad - expect).cwiseAbs().maxCoeff());
        }
        csv.add_cells({"elr_grad_abs_err", "2-10", format_real(worst)});
        if (worst > 1e-10)
            failures.push_back("elr gradient");
    }
    csv.write(ctx.dir / "A6.csv");
    c.pass = failures.empty();
    if (c.pass) {
        c.detail = "symmetry, GCE limit, gradients (max rel err " + g4(worst_grad) + ") and ELR gradient hold";
    } else {
        c.detail = "failed:";
        for (const auto& f : failures)
            c.detail += " " + f + ";";
    }
    return c;
}

// ---- bench criteria ----

double peak_early(const TrainResult& r, std::size_t until)
{
    double peak = 0.0;
    for (const auto& c : r.curve)
        if (c.step <= until)
            peak = std::max(peak, c.acc_vs_ground_truth);
    return peak;
}

double final_acc(const TrainResult& r) { return r.curve.back().acc_vs_ground_truth; }

void write_curve(const std::filesystem::path& path, const TrainResult& r, double labeling)
{
    CsvTable csv({"step", "alignment", "norm", "kappa_B", "loss", "acc_clean", "acc_noisy_fit", "acc_vs_noisy_labels",
                  "labeling_accuracy"});
    for (const auto& c : r.curve)
        csv.add({static_cast<double>(c.step), std::nan(""), c.weight_norm, c.kappa_on_mislabeled, c.mean_loss,
                 c.acc_vs_ground_truth, c.acc_vs_training_labels, c.acc_vs_noisy_labels, labeling});
    csv.write(path);
}

CriterionResult a7(Context& ctx)
{
    CriterionResult c{"A7", "CE peak-then-memorize and ELR protection", false, "", 0, 300};
    CsvTable csv({"seed", "labeling_accuracy", "ce_peak", "ce_final", "ce_noisy_fit", "elr_final", "pass"});
    std::size_t ok = 0;
    const std::size_t until = variant("ce").train.schedule.per_batch_until;
    for (std::uint64_t seed = 0; seed < kBenchSeeds; ++seed) {
        const double lab = ctx.setup(seed).labels.labeling_accuracy;
        const auto& ce = ctx.run(seed, variant("ce"));
        const auto& elr = ctx.run(seed, variant("ce+elr"));
        write_curve(ctx.dir / "A7" / ("ce_" + std::to_string(seed) + ".csv"), ce, lab);
        write_curve(ctx.dir / "A7" / ("elr_" + std::to_string(seed) + ".csv"), elr, lab);
        const double pk = peak_early(ce, until), fin = final_acc(ce), nf = ce.curve.back().acc_vs_noisy_labels;
        const double e = final_acc(elr);
        const bool pass =
            pk >= lab + 0.03 && std::abs(fin - lab) <= 0.03 && nf >= 0.95 && e >= pk - 0.05 && e >= fin + 0.1;
        ok += pass;
        csv.add({static_cast<double>(seed), lab, pk, fin, nf, e, pass ? 1.0 : 0.0});
    }
    csv.write(ctx.dir / "A7.csv");
    c.pass = ok == kBenchSeeds;
    c.detail = std::to_string(ok) + "/" + std::to_string(kBenchSeeds) + " seeds show the full pattern";
    return c;
}

CriterionResult a8(Context& ctx)
{
    CriterionResult c{"A8", "memorization speed, unbounded vs bounded noise", false, "", 0, 0};
    CsvTable csv({"seed", "steps_unbounded", "steps_bounded", "noise_unbounded", "noise_bounded"});
    std::size_t ok = 0;
    const auto& cfg = variant("ce").train;
    auto as_real = [](std::size_t s) { return s == kNeverFit ? INFINITY : static_cast<double>(s); };
    for (std::uint64_t seed = 0; seed < kBenchSeeds; ++seed) {
        const auto& s = ctx.setup(seed);
        const auto& noisy = s.labels.data;
        NoisyDataset bounded = flip_symmetric(noisy, noisy.noise_rate(), noisy.num_classes, seed);
        auto steps = memorization_speed(s.source.model, s.labels.data, bounded, cfg, seed + 1);
        ok += steps.unbounded < steps.bounded;
        csv.add({static_cast<double>(seed), as_real(steps.unbounded), as_real(steps.bounded),
                 s.labels.data.noise_rate(), bounded.noise_rate()});
    }
    csv.write(ctx.dir / "A8.csv");
    c.pass = ok >= 4;
    c.detail = "unbounded noise fit faster in " + std::to_string(ok) + "/" + std::to_string(kBenchSeeds) + " seeds";
    return c;
}

CriterionResult a9(Context& ctx)
{
    CriterionResult c{"A9", "robust losses disagree with the clean model on R", false, "", 0, 0};
    RegionSpec rs = standard_region();
    const std::size_t n = ctx.quick ? 2000 : 5000;
    auto signed_data = annotate_with_source(sample_domain(rs.domain, Domain::Target, n, kSuiteSeed + 1), rs.domain);
    NoisyDataset noisy = to_multiclass(signed_data);
    NoisyDataset clean = noisy;
    clean.noisy = clean.clean;
    clean.sync_flipped();

    TrainConfig base;
    base.epochs = 20;
    TrainConfig ce_cfg = base;
    TrainConfig mae_cfg = base;
    mae_cfg.loss.kind = MeanAbsolute{};
    TrainConfig gce_cfg = base;
    gce_cfg.loss.kind = GeneralizedCrossEntropy{};

    const SoftmaxModel bayes = bayes_source_model(rs.domain);
    auto reference = train_on_noisy(SoftmaxModel(2, rs.domain.dim()), clean, ce_cfg, kSuiteSeed).model;
    auto mae = train_on_noisy(bayes, noisy, mae_cfg, kSuiteSeed).model;
    auto gce = train_on_noisy(bayes, noisy, gce_cfg, kSuiteSeed).model;

    const std::size_t m = ctx.quick ? 1000 : 5000;
    auto draws = sample_target_in_region(rs, m, kSuiteSeed + 1);
    std::size_t dis_mae = 0, dis_gce = 0, dis_source = 0;
    for (std::size_t i = 0; i < m; ++i) {
        Vector x = draws.x.row(static_cast<Eigen::Index>(i)).transpose();
        const int ref = argmax(reference.predict(x));
        dis_mae += argmax(mae.predict(x)) != ref;
        dis_gce += argmax(gce.predict(x)) != ref;
        dis_source += argmax(bayes.predict(x)) != ref;
    }
    const double fm = static_cast<double>(dis_mae) / static_cast<double>(m);
    const double fg = static_cast<double>(dis_gce) / static_cast<double>(m);
    // the source rule is the direction of the noisy-risk infimum; reported, not scored
    const double fs = static_cast<double>(dis_source) / static_cast<double>(m);
    CsvTable csv({"region_draws", "disagree_mae", "disagree_gce", "disagree_source_rule", "train_size", "noise_rate"});
    csv.add({static_cast<double>(m), fm, fg, fs, static_cast<double>(n), noisy.noise_rate()});
    csv.write(ctx.dir / "A9.csv");
    c.pass = fm >= 0.96 && fg >= 0.96;
    c.detail = "disagreement on R: MAE " + g4(fm) + ", GCE " + g4(fg) + " (need 0.96); source rule " + g4(fs);
    return c;
}

CriterionResult a10(Context& ctx)
{
    CriterionResult c{"A10", "loss ordering, corrector and SR baselines", false, "", 0, 0};
    CsvTable csv({"seed", "ce", "ce+elr", "gce", "sl", "gjs", "corrector", "sr", "ordered"});
    std::size_t ordered = 0;
    double gap_corr = 0.0, gap_sr = 0.0;
    for (std::uint64_t seed = 0; seed < kBenchSeeds; ++seed) {
        std::map<std::string, double> f;
        for (const auto& v : standard_variants())
            f[v.label] = final_acc(ctx.run(seed, v));
        const double elr = f["ce+elr"], ce = f["ce"];
        bool ord = true;
        for (const char* k : {"gce", "sl", "gjs"})
            ord = ord && elr >= f[k] && f[k] >= ce;
        ordered += ord;
        gap_corr += (elr - f["corrector"]) / kBenchSeeds;
        gap_sr += std::abs(f["sr"] - ce) / kBenchSeeds;
        csv.add({static_cast<double>(seed), ce, elr, f["gce"], f["sl"], f["gjs"], f["corrector"], f["sr"],
                 ord ? 1.0 : 0.0});
    }
    csv.write(ctx.dir / "A10.csv");
    c.pass = ordered * 2 > kBenchSeeds && gap_corr >= 0.05 && gap_sr <= 0.03;
    c.detail = "ordering in " + std::to_string(ordered) + "/" + std::to_string(kBenchSeeds) +
               " seeds, ELR - corrector " + g4(gap_corr) + ", |SR - CE| " + g4(gap_sr) + " (seed means)";
    return c;
}

// ---- suite ----

std::vector<CriterionResult> run_suite(bool quick, const std::filesystem::path& dir,
                                       const std::vector<std::string>& only)
{
    Context ctx{quick, dir, {}, {}};
    using Fn = CriterionResult (*)(Context&);
    const Fn fns[] = {a1, a2, a3, a4, a5, a6, a7, a8, a9, a10};
    std::vector<CriterionResult> out;
    for (std::size_t i = 0; i < std::size(fns); ++i) {
        const Fn f = fns[i];
        if (!only.empty() && std::find(only.begin(), only.end(), "A" + std::to_string(i + 1)) == only.end())
            continue;
        auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = f(ctx);
        } catch (const std::exception& e) {
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.budget > 0 && r.seconds > r.budget && !quick) {
            r.pass = false;
            r.detail += "; over the " + fmt("%.0f", r.budget) + " s budget";
        }
        out.push_back(r);
    }
    return out;
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().stem() != "report") {
            std::ifstream in(e.path(), std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            files[std::filesystem::relative(e.path(), root).generic_string()] = ss.str();
        }
    return files;
}

} // namespace

BenchParams standard_bench()
{
    BenchParams b;
    b.geometry.num_classes = 2;
    b.geometry.dim = 20;
    b.geometry.sep = 5.0;
    b.geometry.sigma = 1.0;
    b.geometry.delta_scale = 2.97;
    b.geometry.n_source = 20000;
    b.geometry.n_target = 300;
    b.source.lr = 0.5;
    b.source.epochs = 5;
    b.source.batch_size = 128;
    b.source.weight_decay = 0.2;
    b.train.lr = 0.05;
    b.train.epochs = 2048;
    b.train.batch_size = 128;
    return b;
}

std::vector<BenchVariant> standard_variants()
{
    const TrainConfig base = standard_bench().train;
    auto with_loss = [&](auto kind) {
        TrainConfig t = base;
        t.loss.kind = kind;
        return t;
    };
    TrainConfig elr = base;
    elr.elr = ElrConfig{0.9, 3.0};
    TrainConfig corrector = base;
    corrector.corrector_threshold = 0.75;
    TrainConfig sr = base;
    LossSpec term;
    term.kind = SelfRegularization{};
    term.lambda = 3.0;
    sr.regularizer = term;
    return {{"ce", base},
            {"ce+elr", elr},
            {"gce", with_loss(GeneralizedCrossEntropy{})},
            {"sl", with_loss(SymmetricCrossEntropy{})},
            {"gjs", with_loss(JensenShannon{})},
            {"corrector", corrector},
            {"sr", sr}};
}

bool AcceptanceReport::all_pass() const
{
    for (const auto& c : criteria)
        if (!c.pass)
            return false;
    return !criteria.empty();
}

std::string AcceptanceReport::table() const
{
    std::string out;
    for (const auto& c : criteria) {
        char head[32];
        std::snprintf(head, sizeof head, "%-4s %s  ", c.id.c_str(), c.pass ? "PASS" : "FAIL");
        out += head + c.title + ": " + c.detail + "\n";
    }
    out += all_pass() ? "all criteria passed\n" : "some criteria failed\n";
    return out;
}

Json AcceptanceReport::json() const
{
    Json list = Json::array();
    for (const auto& c : criteria)
        list.push_back({{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"detail", c.detail}});
    return {{"schema_version", 1}, {"quick", quick}, {"all_pass", all_pass()}, {"criteria", list}};
}

AcceptanceReport run_acceptance(const AcceptanceOptions& opt)
{
    namespace fs = std::filesystem;
    const fs::path scratch = fs::temp_directory_path() / ("noiselab-accept-" + std::to_string(::getpid()));
    const fs::path dir = opt.out_dir ? *opt.out_dir : scratch / "a";
    fs::create_directories(dir);

    AcceptanceReport report;
    report.quick = opt.quick;
    report.criteria = run_suite(opt.quick, dir, opt.only);

    if (opt.determinism_rerun && (opt.only.empty() || std::count(opt.only.begin(), opt.only.end(), "A11"))) {
        CriterionResult c{"A11", "determinism across repeated runs", false, "", 0, 0};
        const fs::path again = scratch / "b";
        fs::remove_all(again);
        fs::create_directories(again);
        auto second = run_suite(opt.quick, again, opt.only);
        auto first_files = read_tree(dir), second_files = read_tree(again);
        std::size_t differ = 0;
        for (const auto& [name, bytes] : first_files) {
            auto it = second_files.find(name);
            differ += it == second_files.end() || it->second != bytes;
        }
        differ += second_files.size() > first_files.size() ? second_files.size() - first_files.size() : 0;
        AcceptanceReport rerun;
        rerun.criteria = second;
        AcceptanceReport firstonly;
        firstonly.criteria = report.criteria;
        const bool same_table = rerun.table() == firstonly.table();
        c.pass = differ == 0 && same_table && !first_files.empty();
        c.detail = std::to_string(first_files.size()) + " files compared, " + std::to_string(differ) +
                   " differ; tables " + (same_table ? "identical" : "differ");
        report.criteria.push_back(c);
    }
    write_json(dir / "report.json", report.json());
    write_text(dir / "report.txt", report.table());
    std::error_code ec;
    fs::remove_all(scratch, ec);
    return report;
}

} // namespace noiselab
