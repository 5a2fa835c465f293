#include "noiselab/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <thread>

#include "noiselab/bench.hpp"
#include "noiselab/domain.hpp"
#include "noiselab/error.hpp"
#include "noiselab/etp.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/output.hpp"
#include "noiselab/region_sampler.hpp"

namespace noiselab {

namespace {

struct Unit {
    std::string point;   // empty for single-point kinds
    std::size_t index;   // grid point index
    std::uint64_t seed;
};

struct UnitResult {
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    Json metrics = Json::object();
    Json checks = Json::object();
    std::vector<std::string> aggregate_row;
};

std::string short_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

Json number_or_null(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

std::filesystem::path seed_file(const Unit& u)
{
    std::filesystem::path p = u.point.empty() ? std::filesystem::path{} : std::filesystem::path{u.point};
    return p / (std::to_string(u.seed) + ".csv");
}

// ---- rate_sweep ----

UnitResult run_rate_sweep(const RateSweepParams& p, const Unit& u)
{
    const auto d = static_cast<Eigen::Index>(p.dim);
    DomainSpec spec;
    spec.sigma = p.sigma;
    spec.mu1 = p.mu1.empty() ? Vector::Zero(d) : Eigen::Map<const Vector>(p.mu1.data(), d).eval();
    spec.mu2 = p.mu2.empty() ? (spec.mu1.array() + p.sigma).matrix().eval()
                             : Eigen::Map<const Vector>(p.mu2.data(), d).eval();
    Vector orth = p.orthogonal.empty() ? Vector::Zero(d) : Eigen::Map<const Vector>(p.orthogonal.data(), d).eval();
    const Vector v = spec.mu2 - spec.mu1;
    if (std::abs(orth.dot(v)) > 1e-9 * std::max(1.0, orth.norm() * v.norm()))
        throw ConfigError("parameters.orthogonal_shift must be orthogonal to mu2 - mu1");
    spec.delta = orth;
    spec.validate();

    CsvTable csv({"alpha", "rate", "rate_norm_form", "mc_estimate", "mc_std_error", "bayes_floor"});
    const double floor = source_bayes_error(spec);
    const auto steps = static_cast<std::size_t>(std::floor((p.alpha_max - p.alpha_min) / p.alpha_step + 1e-9));
    std::vector<double> alphas, rates;
    double max_z = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        double a = p.alpha_min + static_cast<double>(i) * p.alpha_step;
        if (std::abs(a) < 1e-12)
            a = 0.0;
        spec.delta = a * v + orth;
        double rate = mislabel_rate(spec);
        double mc = std::nan(""), se = std::nan("");
        if (p.monte_carlo_samples > 0) {
            auto est = mislabel_rate_monte_carlo(spec, p.monte_carlo_samples, u.seed);
            mc = est.estimate;
            se = est.std_error;
            if (se > 0)
                max_z = std::max(max_z, std::abs(mc - rate) / se);
        }
        csv.add({a, rate, mislabel_rate_norm_form(spec), mc, se, floor});
        alphas.push_back(a);
        rates.push_back(rate);
    }
    // U shape: non-increasing up to alpha = 0, non-decreasing after
    bool u_shape = true;
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (alphas[i] <= 0.0 && rates[i] > rates[i - 1] + 1e-15)
            u_shape = false;
        if (alphas[i - 1] >= 0.0 && rates[i] < rates[i - 1] - 1e-15)
            u_shape = false;
    }
    UnitResult r;
    r.files.emplace_back(seed_file(u), csv.str());
    r.metrics["rows"] = rates.size();
    r.metrics["bayes_floor"] = floor;
    r.metrics["min_rate"] = *std::min_element(rates.begin(), rates.end());
    r.metrics["max_rate"] = *std::max_element(rates.begin(), rates.end());
    if (p.monte_carlo_samples > 0)
        r.metrics["max_abs_z"] = max_z;
    r.checks["u_shape"] = u_shape;
    return r;
}

// ---- region_check ----

DomainSpec axis_domain(std::size_t dim, double sigma, double alpha)
{
    const auto d = static_cast<Eigen::Index>(dim);
    DomainSpec s;
    s.sigma = sigma;
    s.mu1 = Vector::Zero(d);
    s.mu2 = Vector::Constant(d, sigma);
    s.delta = alpha * (s.mu2 - s.mu1);
    return s;
}

UnitResult run_region_check(const RegionCheckParams& p, const Unit& u)
{
    RegionSpec rs{axis_domain(p.dim, p.sigma, p.alpha), p.delta_conf};
    rs.validate();
    auto data = sample_domain(rs.domain, Domain::Target, p.samples, u.seed);
    data = annotate_with_source(std::move(data), rs.domain);
    mark_region(data, rs);
    std::size_t in_r = 0, wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if ((*data.in_region)[i]) {
            ++in_r;
            wrong += data.flipped[i];
        }
    double rate = in_r ? static_cast<double>(wrong) / static_cast<double>(in_r) : std::nan("");
    double se = in_r ? std::sqrt(rate * (1.0 - rate) / static_cast<double>(in_r)) : std::nan("");

    double chain_rate = std::nan(""), chain_se = std::nan(""), min_post = std::nan("");
    if (p.chain_samples > 0) {
        auto draws = sample_target_in_region(rs, p.chain_samples, u.seed);
        if (!draws.empty) {
            std::size_t bad = 0;
            min_post = 1.0;
            for (std::size_t i = 0; i < draws.y.size(); ++i) {
                Vector x = draws.x.row(static_cast<Eigen::Index>(i)).transpose();
                bad += label_from_score(source_score(rs.domain, x)) != draws.y[i];
                min_post = std::min(min_post, posterior_true_class(x, rs.domain));
            }
            chain_rate = static_cast<double>(bad) / static_cast<double>(draws.y.size());
            chain_se = std::sqrt(chain_rate * (1.0 - chain_rate) / static_cast<double>(draws.y.size()));
        }
    }
    CsvTable csv({"samples", "in_region", "mislabeled_in_region", "rate_in_region", "std_error", "chain_samples",
                  "chain_rate", "chain_std_error", "chain_min_posterior", "ball_radius", "alpha_threshold"});
    csv.add({static_cast<double>(p.samples), static_cast<double>(in_r), static_cast<double>(wrong), rate, se,
             static_cast<double>(p.chain_samples), chain_rate, chain_se, min_post, region_ball_radius(rs),
             region_alpha_threshold(rs)});
    UnitResult r;
    r.files.emplace_back(seed_file(u), csv.str());
    r.metrics["in_region"] = in_r;
    r.metrics["rate_in_region"] = number_or_null(rate);
    r.metrics["chain_rate"] = number_or_null(chain_rate);
    r.metrics["chain_min_posterior"] = number_or_null(min_post);
    const double target = 1.0 - p.delta_conf;
    r.checks["nonempty_condition"] = region_nonempty_condition(rs);
    r.checks["region_populated"] = in_r >= 200;
    r.checks["mislabel_bound"] = in_r >= 200 && rate >= target - 3.0 * se;
    if (p.chain_samples > 0)
        r.checks["conditional_mislabel_bound"] = std::isfinite(chain_rate) && chain_rate >= target - 3.0 * chain_se;
    return r;
}

// ---- etp ----

CsvTable trace_table(const TrainTrace& t)
{
    CsvTable csv({"step", "alignment", "norm", "kappa_B", "loss", "acc_clean", "acc_noisy_fit"});
    for (const auto& r : t.records)
        csv.add({static_cast<double>(r.step), r.alignment, r.norm, r.kappa_b, r.loss, r.acc_clean, r.acc_noisy_fit});
    return csv;
}

UnitResult run_etp(const EtpRunParams& p, double sigma, double r, const Unit& u)
{
    std::optional<Vector> mu;
    if (!p.mu.empty())
        mu = Eigen::Map<const Vector>(p.mu.data(), static_cast<Eigen::Index>(p.mu.size()));
    auto md = gen_margin_data(p.n, p.dim, sigma, r, u.seed, mu);
    GdOptions opt;
    opt.eta = p.eta;
    opt.max_steps = p.max_steps;
    opt.half_argument = p.half_argument;
    auto trace = gd_train(md.data, md.mu, opt);

    UnitResult res;
    res.files.emplace_back(seed_file(u), trace_table(trace).str());
    const double bound = etp_bound(sigma, r);
    double kappa_t = std::nan(""), cosine = std::nan(""), threshold = std::nan("");
    bool bound_ok = false, align_ok = false;
    if (trace.stopping_t) {
        kappa_t = trace.records[*trace.stopping_t].kappa_b;
        auto ac = alignment_bound_check(trace, md.mu, sigma, r);
        cosine = ac.cosine;
        threshold = ac.threshold;
        align_ok = ac.holds;
        bound_ok = kappa_t >= bound;
    }
    std::size_t peak_step = 0;
    for (const auto& rec : trace.records)
        if (rec.kappa_b > trace.records[peak_step].kappa_b)
            peak_step = rec.step;
    res.metrics["stopping_t"] = trace.stopping_t ? Json(*trace.stopping_t) : Json(nullptr);
    res.metrics["kappa_at_t"] = number_or_null(kappa_t);
    res.metrics["etp_bound"] = bound;
    res.metrics["cosine_at_t"] = number_or_null(cosine);
    res.metrics["alignment_threshold"] = number_or_null(threshold);
    res.metrics["kappa_peak_step"] = peak_step;
    res.metrics["kappa_final"] = trace.records.back().kappa_b;
    res.metrics["acc_noisy_fit_final"] = trace.records.back().acc_noisy_fit;
    res.metrics["empty_b"] = trace.empty_b;
    res.metrics["diverged"] = trace.diverged;
    res.checks["bound_satisfied"] = bound_ok;
    res.checks["alignment_bound"] = align_ok;
    res.aggregate_row = {short_real(sigma),
                         short_real(r),
                         std::to_string(u.seed),
                         trace.stopping_t ? std::to_string(*trace.stopping_t) : "nan",
                         format_real(kappa_t),
                         format_real(bound),
                         bound_ok ? "1" : "0",
                         format_real(cosine),
                         format_real(threshold),
                         align_ok ? "1" : "0",
                         trace.empty_b ? "1" : "0"};
    return res;
}

// ---- bench ----

CsvTable curve_table(const std::vector<CurveRecord>& curve, double labeling)
{
    CsvTable csv({"step", "alignment", "norm", "kappa_B", "loss", "acc_clean", "acc_noisy_fit", "acc_vs_noisy_labels",
                  "labeling_accuracy"});
    for (const auto& c : curve)
        csv.add({static_cast<double>(c.step), std::nan(""), c.weight_norm, c.kappa_on_mislabeled, c.mean_loss,
                 c.acc_vs_ground_truth, c.acc_vs_training_labels, c.acc_vs_noisy_labels, labeling});
    return csv;
}

UnitResult run_bench(const BenchParams& p, const TrainConfig& train, const Unit& u)
{
    auto setup = prepare_bench(p.geometry, p.source, u.seed);
    auto result = train_on_noisy(setup.source.model, setup.labels.data, train, u.seed + 1);
    double peak = 0.0;
    for (const auto& c : result.curve)
        if (c.step <= train.schedule.per_batch_until)
            peak = std::max(peak, c.acc_vs_ground_truth);
    const auto& last = result.curve.back();
    UnitResult r;
    r.files.emplace_back(seed_file(u), curve_table(result.curve, setup.labels.labeling_accuracy).str());
    r.metrics["labeling_accuracy"] = setup.labels.labeling_accuracy;
    r.metrics["source_accuracy"] = setup.source.source_accuracy;
    r.metrics["peak_early"] = peak;
    r.metrics["final_accuracy"] = last.acc_vs_ground_truth;
    r.metrics["final_noisy_fit"] = last.acc_vs_noisy_labels;
    r.metrics["final_kappa"] = last.kappa_on_mislabeled;
    r.metrics["elr_clamps"] = result.elr_clamps;
    r.metrics["diverged"] = result.diverged;
    r.aggregate_row = {u.point,
                       std::to_string(u.seed),
                       format_real(setup.labels.labeling_accuracy),
                       format_real(peak),
                       format_real(last.acc_vs_ground_truth),
                       format_real(last.acc_vs_noisy_labels)};
    return r;
}

UnitResult run_memorization(const BenchParams& p, const Unit& u)
{
    auto setup = prepare_bench(p.geometry, p.source, u.seed);
    const NoisyDataset& unbounded = setup.labels.data;
    NoisyDataset bounded = flip_symmetric(unbounded, unbounded.noise_rate(), unbounded.num_classes, u.seed);
    auto steps = memorization_speed(setup.source.model, unbounded, bounded, p.train, u.seed + 1);
    auto as_real = [](std::size_t s) { return s == kNeverFit ? INFINITY : static_cast<double>(s); };
    CsvTable csv({"steps_unbounded", "steps_bounded", "noise_rate_unbounded", "noise_rate_bounded"});
    csv.add({as_real(steps.unbounded), as_real(steps.bounded), unbounded.noise_rate(), bounded.noise_rate()});
    UnitResult r;
    r.files.emplace_back(seed_file(u), csv.str());
    r.metrics["steps_unbounded"] = steps.unbounded == kNeverFit ? Json(nullptr) : Json(steps.unbounded);
    r.metrics["steps_bounded"] = steps.bounded == kNeverFit ? Json(nullptr) : Json(steps.bounded);
    r.metrics["noise_rate_unbounded"] = unbounded.noise_rate();
    r.metrics["noise_rate_bounded"] = bounded.noise_rate();
    r.checks["unbounded_faster"] = steps.unbounded < steps.bounded;
    return r;
}

// ---- driver ----

struct Plan {
    std::vector<Unit> units;
    std::vector<std::string> aggregate_header;
};

Plan make_plan(const ExperimentConfig& cfg)
{
    Plan plan;
    auto per_seed = [&](const std::string& point, std::size_t idx) {
        for (auto s : cfg.seeds)
            plan.units.push_back({point, idx, s});
    };
    if (const auto* g = std::get_if<EtpGridParams>(&cfg.params)) {
        std::size_t idx = 0;
        for (double s : g->sigmas)
            for (double r : g->rs)
                per_seed("sigma_" + short_real(s) + "_r_" + short_real(r), idx++);
        plan.aggregate_header = {"sigma",      "r",         "seed",         "stopping_t",
                                 "kappa_at_t", "etp_bound", "bound_ok",     "cosine_at_t",
                                 "threshold",  "alignment_ok", "empty_b"};
    } else if (cfg.kind == ExperimentKind::BenchCompare) {
        const auto& b = std::get<BenchParams>(cfg.params);
        for (std::size_t i = 0; i < b.variants.size(); ++i)
            per_seed(b.variants[i].label, i);
        plan.aggregate_header = {"variant", "seed", "labeling_accuracy", "peak_early", "final_accuracy",
                                 "final_noisy_fit"};
    } else {
        per_seed("", 0);
    }
    return plan;
}

UnitResult execute(const ExperimentConfig& cfg, const Unit& u)
{
    switch (cfg.kind) {
    case ExperimentKind::RateSweep:
        return run_rate_sweep(std::get<RateSweepParams>(cfg.params), u);
    case ExperimentKind::RegionCheck:
        return run_region_check(std::get<RegionCheckParams>(cfg.params), u);
    case ExperimentKind::EtpRun: {
        const auto& p = std::get<EtpRunParams>(cfg.params);
        return run_etp(p, p.sigma, p.r, u);
    }
    case ExperimentKind::EtpGrid: {
        const auto& g = std::get<EtpGridParams>(cfg.params);
        double s = g.sigmas[u.index / g.rs.size()];
        double r = g.rs[u.index % g.rs.size()];
        return run_etp(g.base, s, r, u);
    }
    case ExperimentKind::BenchRun: {
        const auto& b = std::get<BenchParams>(cfg.params);
        return run_bench(b, b.train, u);
    }
    case ExperimentKind::BenchCompare: {
        const auto& b = std::get<BenchParams>(cfg.params);
        return run_bench(b, b.variants[u.index].train, u);
    }
    case ExperimentKind::Memorization:
        return run_memorization(std::get<BenchParams>(cfg.params), u);
    }
    throw ConfigError("unhandled experiment kind");
}

Json aggregate(const std::vector<Unit>& units, const std::vector<UnitResult>& results)
{
    // mean and sample std per point and metric, numeric metrics only
    std::map<std::string, std::map<std::string, std::vector<double>>> acc;
    for (std::size_t i = 0; i < units.size(); ++i)
        for (auto it = results[i].metrics.begin(); it != results[i].metrics.end(); ++it)
            if (it.value().is_number())
                acc[units[i].point.empty() ? "all" : units[i].point][it.key()].push_back(it.value().get<double>());
    Json out = Json::object();
    for (const auto& [point, metrics] : acc)
        for (const auto& [name, xs] : metrics) {
            double mean = 0.0;
            for (double x : xs)
                mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs)
                var += (x - mean) * (x - mean);
            double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            out[point][name] = {{"mean", mean}, {"std", sd}, {"count", xs.size()}};
        }
    return out;
}

RunSummary execute_plan(const ExperimentConfig& cfg, const RunOptions& opt, unsigned jobs)
{
    Plan plan = make_plan(cfg);
    std::filesystem::path final_dir = resolve_output_dir(cfg, opt);
    StagedDir stage(final_dir);

    std::vector<UnitResult> results(plan.units.size());
    std::vector<std::exception_ptr> errors(plan.units.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.units.size(); i = next++) {
            try {
                results[i] = execute(cfg, plan.units[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(plan.units.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    RunSummary summary;
    Json runs = Json::array();
    Json all_checks = Json::object();
    for (std::size_t i = 0; i < plan.units.size(); ++i) {
        for (const auto& [rel, text] : results[i].files)
            write_text(stage.path() / rel, text);
        Json run = {{"seed", plan.units[i].seed}, {"metrics", results[i].metrics}, {"checks", results[i].checks}};
        if (!plan.units[i].point.empty())
            run["point"] = plan.units[i].point;
        runs.push_back(run);
        for (auto it = results[i].checks.begin(); it != results[i].checks.end(); ++it) {
            bool ok = it.value().get<bool>();
            all_checks[it.key()] = all_checks.value(it.key(), true) && ok;
            summary.bounds_ok = summary.bounds_ok && ok;
        }
    }
    if (!plan.aggregate_header.empty()) {
        CsvTable agg(plan.aggregate_header);
        for (const auto& r : results)
            agg.add_cells(r.aggregate_row);
        agg.write(stage.path() / "aggregate.csv");
    }
    summary.json = {{"schema_version", 1},
                    {"name", cfg.name},
                    {"kind", kind_name(cfg.kind)},
                    {"config_hash", cfg.hash},
                    {"seeds", cfg.seeds},
                    {"runs", runs},
                    {"aggregate", aggregate(plan.units, results)},
                    {"checks", all_checks},
                    {"bounds_ok", summary.bounds_ok}};
    write_json(stage.path() / "summary.json", summary.json);
    stage.commit();
    summary.output_dir = final_dir;
    return summary;
}

} // namespace

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt)
{
    std::filesystem::path root;
    if (opt.out_root) {
        root = *opt.out_root;
    } else {
        root = cfg.output_dir;
        const char* env = std::getenv(kOutputRootEnv);
        if (root.is_relative() && env && *env)
            root = std::filesystem::path(env) / root;
    }
    return root / cfg.name;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) { return execute_plan(cfg, opt, 1); }

RunSummary run_sweep(const ExperimentConfig& cfg, const RunOptions& opt)
{
    if (!is_grid_kind(cfg.kind))
        throw ConfigError("sweep needs a grid kind (etp_grid or bench_compare), got " + kind_name(cfg.kind));
    if (opt.jobs == 0)
        throw ConfigError("--jobs must be at least 1");
    return execute_plan(cfg, opt, opt.jobs);
}

} // namespace noiselab
