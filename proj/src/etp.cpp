#include "noiselab/etp.hpp"

#include <cmath>
#include <numbers>

#include "noiselab/error.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

MarginData gen_margin_data(std::size_t n, std::size_t d, double sigma, double r, std::uint64_t seed,
                           std::optional<Vector> mu)
{
    if (n == 0 || d == 0)
        throw SpecError("sample count and dimension must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw SpecError("sigma must be positive");
    if (!(r < 1.0))
        throw SpecError("margin threshold r must be < 1 so at most half the samples are mislabeled");
    Vector m = mu ? *mu : Vector::Unit(static_cast<Eigen::Index>(d), 0);
    if (static_cast<std::size_t>(m.size()) != d)
        throw DimensionError("mu dimension differs from d");

    NoisyDataset data;
    data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    data.clean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream s(seed, StreamTag::MarginData, i);
        int y = s.uniform() < 0.5 ? 1 : -1;
        auto row = data.x.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index j = 0; j < row.size(); ++j)
            row(j) = y * m(j) + sigma * s.normal();
        data.clean[i] = y;
    }
    data.noisy = data.clean;
    data.flipped.assign(n, false);
    return {flip_margin(std::move(data), m, r), m};
}

namespace {

Eigen::VectorXd noisy_labels(const NoisyDataset& data)
{
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = data.noisy[i];
    return y;
}

void require_signed(const NoisyDataset& data)
{
    if (data.kind != LabelKind::Signed)
        throw SpecError("logistic dynamics need signed binary labels");
}

// log(1 + exp(-m)) without overflow
double softplus_neg(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

} // namespace

Vector logistic_grad(const Vector& theta, const NoisyDataset& data, bool half_argument)
{
    require_signed(data);
    if (theta.size() != data.x.cols())
        throw DimensionError("theta dimension differs from data");
    Eigen::VectorXd z = data.x * theta;
    if (half_argument)
        z *= 0.5;
    Eigen::VectorXd resid = z.array().tanh().matrix() - noisy_labels(data);
    return data.x.transpose() * resid / (2.0 * static_cast<double>(data.size()));
}

double logistic_loss(const Vector& theta, const NoisyDataset& data, bool half_argument)
{
    require_signed(data);
    Eigen::VectorXd z = data.x * theta;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double m = data.noisy[i] * z(static_cast<Eigen::Index>(i));
        total += half_argument ? softplus_neg(m) : 0.5 * softplus_neg(2.0 * m);
    }
    return total / static_cast<double>(data.size());
}

KappaValue kappa(const NoisyDataset& data, const Vector& theta)
{
    std::size_t hits = 0, count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.flipped[i])
            continue;
        ++count;
        hits += label_from_score(data.x.row(static_cast<Eigen::Index>(i)).dot(theta)) == data.clean[i];
    }
    if (count == 0)
        return {1.0, true};
    return {static_cast<double>(hits) / static_cast<double>(count), false};
}

namespace {

TraceRecord snapshot(std::size_t t, const NoisyDataset& data, const Vector& theta, const Vector& mu, bool half)
{
    Eigen::VectorXd z = data.x * theta;
    std::size_t clean_hits = 0, noisy_hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        int pred = label_from_score(z(static_cast<Eigen::Index>(i)));
        clean_hits += pred == data.clean[i];
        noisy_hits += pred == data.noisy[i];
    }
    double n = static_cast<double>(data.size());
    return {t,
            theta.dot(mu),
            theta.norm(),
            kappa(data, theta).value,
            logistic_loss(theta, data, half),
            static_cast<double>(clean_hits) / n,
            static_cast<double>(noisy_hits) / n};
}

} // namespace

TrainTrace gd_train(const NoisyDataset& data, const Vector& mu, const GdOptions& opt)
{
    require_signed(data);
    if (!(opt.eta > 0.0))
        throw SpecError("learning rate must be positive");
    if (mu.size() != data.x.cols())
        throw DimensionError("mu dimension differs from data");

    TrainTrace trace;
    trace.empty_b = kappa(data, Vector::Zero(mu.size())).empty;
    Vector theta = Vector::Zero(mu.size());
    trace.records.push_back(snapshot(0, data, theta, mu, opt.half_argument));
    for (std::size_t t = 1; t <= opt.max_steps; ++t) {
        theta -= opt.eta * logistic_grad(theta, data, opt.half_argument);
        if (!theta.allFinite() || theta.norm() > 1e6) {
            trace.diverged = true;
            break;
        }
        trace.records.push_back(snapshot(t, data, theta, mu, opt.half_argument));
        if (!trace.stopping_t && theta.dot(mu) >= opt.alignment_target) {
            trace.stopping_t = t;
            trace.theta_at_t = theta;
            if (opt.stop_at_t)
                break;
        }
    }
    return trace;
}

double etp_g(double sigma, double r)
{
    if (!(sigma > 0.0))
        throw SpecError("sigma must be positive");
    double a = std::erf((1.0 - r) / (std::numbers::sqrt2 * sigma)) / (2.0 * (1.0 + 2.0 * sigma) * sigma);
    double b = std::exp(-(r - 1.0) * (r - 1.0) / (2.0 * sigma * sigma)) /
               (std::sqrt(2.0 * std::numbers::pi) * (1.0 + 2.0 * sigma));
    return a + b;
}

double etp_bound(double sigma, double r)
{
    if (!(r < 1.0))
        throw SpecError("margin threshold r must be < 1");
    double g = etp_g(sigma, r);
    return 1.0 - std::exp(-g * g / 200.0);
}

double expected_noisy_correlation(double sigma, double r)
{
    if (!(sigma > 0.0))
        throw SpecError("sigma must be positive");
    if (std::isinf(r) && r < 0)
        return 1.0;
    return std::erf((1.0 - r) / (std::numbers::sqrt2 * sigma)) +
           2.0 * sigma / std::sqrt(2.0 * std::numbers::pi) * std::exp(-(r - 1.0) * (r - 1.0) / (2.0 * sigma * sigma));
}

double etp_b0(double sigma, double r) { return 0.5 * expected_noisy_correlation(sigma, r); }

AlignmentCheck alignment_bound_check(const TrainTrace& trace, const Vector& mu, double sigma, double r)
{
    if (!trace.theta_at_t)
        throw SpecError("trace has no stopping time");
    const Vector& th = *trace.theta_at_t;
    double cosine = th.dot(mu) / (th.norm() * mu.norm());
    double threshold = etp_b0(sigma, r) / (10.0 * (1.0 + 2.0 * sigma));
    return {cosine >= threshold, cosine, threshold};
}

} // namespace noiselab
