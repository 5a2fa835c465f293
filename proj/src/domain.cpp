#include "noiselab/domain.hpp"

#include <cmath>
#include <string>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"
#include "noiselab/special.hpp"

namespace noiselab {

void DomainSpec::validate() const
{
    if (mu1.size() == 0)
        throw SpecError("domain dimension must be positive");
    if (mu2.size() != mu1.size() || delta.size() != mu1.size())
        throw SpecError("mu1, mu2 and delta must share one dimension (got " + std::to_string(mu1.size()) + ", " +
                        std::to_string(mu2.size()) + ", " + std::to_string(delta.size()) + ")");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw SpecError("sigma must be positive and finite");
    if (!mu1.allFinite() || !mu2.allFinite() || !delta.allFinite())
        throw SpecError("means and shift must be finite");
    if ((mu2 - mu1).squaredNorm() == 0.0)
        throw SpecError("component means coincide");
}

double NoisyDataset::noise_rate() const
{
    if (clean.empty())
        return 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < clean.size(); ++i)
        k += clean[i] != noisy[i];
    return static_cast<double>(k) / static_cast<double>(clean.size());
}

void NoisyDataset::sync_flipped()
{
    flipped.assign(clean.size(), false);
    for (std::size_t i = 0; i < clean.size(); ++i)
        flipped[i] = clean[i] != noisy[i];
}

void NoisyDataset::validate() const
{
    const std::size_t n = clean.size();
    if (noisy.size() != n || flipped.size() != n || static_cast<std::size_t>(x.rows()) != n)
        throw DimensionError("dataset arrays disagree on sample count");
    if (in_region && in_region->size() != n)
        throw DimensionError("region mask length differs from sample count");
    for (std::size_t i = 0; i < n; ++i) {
        if (flipped[i] != (clean[i] != noisy[i]))
            throw SpecError("noise mask out of sync at sample " + std::to_string(i));
        for (int y : {clean[i], noisy[i]}) {
            bool ok = kind == LabelKind::Signed ? (y == 1 || y == -1) : (y >= 0 && y < num_classes);
            if (!ok)
                throw SpecError("label outside label set at sample " + std::to_string(i));
        }
    }
}

NoisyDataset sample_domain(const DomainSpec& spec, Domain which, std::size_t n, std::uint64_t seed)
{
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.dim());
    Vector m1 = spec.mu1, m2 = spec.mu2;
    StreamTag tag = StreamTag::SourceSample;
    if (which == Domain::Target) {
        m1 += spec.delta;
        m2 += spec.delta;
        tag = StreamTag::TargetSample;
    }
    NoisyDataset out;
    out.x.resize(static_cast<Eigen::Index>(n), d);
    out.clean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream s(seed, tag, i);
        int y = s.uniform() < 0.5 ? 1 : -1;
        const Vector& m = y == 1 ? m1 : m2;
        auto row = out.x.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index j = 0; j < d; ++j)
            row(j) = m(j) + spec.sigma * s.normal();
        out.clean[i] = y;
    }
    out.noisy = out.clean;
    out.flipped.assign(n, false);
    return out;
}

namespace {

void check_dim(const DomainSpec& spec, VectorRef x)
{
    if (static_cast<std::size_t>(x.size()) != spec.dim())
        throw DimensionError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                             std::to_string(spec.dim()));
}

double linear_score(const Vector& a, const Vector& b, double sigma, VectorRef x)
{
    double s2 = sigma * sigma;
    return x.dot(a - b) / s2 - (a.squaredNorm() - b.squaredNorm()) / (2.0 * s2);
}

} // namespace

double source_score(const DomainSpec& spec, VectorRef x)
{
    check_dim(spec, x);
    return linear_score(spec.mu1, spec.mu2, spec.sigma, x);
}

double target_score(const DomainSpec& spec, VectorRef x)
{
    check_dim(spec, x);
    return linear_score(spec.mu1 + spec.delta, spec.mu2 + spec.delta, spec.sigma, x);
}

ShiftProjection shift_projection(const DomainSpec& spec)
{
    spec.validate();
    Vector v = spec.mu2 - spec.mu1;
    double alpha = spec.delta.dot(v) / v.squaredNorm();
    return {alpha, alpha * v};
}

double mislabel_rate(const DomainSpec& spec)
{
    auto [alpha, c] = shift_projection(spec);
    double len = (spec.mu2 - spec.mu1).norm();
    double d1 = (0.5 - alpha) * len;
    double d2 = (0.5 + alpha) * len;
    return 0.5 * normal_cdf(-d1 / spec.sigma) + 0.5 * normal_cdf(-d2 / spec.sigma);
}

double mislabel_rate_norm_form(const DomainSpec& spec)
{
    auto [alpha, c] = shift_projection(spec);
    Vector half = 0.5 * (spec.mu2 - spec.mu1);
    double gap = half.norm() - c.norm();
    double sgn = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    double d1 = (half - c).norm() * sgn;
    double d2 = (half + c).norm();
    return 0.5 * normal_cdf(-d1 / spec.sigma) + 0.5 * normal_cdf(-d2 / spec.sigma);
}

MonteCarloEstimate mislabel_rate_monte_carlo(const DomainSpec& spec, std::size_t n, std::uint64_t seed)
{
    spec.validate();
    if (n == 0)
        throw SpecError("Monte Carlo sample count must be positive");
    const auto d = static_cast<Eigen::Index>(spec.dim());
    const Vector m1 = spec.mu1 + spec.delta;
    const Vector m2 = spec.mu2 + spec.delta;
    // h_S(x) = w.x + b with w = (mu1-mu2)/s^2
    const double s2 = spec.sigma * spec.sigma;
    const Vector w = (spec.mu1 - spec.mu2) / s2;
    const double b = -(spec.mu1.squaredNorm() - spec.mu2.squaredNorm()) / (2.0 * s2);
    const double base1 = w.dot(m1) + b;
    const double base2 = w.dot(m2) + b;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Stream s(seed, StreamTag::TargetSample, i);
        int y = s.uniform() < 0.5 ? 1 : -1;
        double h = y == 1 ? base1 : base2;
        for (Eigen::Index j = 0; j < d; ++j)
            h += w(j) * spec.sigma * s.normal();
        wrong += label_from_score(h) != y;
    }
    double p = static_cast<double>(wrong) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

double source_bayes_error(const DomainSpec& spec)
{
    spec.validate();
    return normal_cdf(-(spec.mu2 - spec.mu1).norm() / (2.0 * spec.sigma));
}

} // namespace noiselab
