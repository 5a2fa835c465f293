#include "noiselab/noise.hpp"

#include <cmath>
#include <string>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

void RegionSpec::validate() const
{
    domain.validate();
    if (!(delta_conf > 0.0 && delta_conf < 1.0))
        throw SpecError("region confidence delta must lie in (0, 1)");
}

NoisyDataset annotate_with_source(NoisyDataset data, const DomainSpec& spec)
{
    spec.validate();
    if (data.dim() != spec.dim())
        throw DimensionError("dataset dimension " + std::to_string(data.dim()) + " differs from domain dimension " +
                             std::to_string(spec.dim()));
    if (data.kind != LabelKind::Signed)
        throw SpecError("source annotation needs signed binary labels");
    for (std::size_t i = 0; i < data.size(); ++i)
        data.noisy[i] = label_from_score(source_score(spec, data.x.row(static_cast<Eigen::Index>(i)).transpose()));
    data.sync_flipped();
    return data;
}

NoisyDataset flip_margin(NoisyDataset data, VectorRef mu, double r)
{
    if (std::abs(mu.norm() - 1.0) > 1e-9)
        throw SpecError("margin direction must be a unit vector");
    if (static_cast<std::size_t>(mu.size()) != data.dim())
        throw DimensionError("margin direction dimension differs from data");
    if (data.kind != LabelKind::Signed)
        throw SpecError("margin flipping needs signed binary labels");
    if (std::isnan(r))
        throw SpecError("margin threshold is NaN");
    for (std::size_t i = 0; i < data.size(); ++i) {
        int y = data.clean[i];
        double margin = y * data.x.row(static_cast<Eigen::Index>(i)).dot(mu.transpose());
        data.noisy[i] = margin > r ? y : -y;
    }
    data.sync_flipped();
    return data;
}

namespace {

int other_class(const NoisyDataset& data, int avoid, Stream& s)
{
    if (data.kind == LabelKind::Signed)
        return -avoid;
    int k = static_cast<int>(s.below(static_cast<std::uint64_t>(data.num_classes - 1)));
    return k >= avoid ? k + 1 : k;
}

} // namespace

NoisyDataset flip_symmetric(NoisyDataset data, double eta, int num_classes, std::uint64_t seed)
{
    if (num_classes < 2)
        throw SpecError("symmetric noise needs at least two classes");
    if (num_classes != data.num_classes)
        throw SpecError("class count " + std::to_string(num_classes) + " differs from dataset's " +
                        std::to_string(data.num_classes));
    double bound = 1.0 - 1.0 / num_classes;
    if (!(eta >= 0.0 && eta < bound))
        throw SpecError("symmetric noise rate must lie in [0, " + std::to_string(bound) + ")");
    for (std::size_t i = 0; i < data.size(); ++i) {
        Stream s(seed, StreamTag::SymmetricFlip, i);
        data.noisy[i] = s.uniform() < eta ? other_class(data, data.clean[i], s) : data.clean[i];
    }
    data.sync_flipped();
    return data;
}

NoisyDataset match_noise_rate(NoisyDataset data, std::uint64_t seed)
{
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.noisy[i] == data.clean[i])
            continue;
        Stream s(seed, StreamTag::SymmetricFlip, i);
        data.noisy[i] = other_class(data, data.noisy[i], s);
    }
    data.sync_flipped();
    return data;
}

double region_ball_radius(const RegionSpec& rs)
{
    rs.validate();
    double d = static_cast<double>(rs.domain.dim());
    double sd = std::sqrt(d);
    return rs.domain.sigma * (sd / 2.0 - std::log((1.0 - rs.delta_conf) / rs.delta_conf) / sd);
}

double region_alpha_threshold(const RegionSpec& rs)
{
    rs.validate();
    return std::log((1.0 - rs.delta_conf) / rs.delta_conf) / static_cast<double>(rs.domain.dim());
}

bool region_nonempty_condition(const RegionSpec& rs)
{
    return shift_projection(rs.domain).alpha > region_alpha_threshold(rs);
}

RegionMembership region_membership(VectorRef x, const RegionSpec& rs)
{
    double radius = region_ball_radius(rs);
    RegionMembership m;
    m.in_r2 = source_score(rs.domain, x) < 0.0;
    if (radius <= 0.0) {
        m.structurally_empty = true;
        return m;
    }
    m.in_r1 = (x - rs.domain.mu1 - rs.domain.delta).norm() <= radius;
    m.in_r = m.in_r1 && m.in_r2;
    return m;
}

bool region_halfspace_axis(VectorRef x, const RegionSpec& rs)
{
    rs.validate();
    if (static_cast<std::size_t>(x.size()) != rs.domain.dim())
        throw DimensionError("point dimension differs from domain");
    double d = static_cast<double>(rs.domain.dim());
    return x.sum() > (rs.domain.sigma * d + 2.0 * rs.domain.mu1.sum()) / 2.0;
}

void mark_region(NoisyDataset& data, const RegionSpec& rs)
{
    std::vector<bool> mask(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        mask[i] = region_membership(data.x.row(static_cast<Eigen::Index>(i)).transpose(), rs).in_r;
    data.in_region = std::move(mask);
}

double log_posterior_ratio(VectorRef x, const DomainSpec& spec)
{
    return target_score(spec, x);
}

double posterior_true_class(VectorRef x, const DomainSpec& spec)
{
    // equal priors: Pr[+1|x] = 1/(1 + exp(-h_T(x)))
    double h = target_score(spec, x);
    if (h >= 0.0)
        return 1.0 / (1.0 + std::exp(-h));
    double e = std::exp(h);
    return e / (1.0 + e);
}

} // namespace noiselab
