#include "noiselab/region_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

namespace {

double lower(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double upper(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double lower_inv(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

} // namespace

double truncated_standard_normal(double a, double b, double u)
{
    if (!(a < b))
        throw SpecError("empty truncation interval");
    if (a >= 0.0) {
        double qa = upper(a), qb = upper(b);
        double q = qa - u * (qa - qb);
        return std::clamp(-lower_inv(q), a, b);
    }
    double pa = lower(a), pb = lower(b);
    double p = pa + u * (pb - pa);
    return std::clamp(lower_inv(p), a, b);
}

RegionDraws sample_target_in_region(const RegionSpec& rs, std::size_t n, std::uint64_t seed, std::size_t burn_in,
                                    std::size_t thin)
{
    rs.validate();
    const DomainSpec& sp = rs.domain;
    const auto d = static_cast<Eigen::Index>(sp.dim());
    const double sigma = sp.sigma;
    const double rho = region_ball_radius(rs);

    const Vector center = sp.mu1 + sp.delta;
    const Vector v = sp.mu2 - sp.mu1;
    const double len = v.norm();
    const Vector vhat = v / len;
    // h_S(center + s vhat + w) < 0  <=>  s > t
    const double t = (center.dot(sp.mu1 - sp.mu2) - 0.5 * (sp.mu1.squaredNorm() - sp.mu2.squaredNorm())) / len;

    RegionDraws out;
    if (rho <= 0.0 || t >= rho) {
        out.empty = true;
        return out;
    }
    out.x.resize(static_cast<Eigen::Index>(n), d);
    out.y.resize(n);

    const double k = static_cast<double>(d - 1);
    double s = 0.5 * (std::max(t, -rho) + rho);
    double r = 0.0;
    int y = 1;

    Stream chain(seed, StreamTag::RegionChain, 0);
    auto step = [&] {
        double logit = (2.0 * s * len - len * len) / (2.0 * sigma * sigma);   // log p(-1)/p(+1)
        double p_minus = logit > 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
        y = chain.uniform() < p_minus ? -1 : 1;

        double mean = y == 1 ? 0.0 : len;
        double hi = std::sqrt(std::max(rho * rho - r * r, 0.0));
        double lo = std::max(t, -hi);
        if (lo < hi)
            s = mean + sigma * truncated_standard_normal((lo - mean) / sigma, (hi - mean) / sigma, chain.uniform());

        if (d > 1) {
            double cap = (rho * rho - s * s) / (sigma * sigma);
            if (cap > 0.0) {
                double pmax = boost::math::gamma_p(k / 2.0, cap / 2.0);
                double u = chain.uniform() * pmax;
                double q = u > 0.0 ? 2.0 * boost::math::gamma_p_inv(k / 2.0, u) : 0.0;
                r = sigma * std::sqrt(std::min(q, cap));
            } else {
                r = 0.0;
            }
        }
    };

    for (std::size_t i = 0; i < burn_in; ++i)
        step();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < std::max<std::size_t>(thin, 1); ++j)
            step();
        Stream dir(seed, StreamTag::RegionChain, i + 1);
        Vector w(d);
        for (Eigen::Index j = 0; j < d; ++j)
            w(j) = dir.normal();
        w -= w.dot(vhat) * vhat;
        double wn = w.norm();
        Vector x = center + s * vhat;
        if (wn > 0.0)
            x += (r / wn) * w;
        out.x.row(static_cast<Eigen::Index>(i)) = x.transpose();
        out.y[i] = y;
    }
    return out;
}

} // namespace noiselab
