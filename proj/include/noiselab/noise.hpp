#pragma once

#include <cstdint>

#include "noiselab/domain.hpp"

namespace noiselab {

struct RegionSpec {
    DomainSpec domain;
    double delta_conf = 0.01;

    void validate() const;
};

struct RegionMembership {
    bool in_r = false;
    bool in_r1 = false;
    bool in_r2 = false;
    bool structurally_empty = false;   // ball radius <= 0
};

NoisyDataset annotate_with_source(NoisyDataset data, const DomainSpec& spec);
// Flips exactly the samples whose margin y x.mu is <= r. r = -inf flips nothing.
NoisyDataset flip_margin(NoisyDataset data, VectorRef mu, double r);
NoisyDataset flip_symmetric(NoisyDataset data, double eta, int num_classes, std::uint64_t seed);
// Samples mislabeled so far get a fresh label drawn uniformly from the classes other than
// their current (noisy) label; some land back on the true class.
NoisyDataset match_noise_rate(NoisyDataset data, std::uint64_t seed);

double region_ball_radius(const RegionSpec& rs);
double region_alpha_threshold(const RegionSpec& rs);   // log((1-delta)/delta)/d
bool region_nonempty_condition(const RegionSpec& rs);
RegionMembership region_membership(VectorRef x, const RegionSpec& rs);
// Half-space x.1 > (sigma d + 2 mu1.1)/2; equals h_S(x) < 0 when mu2 = mu1 + sigma 1.
bool region_halfspace_axis(VectorRef x, const RegionSpec& rs);
void mark_region(NoisyDataset& data, const RegionSpec& rs);

double posterior_true_class(VectorRef x, const DomainSpec& spec);
double log_posterior_ratio(VectorRef x, const DomainSpec& spec);   // log p(x|+1)/p(x|-1), target

} // namespace noiselab
