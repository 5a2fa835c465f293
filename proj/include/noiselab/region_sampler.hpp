#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "noiselab/noise.hpp"

namespace noiselab {

// Draws (x, y) from the target joint law conditioned on x in R, where R is the ball around
// mu1 + delta intersected with {h_S < 0}. Plain rejection is hopeless in high dimension
// (the ball carries ~1e-19 of the mass at d = 100), so this runs a Gibbs chain on
// (y, s, |w|) with x = mu1 + delta + s v_hat + w, w orthogonal to v_hat = (mu2-mu1)/|mu2-mu1|.
struct RegionDraws {
    Matrix x;
    std::vector<int> y;
    bool empty = false;   // the ball misses the half-space or has no radius
};

RegionDraws sample_target_in_region(const RegionSpec& rs, std::size_t n, std::uint64_t seed,
                                    std::size_t burn_in = 1000, std::size_t thin = 4);

// Standard normal restricted to [a, b], by inversion on the better-conditioned tail.
double truncated_standard_normal(double a, double b, double u);

} // namespace noiselab
