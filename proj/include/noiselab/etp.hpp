#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "noiselab/domain.hpp"

namespace noiselab {

struct MarginData {
    NoisyDataset data;
    Vector mu;
};

// y uniform on {-1,+1}, x ~ N(y mu, sigma^2 I), labels flipped where y x.mu <= r.
// mu defaults to the first basis vector.
MarginData gen_margin_data(std::size_t n, std::size_t d, double sigma, double r, std::uint64_t seed,
                           std::optional<Vector> mu = std::nullopt);

// (1/2n) sum x_i (tanh(theta.x_i) - y~_i); with half_argument the tanh sees theta.x/2,
// which is the exact gradient of the usual mean logistic loss.
Vector logistic_grad(const Vector& theta, const NoisyDataset& data, bool half_argument = false);
// The loss whose gradient logistic_grad returns.
double logistic_loss(const Vector& theta, const NoisyDataset& data, bool half_argument = false);

struct KappaValue {
    double value = 1.0;
    bool empty = false;
};
KappaValue kappa(const NoisyDataset& data, const Vector& theta);

struct TraceRecord {
    std::size_t step;
    double alignment;
    double norm;
    double kappa_b;
    double loss;
    double acc_clean;
    double acc_noisy_fit;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    std::optional<std::size_t> stopping_t;
    std::optional<Vector> theta_at_t;
    bool empty_b = false;
    bool diverged = false;
};

struct GdOptions {
    double eta = 0.1;
    std::size_t max_steps = 500;
    bool half_argument = false;
    bool stop_at_t = false;
    double alignment_target = 0.1;
};

TrainTrace gd_train(const NoisyDataset& data, const Vector& mu, const GdOptions& opt);

double etp_g(double sigma, double r);
double etp_bound(double sigma, double r);
double expected_noisy_correlation(double sigma, double r);
double etp_b0(double sigma, double r);

struct AlignmentCheck {
    bool holds;
    double cosine;
    double threshold;
};
AlignmentCheck alignment_bound_check(const TrainTrace& trace, const Vector& mu, double sigma, double r);

} // namespace noiselab
