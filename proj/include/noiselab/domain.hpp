#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace noiselab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// Two isotropic Gaussian components; the target domain shifts both means by delta.
// Component 1 carries label +1, component 2 carries label -1.
struct DomainSpec {
    Vector mu1;
    Vector mu2;
    Vector delta;
    double sigma = 1.0;

    std::size_t dim() const { return static_cast<std::size_t>(mu1.size()); }
    void validate() const;
};

enum class Domain { Source, Target };
enum class LabelKind { Signed, Multiclass };

struct NoisyDataset {
    Matrix x;
    std::vector<int> clean;
    std::vector<int> noisy;
    std::vector<bool> flipped;
    LabelKind kind = LabelKind::Signed;
    int num_classes = 2;
    std::optional<std::vector<bool>> in_region;

    std::size_t size() const { return clean.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
    double noise_rate() const;
    void sync_flipped();
    void validate() const;
};

struct ShiftProjection {
    double alpha;
    Vector c;
};

struct MonteCarloEstimate {
    double estimate;
    double std_error;
};

NoisyDataset sample_domain(const DomainSpec& spec, Domain which, std::size_t n, std::uint64_t seed);

double source_score(const DomainSpec& spec, VectorRef x);
double target_score(const DomainSpec& spec, VectorRef x);
inline int label_from_score(double score) { return score > 0.0 ? 1 : -1; }

ShiftProjection shift_projection(const DomainSpec& spec);

// Signed-distance form: d1 = (1/2 - alpha)|mu2-mu1|, d2 = (1/2 + alpha)|mu2-mu1|.
double mislabel_rate(const DomainSpec& spec);
// d1 = |v/2 - c| sign(|v/2| - |c|), d2 = |v/2 + c|, taken verbatim; disagrees with the
// signed form (and with simulation) once alpha < -1/2.
double mislabel_rate_norm_form(const DomainSpec& spec);
MonteCarloEstimate mislabel_rate_monte_carlo(const DomainSpec& spec, std::size_t n, std::uint64_t seed);

double source_bayes_error(const DomainSpec& spec);

} // namespace noiselab
