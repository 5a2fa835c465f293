#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace noiselab {

using Probs = Eigen::VectorXd;

inline constexpr double kProbFloor = 1e-7;

struct CrossEntropy {};
struct MeanAbsolute {};
struct ReverseCrossEntropy {
    double log_zero = -4.0;   // A: value substituted for log 0 in the one-hot target
};
struct GeneralizedCrossEntropy {
    double q = 0.7;
};
struct SymmetricCrossEntropy {
    double alpha = 0.1;
    double beta = 1.0;
    double log_zero = -4.0;
};
struct JensenShannon {
    std::vector<double> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};   // pi_1 belongs to the label
    double perturb_sigma = 0.1;                                // relative to the data sigma
};
struct LossSpec;
struct Normalized {
    std::shared_ptr<const LossSpec> inner;
};
struct SelfRegularization {};

struct LossSpec {
    std::variant<CrossEntropy, MeanAbsolute, ReverseCrossEntropy, GeneralizedCrossEntropy, SymmetricCrossEntropy,
                 JensenShannon, Normalized, SelfRegularization>
        kind;
    double lambda = 1.0;

    void validate() const;
    std::string name() const;
};

LossSpec normalized(LossSpec inner);

// Losses are defined on all of R^K_+ so finite differences make sense off the simplex:
// MAE = sum_k |e_y,k - p_k|, RCE = -A sum_{k != y} p_k. Both reduce to the usual forms on the simplex.
// Every log uses max(p, kProbFloor); below the floor the log-derivative saturates at 1/kProbFloor.
double loss_value(const LossSpec& spec, const Probs& p, int label);
Eigen::VectorXd loss_grad(const LossSpec& spec, const Probs& p, int label);
double symmetry_sum(const LossSpec& spec, const Probs& p);

// Divergence among the one-hot label and M-1 predictions, divided by -(1-pi_1) log(1-pi_1).
// With a single Probs, the predictions all equal p.
double gjs_value(const JensenShannon& spec, int label, std::span<const Probs> preds);
std::vector<Eigen::VectorXd> gjs_grads(const JensenShannon& spec, int label, std::span<const Probs> preds);

// -yhat.p with yhat held fixed.
double self_regularization_value(const Probs& p, const Probs& yhat);

struct PenaltyValue {
    double value = 0.0;
    Eigen::VectorXd grad;
    bool clamped = false;
};

class ElrState {
public:
    ElrState(std::size_t n, int num_classes, double beta);

    void update(std::size_t index, const Probs& p);
    // log(1 - ybar.p), argument floored at kProbFloor
    PenaltyValue penalty(std::size_t index, const Probs& p) const;

    const Eigen::MatrixXd& targets() const { return targets_; }
    double beta() const { return beta_; }
    std::size_t size() const { return static_cast<std::size_t>(targets_.rows()); }

private:
    void check(std::size_t index, const Probs& p) const;

    Eigen::MatrixXd targets_;
    double beta_;
};

class CompositeObjective {
public:
    explicit CompositeObjective(LossSpec base, ElrState* elr = nullptr, double lambda = 0.0);

    PenaltyValue evaluate(std::size_t index, const Probs& p, int label) const;
    const LossSpec& base() const { return base_; }

private:
    LossSpec base_;
    ElrState* elr_;
    double lambda_;
};

// Chain rule through softmax: dL/dz = P o (g - g.P).
Eigen::VectorXd softmax_pullback(const Probs& p, const Eigen::VectorXd& grad_p);
Probs softmax(const Eigen::VectorXd& logits);

} // namespace noiselab
