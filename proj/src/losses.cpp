#include "noiselab/losses.hpp"

#include <cmath>
#include <numeric>

#include "noiselab/error.hpp"

namespace noiselab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double flog(double p) { return std::log(std::max(p, kProbFloor)); }
double finv(double p) { return 1.0 / std::max(p, kProbFloor); }
double xlogx(double p) { return p <= 0.0 ? 0.0 : p * flog(p); }

void check_probs(const Probs& p, int label)
{
    if (p.size() < 2)
        throw DimensionError("probability vector needs at least two classes");
    if (label < 0 || label >= p.size())
        throw SpecError("label " + std::to_string(label) + " outside [0, " + std::to_string(p.size()) + ")");
    if (!p.allFinite())
        throw SpecError("non-finite probability");
}

} // namespace

void LossSpec::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw SpecError("loss weight lambda must be a nonnegative finite number");
    std::visit(overloaded{
                   [](const ReverseCrossEntropy& s) {
                       if (!(s.log_zero < 0.0))
                           throw SpecError("RCE log-zero clip must be negative");
                   },
                   [](const GeneralizedCrossEntropy& s) {
                       if (!(s.q > 0.0 && s.q <= 1.0))
                           throw SpecError("GCE q must lie in (0, 1]");
                   },
                   [](const SymmetricCrossEntropy& s) {
                       if (!(s.alpha >= 0.0 && s.beta >= 0.0) || !(s.log_zero < 0.0))
                           throw SpecError("SL needs alpha, beta >= 0 and a negative log-zero clip");
                   },
                   [](const JensenShannon& s) {
                       if (s.weights.size() < 2)
                           throw SpecError("GJS needs at least two distributions");
                       double total = 0.0;
                       for (double w : s.weights) {
                           if (!(w > 0.0))
                               throw SpecError("GJS weights must be positive");
                           total += w;
                       }
                       if (std::abs(total - 1.0) > 1e-9)
                           throw SpecError("GJS weights must sum to 1");
                       if (!(s.perturb_sigma >= 0.0))
                           throw SpecError("GJS perturbation scale must be nonnegative");
                   },
                   [](const Normalized& s) {
                       if (!s.inner)
                           throw SpecError("normalized loss needs an inner loss");
                       s.inner->validate();
                   },
                   [](const auto&) {},
               },
               kind);
}

std::string LossSpec::name() const
{
    return std::visit(overloaded{
                          [](const CrossEntropy&) -> std::string { return "ce"; },
                          [](const MeanAbsolute&) -> std::string { return "mae"; },
                          [](const ReverseCrossEntropy&) -> std::string { return "rce"; },
                          [](const GeneralizedCrossEntropy&) -> std::string { return "gce"; },
                          [](const SymmetricCrossEntropy&) -> std::string { return "sl"; },
                          [](const JensenShannon&) -> std::string { return "gjs"; },
                          [](const Normalized& s) -> std::string { return "normalized_" + s.inner->name(); },
                          [](const SelfRegularization&) -> std::string { return "sr"; },
                      },
                      kind);
}

LossSpec normalized(LossSpec inner)
{
    LossSpec out;
    out.kind = Normalized{std::make_shared<const LossSpec>(std::move(inner))};
    return out;
}

double gjs_value(const JensenShannon& spec, int label, std::span<const Probs> preds)
{
    const std::size_t m = spec.weights.size();
    if (preds.size() != m - 1)
        throw DimensionError("GJS expects " + std::to_string(m - 1) + " predictions");
    const double pi1 = spec.weights[0];
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(preds[0].size());
    mix(label) += pi1;
    double entropy_part = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        mix += spec.weights[j] * preds[j - 1];
        for (Eigen::Index k = 0; k < preds[j - 1].size(); ++k)
            entropy_part += spec.weights[j] * xlogx(preds[j - 1](k));
    }
    double cross = 0.0;
    for (Eigen::Index k = 0; k < mix.size(); ++k)
        cross += xlogx(mix(k));
    double z = -(1.0 - pi1) * std::log(1.0 - pi1);
    return (entropy_part - cross) / z;
}

std::vector<Eigen::VectorXd> gjs_grads(const JensenShannon& spec, int label, std::span<const Probs> preds)
{
    const std::size_t m = spec.weights.size();
    if (preds.size() != m - 1)
        throw DimensionError("GJS expects " + std::to_string(m - 1) + " predictions");
    const double pi1 = spec.weights[0];
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(preds[0].size());
    mix(label) += pi1;
    for (std::size_t j = 1; j < m; ++j)
        mix += spec.weights[j] * preds[j - 1];
    double z = -(1.0 - pi1) * std::log(1.0 - pi1);
    std::vector<Eigen::VectorXd> out;
    for (std::size_t j = 1; j < m; ++j) {
        Eigen::VectorXd g(mix.size());
        for (Eigen::Index k = 0; k < mix.size(); ++k)
            g(k) = spec.weights[j] * (flog(preds[j - 1](k)) - flog(mix(k))) / z;
        out.push_back(std::move(g));
    }
    return out;
}

double self_regularization_value(const Probs& p, const Probs& yhat) { return -yhat.dot(p); }

double loss_value(const LossSpec& spec, const Probs& p, int label)
{
    check_probs(p, label);
    const double py = p(label);
    return std::visit(overloaded{
                          [&](const CrossEntropy&) { return -flog(py); },
                          [&](const MeanAbsolute&) {
                              double s = 0.0;
                              for (Eigen::Index k = 0; k < p.size(); ++k)
                                  s += std::abs((k == label ? 1.0 : 0.0) - p(k));
                              return s;
                          },
                          [&](const ReverseCrossEntropy& s) { return -s.log_zero * (p.sum() - py); },
                          [&](const GeneralizedCrossEntropy& s) {
                              return (1.0 - std::pow(std::max(py, kProbFloor), s.q)) / s.q;
                          },
                          [&](const SymmetricCrossEntropy& s) {
                              return s.alpha * -flog(py) + s.beta * -s.log_zero * (p.sum() - py);
                          },
                          [&](const JensenShannon& s) {
                              std::vector<Probs> copies(s.weights.size() - 1, p);
                              return gjs_value(s, label, copies);
                          },
                          [&](const Normalized& s) {
                              double denom = symmetry_sum(*s.inner, p);
                              return loss_value(*s.inner, p, label) / denom;
                          },
                          [&](const SelfRegularization&) { return -p.squaredNorm(); },
                      },
                      spec.kind);
}

Eigen::VectorXd loss_grad(const LossSpec& spec, const Probs& p, int label)
{
    check_probs(p, label);
    const Eigen::Index K = p.size();
    const double py = p(label);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(K);
    std::visit(overloaded{
                   [&](const CrossEntropy&) { g(label) = -finv(py); },
                   [&](const MeanAbsolute&) {
                       // one-sided at p_k = 0 (k != y): +1; at p_y = 1: -1
                       g.setOnes();
                       g(label) = -1.0;
                   },
                   [&](const ReverseCrossEntropy& s) {
                       g.setConstant(-s.log_zero);
                       g(label) = 0.0;
                   },
                   [&](const GeneralizedCrossEntropy& s) {
                       g(label) = -std::pow(std::max(py, kProbFloor), s.q - 1.0);
                   },
                   [&](const SymmetricCrossEntropy& s) {
                       g.setConstant(-s.beta * s.log_zero);
                       g(label) = -s.alpha * finv(py);
                   },
                   [&](const JensenShannon& s) {
                       std::vector<Probs> copies(s.weights.size() - 1, p);
                       for (const auto& gj : gjs_grads(s, label, copies))
                           g += gj;
                   },
                   [&](const Normalized& s) {
                       double num = loss_value(*s.inner, p, label);
                       double den = 0.0;
                       Eigen::VectorXd dden = Eigen::VectorXd::Zero(K);
                       for (int k = 0; k < K; ++k) {
                           den += loss_value(*s.inner, p, k);
                           dden += loss_grad(*s.inner, p, k);
                       }
                       g = (loss_grad(*s.inner, p, label) * den - num * dden) / (den * den);
                   },
                   [&](const SelfRegularization&) { g = -p; },
               },
               spec.kind);
    return g;
}

double symmetry_sum(const LossSpec& spec, const Probs& p)
{
    double s = 0.0;
    for (int k = 0; k < p.size(); ++k)
        s += loss_value(spec, p, k);
    return s;
}

ElrState::ElrState(std::size_t n, int num_classes, double beta)
    : targets_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), num_classes)), beta_(beta)
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw SpecError("ELR beta must lie in [0, 1]");
}

void ElrState::check(std::size_t index, const Probs& p) const
{
    if (index >= size())
        throw SpecError("ELR index " + std::to_string(index) + " out of range");
    if (p.size() != targets_.cols())
        throw DimensionError("ELR prediction has the wrong class count");
}

void ElrState::update(std::size_t index, const Probs& p)
{
    check(index, p);
    auto row = targets_.row(static_cast<Eigen::Index>(index));
    row = beta_ * row + (1.0 - beta_) * p.transpose();
}

PenaltyValue ElrState::penalty(std::size_t index, const Probs& p) const
{
    check(index, p);
    Eigen::VectorXd ybar = targets_.row(static_cast<Eigen::Index>(index)).transpose();
    double arg = 1.0 - ybar.dot(p);
    PenaltyValue out;
    if (arg < kProbFloor) {
        arg = kProbFloor;
        out.clamped = true;
    }
    out.value = std::log(arg);
    out.grad = -ybar / arg;
    return out;
}

CompositeObjective::CompositeObjective(LossSpec base, ElrState* elr, double lambda)
    : base_(std::move(base)), elr_(elr), lambda_(lambda)
{
    base_.validate();
    if (!(lambda >= 0.0))
        throw SpecError("ELR weight must be nonnegative");
}

PenaltyValue CompositeObjective::evaluate(std::size_t index, const Probs& p, int label) const
{
    PenaltyValue out;
    out.value = loss_value(base_, p, label);
    out.grad = loss_grad(base_, p, label);
    if (elr_ && lambda_ > 0.0) {
        PenaltyValue pen = elr_->penalty(index, p);
        out.value += lambda_ * pen.value;
        out.grad += lambda_ * pen.grad;
        out.clamped = pen.clamped;
    }
    return out;
}

Eigen::VectorXd softmax_pullback(const Probs& p, const Eigen::VectorXd& grad_p)
{
    return p.cwiseProduct(grad_p.array().matrix() - Eigen::VectorXd::Constant(p.size(), grad_p.dot(p)));
}

Probs softmax(const Eigen::VectorXd& logits)
{
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

} // namespace noiselab
