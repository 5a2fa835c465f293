#include "noiselab/bench.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

SoftmaxModel::SoftmaxModel(int num_classes, std::size_t dim)
    : weights(Matrix::Zero(num_classes, static_cast<Eigen::Index>(dim))), bias(Eigen::VectorXd::Zero(num_classes))
{
}

Probs SoftmaxModel::predict(VectorRef x) const { return softmax(weights * x + bias); }

Matrix SoftmaxModel::predict_all(const Matrix& x) const
{
    Matrix z = x * weights.transpose();
    z.rowwise() += bias.transpose();
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double m = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - m).exp();
        z.row(i) /= z.row(i).sum();
    }
    return z;
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    int best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
        if (v(k) > v(best))
            best = static_cast<int>(k);
    return best;
}

double accuracy(const SoftmaxModel& model, const Matrix& x, const std::vector<int>& labels)
{
    if (labels.empty())
        return 0.0;
    Matrix z = x * model.weights.transpose();
    z.rowwise() += model.bias.transpose();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        hits += argmax(z.row(static_cast<Eigen::Index>(i)).transpose()) == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void GeometryConfig::validate() const
{
    if (num_classes < 2)
        throw SpecError("need at least two classes");
    if (dim < static_cast<std::size_t>(num_classes))
        throw DimensionError("dimension " + std::to_string(dim) + " is smaller than the class count " +
                             std::to_string(num_classes));
    if (!(sep > 0.0) || !(sigma > 0.0) || !(delta_scale >= 0.0))
        throw SpecError("sep and sigma must be positive, delta_scale nonnegative");
    if (shift_from == shift_to || shift_from < 0 || shift_to < 0 || shift_from >= num_classes ||
        shift_to >= num_classes)
        throw SpecError("shift direction needs two distinct valid classes");
    if (n_source == 0 || n_target == 0)
        throw SpecError("sample counts must be positive");
}

namespace {

NoisyDataset draw_classes(const Matrix& means, double sigma, const Vector& shift, std::size_t n, std::uint64_t seed,
                          StreamTag tag)
{
    const auto K = static_cast<int>(means.rows());
    const auto d = means.cols();
    NoisyDataset out;
    out.kind = LabelKind::Multiclass;
    out.num_classes = K;
    out.x.resize(static_cast<Eigen::Index>(n), d);
    out.clean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream s(seed, tag, i);
        int y = static_cast<int>(s.below(static_cast<std::uint64_t>(K)));
        auto row = out.x.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index j = 0; j < d; ++j)
            row(j) = means(y, j) + shift(j) + sigma * s.normal();
        out.clean[i] = y;
    }
    out.noisy = out.clean;
    out.flipped.assign(n, false);
    return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::size_t epoch)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Stream s(seed, StreamTag::Shuffle, epoch);
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[s.below(i)]);
    return perm;
}

bool finite_and_bounded(const SoftmaxModel& m)
{
    return m.weights.allFinite() && m.bias.allFinite() && m.weights.norm() <= 1e6;
}

} // namespace

MulticlassDomains gen_multiclass_domains(const GeometryConfig& geo, std::uint64_t seed)
{
    geo.validate();
    const auto d = static_cast<Eigen::Index>(geo.dim);
    MulticlassDomains out;
    out.means = Matrix::Zero(geo.num_classes, d);
    for (int k = 0; k < geo.num_classes; ++k)
        out.means(k, k) = geo.sep;
    Vector dir = (out.means.row(geo.shift_to) - out.means.row(geo.shift_from)).transpose();
    out.delta = geo.delta_scale * dir / dir.norm();
    out.source = draw_classes(out.means, geo.sigma, Vector::Zero(d), geo.n_source, seed, StreamTag::MulticlassSource);
    out.target = draw_classes(out.means, geo.sigma, out.delta, geo.n_target, seed, StreamTag::MulticlassTarget);
    return out;
}

SourceFit fit_source_model(const NoisyDataset& source, int num_classes, const SourceConfig& cfg, std::uint64_t seed)
{
    if (source.kind != LabelKind::Multiclass || source.num_classes != num_classes)
        throw SpecError("source data must carry multiclass labels matching the class count");
    if (!(cfg.lr > 0.0) || cfg.batch_size == 0)
        throw SpecError("source training needs a positive learning rate and batch size");
    SourceFit fit;
    fit.model = SoftmaxModel(num_classes, source.dim());
    const std::size_t n = source.size();
    for (std::size_t ep = 0; ep < cfg.epochs && !fit.diverged; ++ep) {
        auto perm = permutation(n, seed ^ 0x5eedULL, ep);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            std::size_t stop = std::min(n, start + cfg.batch_size);
            Matrix gw = Matrix::Zero(num_classes, fit.model.weights.cols());
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(num_classes);
            for (std::size_t j = start; j < stop; ++j) {
                auto x = source.x.row(static_cast<Eigen::Index>(perm[j])).transpose();
                Eigen::VectorXd g = fit.model.predict(x);
                g(source.clean[perm[j]]) -= 1.0;
                gw.noalias() += g * x.transpose();
                gb += g;
            }
            double b = static_cast<double>(stop - start);
            fit.model.weights -= cfg.lr * (gw / b + cfg.weight_decay * fit.model.weights);
            fit.model.bias -= cfg.lr * gb / b;
            if (!finite_and_bounded(fit.model)) {
                fit.diverged = true;
                break;
            }
        }
    }
    fit.source_accuracy = accuracy(fit.model, source.x, source.clean);
    return fit;
}

PseudoLabels pseudo_label(const SoftmaxModel& model, const NoisyDataset& target)
{
    if (static_cast<Eigen::Index>(target.dim()) != model.weights.cols())
        throw DimensionError("model and target dimensions differ");
    PseudoLabels out{target, 0.0};
    Matrix z = target.x * model.weights.transpose();
    z.rowwise() += model.bias.transpose();
    for (std::size_t i = 0; i < target.size(); ++i)
        out.data.noisy[i] = argmax(z.row(static_cast<Eigen::Index>(i)).transpose());
    out.data.sync_flipped();
    out.labeling_accuracy = 1.0 - out.data.noise_rate();
    return out;
}

NoisyDataset to_multiclass(const NoisyDataset& data)
{
    if (data.kind != LabelKind::Signed)
        throw SpecError("expected signed binary labels");
    NoisyDataset out = data;
    out.kind = LabelKind::Multiclass;
    out.num_classes = 2;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.clean[i] = data.clean[i] == 1 ? 0 : 1;
        out.noisy[i] = data.noisy[i] == 1 ? 0 : 1;
    }
    return out;
}

SoftmaxModel bayes_source_model(const DomainSpec& spec)
{
    spec.validate();
    const double s2 = spec.sigma * spec.sigma;
    Vector w = (spec.mu1 - spec.mu2) / (2.0 * s2);
    double b = -(spec.mu1.squaredNorm() - spec.mu2.squaredNorm()) / (4.0 * s2);
    SoftmaxModel m(2, spec.dim());
    m.weights.row(0) = w.transpose();
    m.weights.row(1) = -w.transpose();
    m.bias << b, -b;
    return m;
}

void TrainConfig::validate() const
{
    loss.validate();
    if (regularizer)
        regularizer->validate();
    if (!(lr > 0.0) || batch_size == 0)
        throw SpecError("training needs a positive learning rate and batch size");
    if (elr && (!(elr->beta >= 0.0 && elr->beta < 1.0) || !(elr->lambda >= 0.0)))
        throw SpecError("ELR needs beta in [0,1) and lambda >= 0");
    if (corrector_threshold && !(*corrector_threshold > 0.0 && *corrector_threshold < 1.0))
        throw SpecError("corrector threshold must lie in (0,1)");
    if (!(schedule.then_every > 0.0))
        throw SpecError("evaluation interval must be positive");
    if (!(weight_decay >= 0.0) || !(data_sigma > 0.0))
        throw SpecError("weight decay must be nonnegative and data sigma positive");
}

namespace {

double mean_base_loss(const LossSpec& spec, const Matrix& probs, const std::vector<int>& labels)
{
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        total += loss_value(spec, probs.row(static_cast<Eigen::Index>(i)).transpose(), labels[i]);
    return total / static_cast<double>(labels.size());
}

CurveRecord evaluate(std::size_t step, double epoch, const SoftmaxModel& model, const NoisyDataset& target,
                     const std::vector<int>& training, const LossSpec& loss)
{
    Matrix probs = model.predict_all(target.x);
    std::size_t gt = 0, nz = 0, tr = 0, bad = 0, bad_hit = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        int pred = argmax(probs.row(static_cast<Eigen::Index>(i)).transpose());
        gt += pred == target.clean[i];
        nz += pred == target.noisy[i];
        tr += pred == training[i];
        if (target.flipped[i]) {
            ++bad;
            bad_hit += pred == target.clean[i];
        }
    }
    double n = static_cast<double>(target.size());
    return {step,
            epoch,
            static_cast<double>(gt) / n,
            static_cast<double>(nz) / n,
            static_cast<double>(tr) / n,
            mean_base_loss(loss, probs, training),
            bad ? static_cast<double>(bad_hit) / static_cast<double>(bad) : 1.0,
            model.weights.norm()};
}

} // namespace

TrainResult train_on_noisy(const SoftmaxModel& model0, const NoisyDataset& target, const TrainConfig& cfg,
                           std::uint64_t seed)
{
    cfg.validate();
    if (target.kind != LabelKind::Multiclass || target.num_classes != model0.num_classes())
        throw SpecError("target labels must be multiclass and match the model's class count");
    if (static_cast<Eigen::Index>(target.dim()) != model0.weights.cols())
        throw DimensionError("model and target dimensions differ");
    if (target.size() == 0)
        throw SpecError("empty target set");

    const std::size_t n = target.size();
    const int K = model0.num_classes();
    const auto d = model0.weights.cols();
    const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t every =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.schedule.then_every * per_epoch)));

    TrainResult res;
    res.model = model0;
    std::vector<int> labels = target.noisy;
    std::optional<ElrState> elr;
    if (cfg.elr)
        elr.emplace(n, K, cfg.elr->beta);
    CompositeObjective objective(cfg.loss, elr ? &*elr : nullptr, cfg.elr ? cfg.elr->lambda : 0.0);
    const auto* gjs = std::get_if<JensenShannon>(&cfg.loss.kind);

    res.curve.push_back(evaluate(0, 0.0, res.model, target, labels, cfg.loss));
    std::size_t step = 0;
    std::uint64_t visit = 0;
    for (std::size_t ep = 0; ep < cfg.epochs && !res.diverged; ++ep) {
        auto perm = permutation(n, seed, ep);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            std::size_t stop = std::min(n, start + cfg.batch_size);
            Matrix gw = Matrix::Zero(K, d);
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(K);
            for (std::size_t j = start; j < stop; ++j, ++visit) {
                const std::size_t i = perm[j];
                const Vector x = target.x.row(static_cast<Eigen::Index>(i)).transpose();
                const int y = labels[i];
                Probs p = res.model.predict(x);
                if (elr)
                    elr->update(i, p);
                Eigen::VectorXd g = Eigen::VectorXd::Zero(K);
                if (gjs) {
                    // first prediction sees the raw input, the rest see perturbed copies
                    std::vector<Probs> preds{p};
                    std::vector<Vector> inputs{x};
                    Stream s(seed, StreamTag::Perturbation, visit);
                    for (std::size_t m = 2; m < gjs->weights.size(); ++m) {
                        Vector xp = x;
                        for (Eigen::Index k = 0; k < d; ++k)
                            xp(k) += gjs->perturb_sigma * cfg.data_sigma * s.normal();
                        preds.push_back(res.model.predict(xp));
                        inputs.push_back(std::move(xp));
                    }
                    auto grads = gjs_grads(*gjs, y, preds);
                    for (std::size_t m = 1; m < preds.size(); ++m) {
                        Eigen::VectorXd gz = softmax_pullback(preds[m], grads[m]);
                        gw.noalias() += gz * inputs[m].transpose();
                        gb += gz;
                    }
                    g += grads[0];
                    if (elr && cfg.elr->lambda > 0.0) {
                        auto pen = elr->penalty(i, p);
                        g += cfg.elr->lambda * pen.grad;
                        res.elr_clamps += pen.clamped;
                    }
                } else {
                    auto v = objective.evaluate(i, p, y);
                    g += v.grad;
                    res.elr_clamps += v.clamped;
                }
                if (cfg.regularizer)
                    g += cfg.regularizer->lambda * loss_grad(*cfg.regularizer, p, y);
                Eigen::VectorXd gz = softmax_pullback(p, g);
                gw.noalias() += gz * x.transpose();
                gb += gz;
            }
            double b = static_cast<double>(stop - start);
            res.model.weights -= cfg.lr * (gw / b + cfg.weight_decay * res.model.weights);
            res.model.bias -= cfg.lr * gb / b;
            ++step;
            if (!finite_and_bounded(res.model)) {
                res.diverged = true;
                break;
            }
            bool last = ep + 1 == cfg.epochs && stop == n;
            if (step <= cfg.schedule.per_batch_until || step % every == 0 || last)
                res.curve.push_back(evaluate(step, static_cast<double>(step) / static_cast<double>(per_epoch),
                                             res.model, target, labels, cfg.loss));
        }
        if (cfg.corrector_threshold && !res.diverged) {
            Matrix probs = res.model.predict_all(target.x);
            for (std::size_t i = 0; i < n; ++i) {
                auto row = probs.row(static_cast<Eigen::Index>(i)).transpose();
                if (row.maxCoeff() > *cfg.corrector_threshold)
                    labels[i] = argmax(row);
            }
        }
    }
    return res;
}

BenchSetup prepare_bench(const GeometryConfig& geo, const SourceConfig& src, std::uint64_t seed)
{
    BenchSetup b;
    b.domains = gen_multiclass_domains(geo, seed);
    b.source = fit_source_model(b.domains.source, geo.num_classes, src, seed);
    b.labels = pseudo_label(b.source.model, b.domains.target);
    return b;
}

namespace {

std::size_t steps_to_fit(const SoftmaxModel& model0, const NoisyDataset& data, const TrainConfig& cfg,
                         std::uint64_t seed, double threshold)
{
    if (accuracy(model0, data.x, data.noisy) >= threshold)
        return 0;
    TrainConfig c = cfg;
    c.loss = LossSpec{};
    c.elr.reset();
    c.regularizer.reset();
    c.corrector_threshold.reset();
    c.schedule.per_batch_until = std::numeric_limits<std::size_t>::max();
    auto res = train_on_noisy(model0, data, c, seed);
    for (const auto& r : res.curve)
        if (r.acc_vs_noisy_labels >= threshold)
            return r.step;
    return kNeverFit;
}

} // namespace

MemorizationSteps memorization_speed(const SoftmaxModel& model0, const NoisyDataset& unbounded,
                                     const NoisyDataset& bounded, const TrainConfig& cfg, std::uint64_t seed,
                                     double threshold)
{
    if (unbounded.size() != bounded.size() || unbounded.dim() != bounded.dim())
        throw DimensionError("memorization comparison needs datasets with shared features");
    return {steps_to_fit(model0, unbounded, cfg, seed, threshold), steps_to_fit(model0, bounded, cfg, seed, threshold)};
}

} // namespace noiselab
