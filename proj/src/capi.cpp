#include "noiselab/noiselab.h"

#include <string>

#include "noiselab/acceptance.hpp"
#include "noiselab/config.hpp"
#include "noiselab/domain.hpp"
#include "noiselab/error.hpp"
#include "noiselab/harness.hpp"
#include "noiselab/losses.hpp"
#include "noiselab/special.hpp"

struct nl_experiment {
    noiselab::ExperimentConfig cfg;
    std::string kind;
};

struct nl_summary {
    noiselab::RunSummary summary;
    std::string json;
    std::string dir;
};

struct nl_report {
    noiselab::AcceptanceReport report;
    std::string table;
    std::string json;
};

namespace {

thread_local std::string last_error;

template <class F>
nl_status guarded(F&& f)
{
    last_error.clear();
    try {
        f();
        return NL_OK;
    } catch (const noiselab::DimensionError& e) {
        last_error = e.what();
        return NL_ERR_DIMENSION;
    } catch (const noiselab::ConfigError& e) {
        last_error = e.what();
        return NL_ERR_CONFIG;
    } catch (const noiselab::IoError& e) {
        last_error = e.what();
        return NL_ERR_IO;
    } catch (const std::filesystem::filesystem_error& e) {
        last_error = e.what();
        return NL_ERR_IO;
    } catch (const noiselab::Json::exception& e) {
        last_error = e.what();
        return NL_ERR_INVALID_ARGUMENT;
    } catch (const std::invalid_argument& e) {
        last_error = e.what();
        return NL_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        last_error = e.what();
        return NL_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return NL_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw noiselab::SpecError(what);
}

nl_status finish_run(const nl_experiment* exp, const char* out_root, unsigned jobs, bool sweep, nl_summary** out)
{
    return guarded([&] {
        require(exp && out, "null argument");
        noiselab::RunOptions opt;
        if (out_root)
            opt.out_root = out_root;
        opt.jobs = jobs;
        auto s = std::make_unique<nl_summary>();
        s->summary = sweep ? noiselab::run_sweep(exp->cfg, opt) : noiselab::run_experiment(exp->cfg, opt);
        s->json = s->summary.json.dump(2);
        s->dir = s->summary.output_dir.string();
        *out = s.release();
    });
}

noiselab::Probs to_probs(size_t k, const double* p)
{
    require(p && k >= 2, "probability vector needs at least two entries");
    return Eigen::Map<const Eigen::VectorXd>(p, static_cast<Eigen::Index>(k));
}

} // namespace

extern "C" {

const char* nl_last_error(void) { return last_error.c_str(); }

const char* nl_version(void) { return "0.1.0"; }

nl_status nl_experiment_load(const char* path, nl_experiment** out)
{
    return guarded([&] {
        require(path && out, "null argument");
        auto e = std::make_unique<nl_experiment>();
        e->cfg = noiselab::load_config(path);
        e->kind = noiselab::kind_name(e->cfg.kind);
        *out = e.release();
    });
}

nl_status nl_experiment_parse_json(const char* json, nl_experiment** out)
{
    return guarded([&] {
        require(json && out, "null argument");
        noiselab::Json doc;
        try {
            doc = noiselab::Json::parse(json);
        } catch (const noiselab::Json::parse_error& e) {
            throw noiselab::ConfigError(std::string("malformed JSON: ") + e.what());
        }
        auto e = std::make_unique<nl_experiment>();
        e->cfg = noiselab::parse_config(doc);
        e->kind = noiselab::kind_name(e->cfg.kind);
        *out = e.release();
    });
}

void nl_experiment_free(nl_experiment* exp) { delete exp; }

const char* nl_experiment_name(const nl_experiment* exp) { return exp ? exp->cfg.name.c_str() : ""; }

const char* nl_experiment_kind(const nl_experiment* exp) { return exp ? exp->kind.c_str() : ""; }

const char* nl_experiment_hash(const nl_experiment* exp) { return exp ? exp->cfg.hash.c_str() : ""; }

int nl_experiment_is_grid(const nl_experiment* exp) { return exp && noiselab::is_grid_kind(exp->cfg.kind); }

nl_status nl_run(const nl_experiment* exp, const char* out_root, nl_summary** out)
{
    return finish_run(exp, out_root, 1, false, out);
}

nl_status nl_sweep(const nl_experiment* exp, const char* out_root, unsigned jobs, nl_summary** out)
{
    return finish_run(exp, out_root, jobs, true, out);
}

int nl_summary_bounds_ok(const nl_summary* s) { return s && s->summary.bounds_ok; }

const char* nl_summary_json(const nl_summary* s) { return s ? s->json.c_str() : ""; }

const char* nl_summary_output_dir(const nl_summary* s) { return s ? s->dir.c_str() : ""; }

void nl_summary_free(nl_summary* s) { delete s; }

nl_status nl_accept(int quick, const char* out_dir, nl_report** out)
{
    return guarded([&] {
        require(out != nullptr, "null argument");
        noiselab::AcceptanceOptions opt;
        opt.quick = quick != 0;
        if (out_dir)
            opt.out_dir = out_dir;
        auto r = std::make_unique<nl_report>();
        r->report = noiselab::run_acceptance(opt);
        r->table = r->report.table();
        r->json = r->report.json().dump(2);
        *out = r.release();
    });
}

int nl_report_all_pass(const nl_report* r) { return r && r->report.all_pass(); }

const char* nl_report_table(const nl_report* r) { return r ? r->table.c_str() : ""; }

const char* nl_report_json(const nl_report* r) { return r ? r->json.c_str() : ""; }

void nl_report_free(nl_report* r) { delete r; }

nl_status nl_mislabel_rate(size_t dim, const double* mu1, const double* mu2, const double* delta, double sigma,
                           double* out)
{
    return guarded([&] {
        require(mu1 && mu2 && delta && out && dim > 0, "null argument or zero dimension");
        const auto d = static_cast<Eigen::Index>(dim);
        noiselab::DomainSpec spec;
        spec.mu1 = Eigen::Map<const Eigen::VectorXd>(mu1, d);
        spec.mu2 = Eigen::Map<const Eigen::VectorXd>(mu2, d);
        spec.delta = Eigen::Map<const Eigen::VectorXd>(delta, d);
        spec.sigma = sigma;
        spec.validate();
        *out = noiselab::mislabel_rate(spec);
    });
}

nl_status nl_loss_value(const char* loss, size_t k, const double* p, int label, double* out)
{
    return guarded([&] {
        require(loss && out, "null argument");
        auto spec = noiselab::parse_loss(noiselab::Json::parse(loss), "loss");
        *out = noiselab::loss_value(spec, to_probs(k, p), label);
    });
}

nl_status nl_loss_grad(const char* loss, size_t k, const double* p, int label, double* grad_out)
{
    return guarded([&] {
        require(loss && grad_out, "null argument");
        auto spec = noiselab::parse_loss(noiselab::Json::parse(loss), "loss");
        Eigen::VectorXd g = noiselab::loss_grad(spec, to_probs(k, p), label);
        for (size_t i = 0; i < k; ++i)
            grad_out[i] = g(static_cast<Eigen::Index>(i));
    });
}

void nl_testing_set_cdf_fault(double shift) { noiselab::testing::set_cdf_fault(shift); }

} // extern "C"
