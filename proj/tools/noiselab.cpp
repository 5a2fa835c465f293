#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "noiselab/noiselab.h"

namespace {

int fail(nl_status st)
{
    std::fprintf(stderr, "noiselab: %s\n", nl_last_error());
    switch (st) {
    case NL_ERR_CONFIG:
    case NL_ERR_INVALID_ARGUMENT:
    case NL_ERR_DIMENSION:
        return 2;
    case NL_ERR_IO:
        return 3;
    default:
        return 4;
    }
}

int execute(const std::string& path, const std::string& out, bool sweep, unsigned jobs, bool strict)
{
    nl_experiment* exp = nullptr;
    if (nl_status st = nl_experiment_load(path.c_str(), &exp))
        return fail(st);
    nl_summary* sum = nullptr;
    const char* root = out.empty() ? nullptr : out.c_str();
    nl_status st = sweep ? nl_sweep(exp, root, jobs, &sum) : nl_run(exp, root, &sum);
    nl_experiment_free(exp);
    if (st)
        return fail(st);
    const bool ok = nl_summary_bounds_ok(sum);
    std::printf("%s\nbounds %s\n", nl_summary_output_dir(sum), ok ? "ok" : "violated");
    nl_summary_free(sum);
    return strict && !ok ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    if (const char* shift = std::getenv("NOISELAB_FAULT_CDF_SHIFT"))
        nl_testing_set_cdf_fault(std::strtod(shift, nullptr));

    CLI::App app{"noisy-label experiments under domain shift"};
    app.require_subcommand(1);

    std::string config, out;
    bool strict = false, quick = false;
    unsigned jobs = 1;

    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("config", config, "TOML or JSON config")->required();
    run->add_flag("--strict", strict, "exit 1 when a bound check fails");
    run->add_option("--out", out, "output root (default: $NOISELAB_OUTPUT_ROOT/<output_dir>)");

    auto* sweep = app.add_subcommand("sweep", "run every point of a grid config");
    sweep->add_option("config", config, "TOML or JSON config")->required();
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--strict", strict, "exit 1 when a bound check fails");
    sweep->add_option("--out", out, "output root");

    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    accept->add_flag("--quick", quick, "smaller Monte Carlo sizes and seed counts");
    accept->add_option("--out", out, "keep artifacts and report in this directory");

    CLI11_PARSE(app, argc, argv);

    if (*run)
        return execute(config, out, false, 1, strict);
    if (*sweep)
        return execute(config, out, true, jobs, strict);

    nl_report* rep = nullptr;
    if (nl_status st = nl_accept(quick, out.empty() ? nullptr : out.c_str(), &rep))
        return fail(st);
    std::fputs(nl_report_table(rep), stdout);
    const bool ok = nl_report_all_pass(rep);
    nl_report_free(rep);
    return ok ? 0 : 1;
}
