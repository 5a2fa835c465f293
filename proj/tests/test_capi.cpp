#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "noiselab/noiselab.h"

namespace fs = std::filesystem;

namespace {

const char* kRates = R"({"name": "capi", "kind": "rate_sweep", "seeds": [1],
  "parameters": {"dim": 1, "mu1": [0], "mu2": [2], "alpha_min": 0, "alpha_max": 0.5, "alpha_step": 0.25}})";

fs::path scratch(const char* tag)
{
    fs::path p = fs::temp_directory_path() / (std::string("noiselab-capi-") + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(CApi, VersionAndErrors)
{
    EXPECT_STREQ(nl_version(), "0.1.0");
    nl_experiment* exp = nullptr;
    EXPECT_EQ(nl_experiment_parse_json("{not json", &exp), NL_ERR_CONFIG);
    EXPECT_EQ(exp, nullptr);
    EXPECT_NE(std::string(nl_last_error()).find("malformed JSON"), std::string::npos);
    EXPECT_EQ(nl_experiment_parse_json(R"({"name": "x", "kind": "etp_run"})", &exp), NL_ERR_CONFIG);
    EXPECT_NE(std::string(nl_last_error()).find("seeds"), std::string::npos);
    EXPECT_EQ(nl_experiment_load("/nonexistent/config.toml", &exp), NL_ERR_IO);
    EXPECT_EQ(nl_experiment_parse_json(nullptr, &exp), NL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(nl_run(nullptr, nullptr, nullptr), NL_ERR_INVALID_ARGUMENT);
}

TEST(CApi, RunThroughOpaqueHandles)
{
    nl_experiment* exp = nullptr;
    ASSERT_EQ(nl_experiment_parse_json(kRates, &exp), NL_OK) << nl_last_error();
    EXPECT_STREQ(nl_experiment_name(exp), "capi");
    EXPECT_STREQ(nl_experiment_kind(exp), "rate_sweep");
    EXPECT_EQ(std::string(nl_experiment_hash(exp)).size(), 16u);
    EXPECT_FALSE(nl_experiment_is_grid(exp));

    nl_summary* sum = nullptr;
    EXPECT_EQ(nl_sweep(exp, "/tmp", 1, &sum), NL_ERR_CONFIG);
    fs::path root = scratch("run");
    ASSERT_EQ(nl_run(exp, root.c_str(), &sum), NL_OK) << nl_last_error();
    EXPECT_TRUE(nl_summary_bounds_ok(sum));
    EXPECT_EQ(fs::path(nl_summary_output_dir(sum)), root / "capi");
    EXPECT_TRUE(fs::exists(root / "capi" / "1.csv"));
    EXPECT_NE(std::string(nl_summary_json(sum)).find("\"schema_version\": 1"), std::string::npos);
    nl_summary_free(sum);
    nl_experiment_free(exp);
    fs::remove_all(root);
}

TEST(CApi, MislabelRate)
{
    const double mu1 = 0.0, mu2 = 2.0, zero = 0.0;
    double rate = 0.0;
    ASSERT_EQ(nl_mislabel_rate(1, &mu1, &mu2, &zero, 1.0, &rate), NL_OK);
    EXPECT_NEAR(rate, 0.5 * std::erfc(1.0 / std::sqrt(2.0)), 1e-15);
    EXPECT_EQ(nl_mislabel_rate(1, &mu1, &mu2, &zero, -1.0, &rate), NL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(nl_mislabel_rate(1, &mu1, &mu1, &zero, 1.0, &rate), NL_ERR_INVALID_ARGUMENT);
}

TEST(CApi, Losses)
{
    const double p[3] = {0.5, 0.25, 0.25};
    double v = 0.0;
    ASSERT_EQ(nl_loss_value("\"ce\"", 3, p, 0, &v), NL_OK);
    EXPECT_NEAR(v, std::log(2.0), 1e-15);
    ASSERT_EQ(nl_loss_value(R"({"kind": "gce", "q": 0.5})", 3, p, 1, &v), NL_OK);
    EXPECT_NEAR(v, (1.0 - std::sqrt(0.25)) / 0.5, 1e-15);
    double g[3];
    ASSERT_EQ(nl_loss_grad("\"mae\"", 3, p, 0, g), NL_OK);
    EXPECT_DOUBLE_EQ(g[0], -1.0);
    EXPECT_DOUBLE_EQ(g[1], 1.0);
    EXPECT_EQ(nl_loss_value("\"huber\"", 3, p, 0, &v), NL_ERR_CONFIG);
    EXPECT_EQ(nl_loss_value("\"ce\"", 1, p, 0, &v), NL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(nl_loss_value("\"ce\"", 3, p, 3, &v), NL_ERR_INVALID_ARGUMENT);
}

TEST(CApi, CdfFaultShiftsRates)
{
    const double mu1 = 0.0, mu2 = 2.0, zero = 0.0;
    double clean = 0.0, faulty = 0.0;
    nl_mislabel_rate(1, &mu1, &mu2, &zero, 1.0, &clean);
    nl_testing_set_cdf_fault(0.01);
    nl_mislabel_rate(1, &mu1, &mu2, &zero, 1.0, &faulty);
    nl_testing_set_cdf_fault(0.0);
    EXPECT_GT(std::abs(faulty - clean), 1e-3);
}
