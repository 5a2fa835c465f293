#include <gtest/gtest.h>

#include <algorithm>

#include "noiselab/acceptance.hpp"
#include "noiselab/bench.hpp"
#include "noiselab/etp.hpp"

using namespace noiselab;

// Slow properties stated on the standard settings, checked literally.

TEST(EtpProperty, EarlyPeakThenDecayAtSigma005R05)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto md = gen_margin_data(10000, 100, 0.05, 0.5, seed);
        GdOptions probe;
        probe.stop_at_t = true;
        auto first = gd_train(md.data, md.mu, probe);
        ASSERT_TRUE(first.stopping_t);
        const std::size_t T = std::max<std::size_t>(*first.stopping_t, 1);
        GdOptions opt;
        opt.max_steps = 100 * T;
        auto tr = gd_train(md.data, md.mu, opt);
        std::size_t peak = 0;
        for (const auto& r : tr.records)
            if (r.kappa_b > tr.records[peak].kappa_b)
                peak = r.step;
        EXPECT_LE(peak, 5 * T) << "seed " << seed;
        EXPECT_LE(tr.records.back().kappa_b, tr.records[peak].kappa_b - 0.2)
            << "seed " << seed << ", mislabeled points: " << md.data.noise_rate() * 10000;
    }
}

TEST(BenchProperty, PeakThenMemorizeOnEverySeed)
{
    const BenchParams b = standard_bench();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto setup = prepare_bench(b.geometry, b.source, seed);
        auto res = train_on_noisy(setup.source.model, setup.labels.data, b.train, seed + 1);
        double peak = 0.0;
        for (const auto& c : res.curve)
            if (c.step <= b.train.schedule.per_batch_until)
                peak = std::max(peak, c.acc_vs_ground_truth);
        const auto& last = res.curve.back();
        EXPECT_GT(peak, setup.labels.labeling_accuracy + 0.03) << "seed " << seed;
        EXPECT_LT(last.acc_vs_ground_truth, peak - 0.05) << "seed " << seed;
        EXPECT_GE(last.acc_vs_noisy_labels, 0.95) << "seed " << seed;
    }
}
