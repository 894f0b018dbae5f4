#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qptycho/campaign.hpp"

using namespace qptycho;

namespace {

/// Results CSV with the timing column blanked.
std::string without_timing(const std::vector<TrialRecord>& records) {
    auto copy = records;
    for (auto& r : copy) r.t_pie_ms = 0.0;
    std::ostringstream out;
    write_results_csv(out, copy);
    return out.str();
}

CampaignConfig small_campaign() {
    CampaignConfig cfg;
    cfg.dims = {3, 5, 7};
    cfg.families = {FamilyKind::FamilyI, FamilyKind::FamilyII};
    cfg.trials_per_dim = 6;
    cfg.master_seed = 123;
    return cfg;
}

}  // namespace

TEST(RunTrial, NoiselessSixLevels) {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        good += run_trial(6, FamilyKind::FamilyII, NoiseSpec::none(), seed).fidelity >= 0.999 ? 1 : 0;
    EXPECT_GE(good, 95);
}

TEST(RunTrial, NoiselessSixLevelsTighterStop) {
    PieConfig pie;
    pie.distance_tolerance = 1e-4;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        good += run_trial(6, FamilyKind::FamilyII, NoiseSpec::none(), seed, pie).fidelity >= 0.999 ? 1 : 0;
    EXPECT_GE(good, 95);
}

TEST(RunTrial, UnitPurityMatchesPurePath) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pure = run_trial(6, FamilyKind::FamilyII, NoiseSpec::none(), seed);
        const auto mixed = run_trial(6, FamilyKind::FamilyII, NoiseSpec::purity(1.0), seed);
        EXPECT_EQ(pure.fidelity, mixed.fidelity);
        EXPECT_EQ(pure.sweeps, mixed.sweeps);
        EXPECT_EQ(pure.restarts, mixed.restarts);
    }
}

TEST(RunTrial, HalfPurityDegrades) {
    double pure = 0.0, half = 0.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        pure += run_trial(6, FamilyKind::FamilyII, NoiseSpec::none(), seed).fidelity;
        half += run_trial(6, FamilyKind::FamilyII, NoiseSpec::purity(0.5), seed).fidelity;
    }
    EXPECT_LT(half, pure - 0.3);
}

TEST(RunTrial, EnvelopeDataStillReconstructs) {
    std::vector<double> f;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
        f.push_back(run_trial(6, FamilyKind::FamilyII, NoiseSpec::envelope(), seed).fidelity);
    EXPECT_GE(median(f), 0.9);
}

TEST(RunTrial, ShotNoiseIsSeedDeterministic) {
    const auto a = run_trial(5, FamilyKind::FamilyII, NoiseSpec::shot(1e4), 9);
    const auto b = run_trial(5, FamilyKind::FamilyII, NoiseSpec::shot(1e4), 9);
    EXPECT_EQ(a.fidelity, b.fidelity);
    EXPECT_EQ(a.sweeps, b.sweeps);
}

TEST(SimulateDataset, NoiseModes) {
    Rng rng = make_rng(60);
    const auto psi = haar_random_state(6, rng);
    const auto family = build_family(6, FamilyKind::FamilyII);
    const auto exact = simulate_dataset(psi, family, NoiseSpec::none(), 1);
    EXPECT_EQ(exact.intensities, ideal_probabilities(psi, family));
    const auto shot = simulate_dataset(psi, family, NoiseSpec::shot(1e6), 1);
    EXPECT_EQ(shot.provenance.kind, Provenance::Kind::Sampled);
    for (std::size_t n = 0; n < exact.intensities.values.size(); ++n)
        EXPECT_NEAR(shot.intensities.values[n], exact.intensities.values[n], 5e-3);
    const auto mixed = simulate_dataset(psi, family, NoiseSpec::purity(0.7), 1);
    EXPECT_NEAR(mixed.intensities.total(), exact.intensities.total(), 1e-12);
}

TEST(Campaign, DeterministicAcrossRunsAndThreadCounts) {
    auto cfg = small_campaign();
    const auto a = run_campaign(cfg);
    const auto b = run_campaign(cfg);
    cfg.threads = 4;
    const auto c = run_campaign(cfg);
    EXPECT_EQ(without_timing(a.records), without_timing(b.records));
    EXPECT_EQ(without_timing(a.records), without_timing(c.records));
}

TEST(Campaign, RecordCountsAndFidelityBound) {
    const auto result = run_campaign(small_campaign());
    // FamilyI is skipped at d=3.
    EXPECT_EQ(result.records.size(), 6u * 5);
    for (const auto& r : result.records) {
        EXPECT_LE(r.fidelity, 1.0 + 1e-9);
        EXPECT_GE(r.fidelity, 0.0);
        EXPECT_EQ(r.seed, 123 + r.trial);
    }
    EXPECT_EQ(result.cells.size(), 5u);
}

TEST(Campaign, SummaryRecomputableFromCsv) {
    auto cfg = small_campaign();
    const auto dir = std::filesystem::temp_directory_path() / "qptycho_campaign_test";
    std::filesystem::remove_all(dir);
    cfg.output = dir.string();
    cfg.svg = true;
    const auto result = run_campaign(cfg);

    std::ifstream csv(dir / "results.csv");
    const auto records = read_results_csv(csv);
    ASSERT_EQ(records.size(), result.records.size());
    const auto cells = summarize(records);

    std::ifstream js(dir / "summary.json");
    const auto doc = nlohmann::json::parse(js);
    ASSERT_EQ(doc.at("cells").size(), cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& j = doc.at("cells")[i];
        EXPECT_EQ(j.at("d").get<std::size_t>(), cells[i].d);
        EXPECT_DOUBLE_EQ(j.at("median").get<double>(), cells[i].median);
        EXPECT_DOUBLE_EQ(j.at("mean").get<double>(), cells[i].mean);
        EXPECT_DOUBLE_EQ(j.at("convergence_rate").get<double>(), cells[i].convergence_rate);
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "hist_d5_FamilyII.svg"));
    std::filesystem::remove_all(dir);
}

TEST(Campaign, ValidationErrors) {
    CampaignConfig cfg;
    EXPECT_THROW(run_campaign(cfg), InvalidArgument);
    cfg.dims = {2};
    EXPECT_THROW(run_campaign(cfg), InvalidArgument);
    cfg.dims = {4};
    cfg.families = {FamilyKind::Custom};
    EXPECT_THROW(run_campaign(cfg), InvalidArgument);
}

TEST(Campaign, TrialPreset) {
    EXPECT_EQ(preset_trials(3), 100u);
    EXPECT_EQ(preset_trials(10), 100u);
    EXPECT_EQ(preset_trials(11), 50u);
    EXPECT_EQ(preset_trials(17), 50u);
    EXPECT_EQ(preset_trials(18), 13u);
    EXPECT_EQ(preset_trials(32), 13u);
    CampaignConfig cfg;
    EXPECT_EQ(cfg.trials_for(12), 50u);
    cfg.trials_per_dim = 20;
    EXPECT_EQ(cfg.trials_for(12), 20u);
}

TEST(Statistics, QuantilesAndPowerLaw) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted({0.0, 1.0, 2.0, 3.0, 4.0}, 0.25), 1.0);
    const auto fit = fit_power_law({8, 16, 32}, {2.0 * 512, 2.0 * 4096, 2.0 * 32768});
    EXPECT_NEAR(fit.exponent, 3.0, 1e-12);
    EXPECT_NEAR(std::exp(fit.intercept), 2.0, 1e-10);
    EXPECT_THROW(fit_power_law({1.0}, {1.0}), InvalidArgument);
}

TEST(ParallelFor, RunsEveryIndexAndReportsFailure) {
    std::vector<int> hits(100, 0);
    const auto outcome = parallel_for(100, 8, [&](std::size_t i) {
        hits[i] += 1;
        if (i == 37) throw InvalidArgument("boom");
    });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
    EXPECT_FALSE(outcome.done[37]);
    EXPECT_TRUE(outcome.done[36]);
    EXPECT_THROW(outcome.rethrow_if_failed(), InvalidArgument);
}

TEST(PuritySweep, DegradesAsWeightFalls) {
    const auto points = purity_sweep(6, FamilyKind::FamilyII, {1.0, 0.95, 0.5}, 20, 5, PieConfig{}, 4);
    ASSERT_EQ(points.size(), 3u);
    EXPECT_NEAR(points[0].purity, 1.0, 1e-12);
    EXPECT_NEAR(points[2].purity, white_noise_purity(0.5, 6), 1e-15);
    EXPECT_GT(points[0].mean_fidelity, points[2].mean_fidelity);
    EXPECT_GE(points[1].mean_fidelity, 0.9);
    std::ostringstream out;
    write_purity_csv(out, points);
    EXPECT_EQ(out.str().substr(0, 41), "p,purity,mean_fidelity,convergence_rate,t");
    EXPECT_THROW(purity_sweep(6, FamilyKind::FamilyII, {0.0}, 1, 0), InvalidArgument);
}

TEST(ConfigJson, ParsesFullDocument) {
    const auto doc = nlohmann::json::parse(R"({
        "dims": {"from": 3, "to": 6},
        "families": ["FamilyI", "FamilyII"],
        "trials": 7,
        "noise": {"mode": "shot", "exposure": 1e4},
        "master_seed": 11,
        "pie": {"beta": 1.2, "max_sweeps": 40},
        "threads": 2
    })");
    const auto cfg = campaign_config_from_json(doc);
    EXPECT_EQ(cfg.dims, (std::vector<std::size_t>{3, 4, 5, 6}));
    EXPECT_EQ(cfg.families.size(), 2u);
    EXPECT_EQ(cfg.trials_for(3), 7u);
    EXPECT_EQ(cfg.noise.mode, NoiseMode::Shot);
    EXPECT_DOUBLE_EQ(cfg.noise.exposure, 1e4);
    EXPECT_EQ(cfg.master_seed, 11u);
    EXPECT_DOUBLE_EQ(cfg.pie.beta, 1.2);
    EXPECT_EQ(cfg.pie.max_sweeps, 40u);
    EXPECT_EQ(cfg.pie.max_restarts, 100u);
    EXPECT_EQ(cfg.threads, 2u);

    const auto preset = campaign_config_from_json(nlohmann::json::parse(R"({"dims": [4, 12], "trials": "preset"})"));
    EXPECT_EQ(preset.trials_for(12), 50u);
    EXPECT_THROW(campaign_config_from_json(nlohmann::json::parse(R"({"trials": 3})")), InvalidArgument);
    EXPECT_THROW(campaign_config_from_json(nlohmann::json::parse(R"({"dims": [4], "noise": "loud"})")),
                 InvalidArgument);
}

TEST(StateJson, RoundTrip) {
    Rng rng = make_rng(61);
    const auto psi = haar_random_state(7, rng);
    EXPECT_EQ(state_from_json(state_to_json(psi)), psi);
    EXPECT_THROW(state_from_json(nlohmann::json::parse(R"({"dim": 2, "amplitudes": [[1, 0]]})")), DimensionMismatch);
}

TEST(ResultsCsv, RejectsMalformedRows) {
    std::istringstream bad(std::string(kResultsHeader) + "\n3,FamilyII,0,0,0.9,1,3\n");
    try {
        read_results_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
