#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lacuna/experiments.hpp"

using namespace lacuna;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.resolution = 6;
    c.trials = 4;
    c.spike_resolutions = {8, 20};
    c.cakes = 40;
    return c;
}

std::string render(const Report& r, const std::string& format) {
    std::ostringstream os;
    write_report(os, r, format);
    return os.str();
}

}  // namespace

TEST(Config, ValidationAndJson) {
    auto c = small_config();
    EXPECT_NO_THROW(validate(c));
    c.p_grid = {1.0, 2.0};
    EXPECT_THROW(validate(c), ParameterError);
    c.p_grid = {1.5, 2.5};
    EXPECT_THROW(run_weak_lp_sweep(c), ParameterError);
    c = small_config();
    c.families.clear();
    EXPECT_THROW(validate(c), ParameterError);
    EXPECT_THROW(run_strong_lp(c), ParameterError);
    c.families = {"noise"};
    EXPECT_THROW(validate(c), ParameterError);

    const auto parsed = config_from_json(nlohmann::json::parse(R"({"resolution": 7, "seq": "1,3,9", "p_grid": [1.5]})"));
    EXPECT_EQ(parsed.resolution, 7);
    EXPECT_EQ(parsed.sequence().terms(), (std::vector<std::uint64_t>{1, 3, 9}));
    EXPECT_EQ(parsed.trials, ExperimentConfig{}.trials);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"resolutoin": 7})")), FormatError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"trials": "many"})")), FormatError);
    EXPECT_THROW(load_config("/nonexistent/lacuna.json"), FormatError);
    // Round trip through the serialized form.
    const auto again = config_from_json(nlohmann::json::parse(to_json(parsed).dump()));
    EXPECT_EQ(to_json(again), to_json(parsed));
}

TEST(Families, SeededAndIndependentOfTrialCount) {
    auto c = small_config();
    c.families = {"signs", "spikes", "indicators", "characters", "lacunary"};
    const auto a = make_family(c);
    c.trials = 2;
    const auto b = make_family(c);
    ASSERT_EQ(a.size(), 20u);
    for (const auto& m : b) {
        const auto it = std::find_if(a.begin(), a.end(),
                                     [&](const FamilyMember& x) { return x.family == m.family && x.trial == m.trial; });
        ASSERT_NE(it, a.end());
        EXPECT_EQ(it->f.max_abs_diff(m.f), 0.0);
    }
    for (const auto& m : a) {
        if (m.family == "signs" || m.family == "characters") {
            for (const auto& v : m.f.values()) ASSERT_EQ(std::abs(v), 1.0);
        }
        if (m.family == "indicators") {
            for (const auto& v : m.f.values()) ASSERT_TRUE(v == Complex(0.0) || v == Complex(1.0));
        }
    }
}

TEST(WeakLp, CharactersGiveUnitConstants) {
    auto c = small_config();
    c.families = {"characters"};
    const auto r = run_weak_lp_sweep(c);
    ASSERT_EQ(r.rows.size(), c.p_grid.size());
    // W* W_m is 1 where the sum picks the character up and 0 elsewhere.
    for (const auto& row : r.rows) {
        EXPECT_LE(row.at("B").get<double>(), 1.0 + 1e-12);
        EXPECT_GT(row.at("B").get<double>(), 0.0);
    }
}

TEST(WeakLp, DefaultFamilyReportsFits) {
    auto c = small_config();
    const auto r = run_weak_lp_sweep(c);
    EXPECT_TRUE(r.constants.contains("log_fit_residual"));
    EXPECT_TRUE(r.constants.contains("power_fit_residual"));
    const double b2 = r.rows.back().at("B").get<double>();
    EXPECT_GT(b2, 0.0);
    EXPECT_LT(b2, 2.0);
}

TEST(EstimateWW, ChainHoldsIncludingClosedFormSpikes) {
    auto c = small_config();
    c.families = {"signs", "spikes", "indicators"};
    const auto r = run_estimate_ww(c);
    EXPECT_TRUE(r.pass);
    EXPECT_DOUBLE_EQ(r.constants.at("max_ratio").get<double>(), std::ldexp(1.0, 20));
    for (const auto& row : r.rows)
        for (const char* step : {"step1", "step2", "step3", "step4"}) EXPECT_TRUE(row.at(step).get<bool>());
}

TEST(EstimateWW, IndicatorShape) {
    // f = 1_F: ||f||_1 = |F| and ||f||_inf / ||f||_1 = 1/|F|.
    GridSignal f(6);
    for (std::size_t i = 0; i < 8; ++i) f[i] = 1.0;
    const auto s = detail::chain_from_grid(f, LacunarySequence::powers_of_two(6), "indicator");
    EXPECT_DOUBLE_EQ(s.l1, 0.125);
    EXPECT_DOUBLE_EQ(s.ratio, 8.0);
    EXPECT_DOUBLE_EQ(s.pbar_prime, std::log(8.0));
}

TEST(ExpTail, InclusionAndBoundedSignal) {
    auto c = small_config();
    c.families = {"signs", "indicators"};
    const auto r = run_exp_tail(c);
    EXPECT_TRUE(r.constants.at("inclusion_ok").get<bool>());
    for (const auto& row : r.rows) {
        EXPECT_TRUE(row.at("inclusion_ok").get<bool>());
        EXPECT_EQ(row.at("trivial").get<bool>(), row.at("lambda_ratio").get<double>() <= 1.0);
    }
    // Constant f: C f is a partial sum of a constant and never leaves [0, 1].
    const auto seq = LacunarySequence::powers_of_two(6);
    const auto one = GridSignal::constant(6, Complex(1.0));
    const ExceptionalSetBuilder b(lacunary_bitiles(6, seq), one, seq, greedy_choice(one, seq));
    EXPECT_EQ(b.evaluate(2.0).second.tail_measure, 0.0);
}

TEST(Embedding, FamilyAndConstants) {
    auto c = small_config();
    const auto cakes = embedding_family(c);
    ASSERT_EQ(static_cast<int>(cakes.size()), c.cakes);
    for (const auto& [kind, cake] : cakes) {
        if (kind == "threshold") {
            EXPECT_LT(cake.log_phi_integral(4), 0.0);
            continue;
        }
        double scale = 1.0;
        for (const auto& l : cake.layers())
            scale = std::max({scale, std::abs(l.logmass), l.mag.huge() ? 0.0 : std::abs(l.mag.log())});
        EXPECT_NEAR(cake.log_phi_integral(4), 0.0, 1e-12 * scale) << kind;
    }
    const auto r = run_embedding(c);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.constants.at("regime1_rows").get<int>(), 0);
    EXPECT_GT(r.constants.at("regime2_rows").get<int>(), 0);
    // Bounded cakes produce a single k = 0 piece.
    for (const auto& row : r.rows)
        if (row.at("kind") == "bounded") {
            EXPECT_EQ(row.at("k").get<int>(), 0);
        }
}

TEST(StrongLp, CharactersAndP2) {
    auto c = small_config();
    c.families = {"characters"};
    c.p_grid = {1.5, 2.0};
    const auto r = run_strong_lp(c);
    for (const auto& row : r.rows) EXPECT_LE(row.at("ratio").get<double>(), 1.0 + 1e-12);
    c.families = {"signs"};
    const auto r2 = run_strong_lp(c);
    EXPECT_TRUE(std::isfinite(r2.rows.back().at("ratio").get<double>()));
}

TEST(Report, DeterministicBytesAndFormats) {
    const auto c = small_config();
    EXPECT_EQ(render(run_weak_lp_sweep(c), "json"), render(run_weak_lp_sweep(c), "json"));
    EXPECT_EQ(render(run_estimate_ww(c), "csv"), render(run_estimate_ww(c), "csv"));
    auto other = c;
    other.seed = 2;
    EXPECT_NE(render(run_strong_lp(c), "json"), render(run_strong_lp(other), "json"));

    Report empty{"empty", to_json(c), {"a", "b"}, {}, {}, false, {}};
    EXPECT_EQ(render(empty, "csv"), "a,b\n");
    const auto j = nlohmann::json::parse(render(empty, "json"));
    EXPECT_FALSE(j.at("pass").get<bool>());
    EXPECT_TRUE(j.at("rows").empty());
    for (const char* key : {"experiment", "config", "rows", "constants", "pass"}) EXPECT_TRUE(j.contains(key));

    EXPECT_THROW(render(empty, "xml"), ParameterError);
    EXPECT_THROW(emit_report(empty, "xml", ""), ParameterError);
    EXPECT_THROW(emit_report(empty, "csv", "/nonexistent/dir/out.csv"), FormatError);

    const auto path = std::filesystem::temp_directory_path() / "lacuna_report_test.csv";
    emit_report(empty, "csv", path.string());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "a,b\n");
    std::filesystem::remove(path);
}

TEST(Report, CsvQuotingAndNulls) {
    Report r{"x", {}, {"s", "v", "b"}, {}, {}, true, {}};
    r.rows.push_back(ordered_json{{"s", "a,b"}, {"v", nullptr}, {"b", true}});
    EXPECT_EQ(render(r, "csv"), "s,v,b\n\"a,b\",,1\n");
}
