#include <string>

#include <gtest/gtest.h>

#include <cyberrisk/config.hpp>
#include <cyberrisk/report_io.hpp>

using namespace cyberrisk;

namespace {

std::string config_dir() { return CYBERRISK_CONFIG_DIR; }

} // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
    const SimulationSpec s = parse_config(std::string_view{R"({"version": 1})"});
    EXPECT_EQ(s.seed, 42u);
    EXPECT_EQ(s.portfolio_size, 1000u);
    EXPECT_EQ(s.repetitions, 100000u);
    EXPECT_EQ(s.loading, 0.1);
    EXPECT_EQ(s.device.daily_loss, 1000);
    EXPECT_EQ(s.device.discount_rate, 0.03);
    EXPECT_DOUBLE_EQ(s.device.counts.theta, 10.512);
    EXPECT_EQ(s.scenario.mitigation_alpha[index_of(RiskLevel::Guarded)], 0.9);
    EXPECT_EQ(s.scenario.intensity_multiplier[index_of(RiskLevel::Severe)], 20);
    EXPECT_EQ(s.levels.size(), 4u);
    EXPECT_FALSE(s.aggregate_channel.has_value());
}

TEST(Config, ShippedPresetsLoad) {
    const SimulationSpec defaults = load_config(config_dir() + "/defaults.json");
    EXPECT_EQ(config_to_json(defaults), config_to_json(default_spec()));
    const SimulationSpec structure = load_config(config_dir() + "/level_structure.json");
    EXPECT_EQ(structure.device.counts.theta, 0.00002);
    EXPECT_EQ(structure.device.counts.lambda_cluster, 29);
}

TEST(Config, VersionIsMandatory) {
    EXPECT_THROW(parse_config(std::string_view{"{}"}), ConfigError);
    EXPECT_THROW(parse_config(std::string_view{R"({"version": 2})"}), ConfigError);
    EXPECT_THROW(parse_config(std::string_view{R"({"version": "1"})"}), ConfigError);
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    for (const char* doc : {
             R"({"version": 1, "sed": 4})",
             R"({"version": 1, "device": {"daily_los": 4}})",
             R"({"version": 1, "scenario": {"levels": {"amber": {}}}})",
             R"({"version": 1, "scenario": {"levels": {"high": {"multipler": 3}}}})",
             R"({"version": 1, "aggregate_channel": {"event_rate": 1, "severity": {"family": "fixed", "value": 1, "x": 2}}})",
         })
        EXPECT_THROW(parse_config(std::string_view{doc}), ConfigError) << doc;
}

TEST(Config, BadValues) {
    for (const char* doc : {
             "not json",
             R"({"version": 1, "repetitions": 0})",
             R"({"version": 1, "repetitions": -5})",
             R"({"version": 1, "loading": "x"})",
             R"({"version": 1, "levels": ["purple"]})",
             R"({"version": 1, "levels": ["high", "high"]})",
             R"({"version": 1, "confidence_levels": [0.9, 1.0]})",
             R"({"version": 1, "device": {"discount_rate": -1}})",
             R"({"version": 1, "scenario": {"attack_window_minutes": 0}})",
             R"({"version": 1, "scenario": {"levels": {"guarded": {"mitigation_alpha": 0}}}})",
             R"({"version": 1, "aggregate_channel": {"event_rate": 1}})",
             R"({"version": 1, "aggregate_channel": {"event_rate": 1, "severity": {"family": "gamma"}}})",
             R"({"version": 1, "aggregate_channel": {"event_rate": 1, "severity": {"family": "pareto", "x_min": 1, "alpha": 0.5}}})",
         })
        EXPECT_THROW(parse_config(std::string_view{doc}), ConfigError) << doc;
}

TEST(Config, MissingFileIsInputError) {
    EXPECT_THROW(load_config("/nonexistent/cfg.json"), InputError);
}

TEST(Config, CanonicalFormRoundTrips) {
    SimulationSpec s = default_spec();
    s.seed = 9;
    s.levels = {RiskLevel::Severe, RiskLevel::Baseline};
    s.aggregate_channel = AggregateLossParams{2.5, DiscreteTable{{1, 4}, {0.25, 0.75}}};
    s.scenario.attacks_per_year_base = 0.125;
    s.device.counts.theta = 0.125;
    const auto j = config_to_json(s);
    EXPECT_EQ(config_to_json(parse_config(nlohmann::json::parse(j.dump()))), j);
}

namespace {

RiskReport sample_report() {
    SimulationSpec s = default_spec();
    s.portfolio_size = 30;
    s.repetitions = 700;
    s.confidence_levels = {0.9, 0.95, 0.99, 0.999};
    s.aggregate_channel = AggregateLossParams{0.7, Lognormal{9.3, 1.7}};
    return run_simulation(s, {2});
}

} // namespace

TEST(ReportJson, RoundTripsBitExactly) {
    const RiskReport r = sample_report();
    const std::string text = report_json_text(r);
    const RiskReport back = report_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back.baseline_expected_loss, r.baseline_expected_loss);
    ASSERT_EQ(back.levels.size(), r.levels.size());
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        const LevelReport &a = r.levels[i], &b = back.levels[i];
        EXPECT_EQ(a.level, b.level);
        EXPECT_EQ(a.expected_present_loss, b.expected_present_loss);
        EXPECT_EQ(a.mean_device_loss, b.mean_device_loss);
        EXPECT_EQ(a.theta, b.theta);
        EXPECT_EQ(a.metrics.expected_loss, b.metrics.expected_loss);
        EXPECT_EQ(a.metrics.premium_pool, b.metrics.premium_pool);
        EXPECT_EQ(a.metrics.shortfall_probability, b.metrics.shortfall_probability);
        EXPECT_EQ(a.metrics.expected_shortfall, b.metrics.expected_shortfall);
        ASSERT_EQ(a.metrics.tail.size(), b.metrics.tail.size());
        for (std::size_t k = 0; k < a.metrics.tail.size(); ++k) {
            EXPECT_EQ(a.metrics.tail[k].confidence, b.metrics.tail[k].confidence);
            EXPECT_EQ(a.metrics.tail[k].var, b.metrics.tail[k].var);
            EXPECT_EQ(a.metrics.tail[k].cte, b.metrics.tail[k].cte);
            EXPECT_EQ(a.metrics.tail[k].var_margin, b.metrics.tail[k].var_margin);
            EXPECT_EQ(a.metrics.tail[k].cte_margin, b.metrics.tail[k].cte_margin);
        }
    }
    EXPECT_EQ(report_json_text(back), text);
}

TEST(ReportJson, SchemaShape) {
    const auto j = report_to_json(sample_report());
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["provenance"]["seed"], 42);
    EXPECT_TRUE(j["provenance"].contains("engine_version"));
    EXPECT_TRUE(j["provenance"]["config"].contains("device"));
    EXPECT_FALSE(j.contains("wall_seconds"));
    const auto& m = j["levels"][0]["metrics"];
    EXPECT_TRUE(m["expected_loss"].is_string());
    EXPECT_TRUE(m["shortfall_probability"].is_number());
    const std::string money = m["tail"][2]["cte"];
    EXPECT_EQ(money.find_first_of("eE,"), std::string::npos);
}

TEST(ReportJson, EmptyMarginIsNull) {
    RiskMetrics m = summarize_level(EmpiricalDistribution({0, 0}), 0, {0.9});
    const auto j = metrics_to_json(m);
    EXPECT_TRUE(j["tail"][0]["var_margin"].is_null());
    const RiskMetrics back = metrics_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_FALSE(back.tail[0].var_margin.has_value());
}

TEST(ReportJson, MalformedInput) {
    EXPECT_THROW(report_from_json(nlohmann::json::parse("{}")), FormatError);
    EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"schema_version": 7})")), FormatError);
}

TEST(MoneyFormat, ShortestFixedDigits) {
    EXPECT_EQ(format_money(0.0), "0");
    EXPECT_EQ(format_money(0.55), "0.55");
    EXPECT_EQ(format_money(15309370.873786414), "15309370.873786414");
    EXPECT_EQ(format_money(1e22), "10000000000000000000000");
    for (double x : {0.1, 1.0 / 3.0, 9137848.5, 45991022.0, 1e-7, 123456789.123456789})
        EXPECT_EQ(parse_money(format_money(x)), x);
    EXPECT_THROW(parse_money("12a"), FormatError);
}

TEST(ReportCsv, ProvenanceAndRows) {
    const RiskReport r = sample_report();
    const std::string csv = report_csv_text(r);
    EXPECT_EQ(csv.rfind("# schema_version: 1\n", 0), 0u);
    EXPECT_NE(csv.find("\nlevel,metric,confidence,value\n"), std::string::npos);
    EXPECT_NE(csv.find("\nsevere,cte,0.999,"), std::string::npos);
    EXPECT_NE(csv.find("\nguarded,shortfall_probability,,"), std::string::npos);
    EXPECT_EQ(csv, report_csv_text(r));
}

TEST(ReportTable, RowOrderAndColumns) {
    const std::string t = report_table_text(sample_report());
    const std::vector<std::string> order{"E(P1)", "Prob(Shortfall)", "E(Shortfall)", "VAR(.90)",
                                         "VAR(.95)", "VAR(.99)", "CTE(.90)", "CTE(.95)",
                                         "CTE(.99)", "Margin VAR(.90)", "Margin CTE(.90)"};
    std::size_t pos = 0;
    for (const auto& row : order) {
        const auto at = t.find("\n" + row + " ", pos);
        ASSERT_NE(at, std::string::npos) << row;
        pos = at;
    }
    const auto header = t.substr(0, t.find('\n'));
    EXPECT_LT(header.find("Guarded (Green)"), header.find("Elevated (Yellow)"));
    EXPECT_LT(header.find("High (Amber)"), header.find("Severe (Red)"));
}
