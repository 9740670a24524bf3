#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "upsim/config.hpp"
#include "upsim/csv.hpp"

using namespace upsim;

namespace {

ConfigError expect_config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return ConfigError(-1, "", "");
}

}  // namespace

TEST(Config, RenderedDefaultsRoundTrip) {
    const auto text = render_config();
    const auto cfg = parse_config_text(text);
    EXPECT_EQ(render_config(cfg), text);
    EXPECT_EQ(cfg.scenario.sim.dt, Scenario{}.sim.dt);
    EXPECT_EQ(cfg.analysis.max_order, 13);
}

TEST(Config, EmptyDocumentGivesDefaults) {
    EXPECT_EQ(render_config(parse_config_text("# nothing here\n\n")), render_config());
}

TEST(Config, EveryKeyHasUnitAndDoc) {
    for (const auto& [name, b] : detail::key_table()) {
        EXPECT_NE(name.find('.'), std::string::npos) << name;
        EXPECT_TRUE(b.unit && *b.unit) << name;
        EXPECT_TRUE(b.doc && *b.doc) << name;
    }
}

TEST(Config, ParsesValuesRatiosAndComments) {
    const auto cfg = parse_config_text(
        "[grid]\n"
        "v_rms = 220   ; european\n"
        "schedule = 0:1, 0.3:0, 0.4:1\n"
        "[rectifier]\n"
        "tx1_ratio = 12/230\n"
        "[supervisory]\n"
        "transfer_time = 3e-3 # faster relay\n");
    EXPECT_EQ(cfg.scenario.grid.v_rms, 220.0);
    EXPECT_DOUBLE_EQ(cfg.scenario.tx1_ratio, 12.0 / 230.0);
    EXPECT_EQ(cfg.scenario.supervisory.transfer_time, 3e-3);
    ASSERT_EQ(cfg.scenario.grid.schedule.size(), 3u);
    EXPECT_EQ(cfg.scenario.grid.schedule[1], (std::pair<double, bool>{0.3, false}));
    EXPECT_TRUE(cfg.scenario.grid.schedule[2].second);
}

TEST(Config, ErrorsCarryLineAndKey) {
    auto e = expect_config_error("[grid]\nv_rms = 230\nvoltage = 5\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.key(), "grid.voltage");

    e = expect_config_error("[grid]\nf0 = 50\nf0 = 60\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.key(), "grid.f0");

    e = expect_config_error("\n[load]\nr = ten\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.key(), "load.r");
    EXPECT_NE(std::string(e.what()).find("ten"), std::string::npos);

    e = expect_config_error("[mystery]\n");
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.key(), "mystery");

    e = expect_config_error("v_rms = 1\n");
    EXPECT_EQ(e.line(), 1);

    e = expect_config_error("[grid\n");
    EXPECT_EQ(e.line(), 1);

    e = expect_config_error("[grid]\nschedule = 0:1, 0.2:2\n");
    EXPECT_EQ(e.key(), "grid.schedule");

    e = expect_config_error("[analysis]\nmax_order = 12.5\n");
    EXPECT_EQ(e.key(), "analysis.max_order");

    e = expect_config_error("[rectifier]\ntx1_ratio = 1/0\n");
    EXPECT_EQ(e.key(), "rectifier.tx1_ratio");
}

TEST(Config, RangeErrorsNameField) {
    try {
        parse_config_text("[sim]\ndt = 1e-5\n");
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("sim.dt"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_config_text("[analysis]\ncycles = 0\n"), ArgumentError);
}

TEST(Config, MissingFileReported) {
    try {
        load_config("/nonexistent/upsim.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "/nonexistent/upsim.ini");
    }
}

TEST(Config, Overrides) {
    Config cfg;
    apply_override(cfg, "load.r = 500");
    EXPECT_EQ(cfg.scenario.load.r, 500.0);
    apply_override(cfg, "pwm.duty_boost=0.4");
    EXPECT_EQ(cfg.scenario.pwm.duty_boost, 0.4);
    EXPECT_THROW(apply_override(cfg, "load.r"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "load.q=1"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "load.r=-1"), ArgumentError);
}

TEST(Csv, RoundTripIsBitExact) {
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back(std::sin(0.37 * i) * 1e3 / (1.0 + i) + 1e-300 * i);
    const Waveform w("load_v", 25e-6, 25e-6, x);
    std::stringstream buf;
    write_csv(buf, w);
    const auto back = read_csv(buf);
    EXPECT_EQ(back.name(), "load_v");
    ASSERT_EQ(back.size(), w.size());
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_EQ(back[i], w[i]) << i;
    EXPECT_DOUBLE_EQ(back.dt(), w.dt());
    EXPECT_EQ(back.t0(), w.t0());
}

TEST(Csv, HeaderAndRows) {
    std::stringstream buf;
    write_csv(buf, Waveform("i", 0.5, 0.0, {1.0, -2.25}));
    EXPECT_EQ(buf.str(), "t,i\n0,1\n0.5,-2.25\n");
}

TEST(Csv, RejectsMalformedInput) {
    auto bad = [](const std::string& text) {
        std::istringstream in(text);
        EXPECT_THROW(read_csv(in), ArgumentError) << text;
    };
    bad("");
    bad("time,x\n0,1\n1,2\n");
    bad("t,x,y\n0,1,2\n1,2,3\n");
    bad("t,x\n0,1\n");
    bad("t,x\n0,1\n1,abc\n");
    bad("t,x\n0,1\n1,2\n3,4\n");
    bad("t,x\n1,1\n0,2\n");
    bad("t,x\n0 1\n1 2\n");
    EXPECT_THROW(read_csv(std::string("/nonexistent/file.csv")), ArgumentError);
}

TEST(Config, ShippedConfigsLoad) {
    const std::string dir = std::string(UPSIM_SOURCE_DIR) + "/configs/";
    EXPECT_EQ(render_config(load_config(dir + "default.ini")), render_config());
    const auto outage = load_config(dir + "short_outage.ini");
    EXPECT_EQ(outage.scenario.supervisory.transfer_time, 3e-3);
    EXPECT_EQ(outage.scenario.grid.schedule.back(), (std::pair<double, bool>{0.2, false}));
}
