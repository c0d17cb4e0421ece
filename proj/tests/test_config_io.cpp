#include "stepiem/config.hpp"
#include "stepiem/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace stepiem;
namespace cf = stepiem::config;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, ParsesSample) {
    auto c = cf::parse_run_config(slurp(STEPIEM_SAMPLES "/lo_symmetric.toml"));
    EXPECT_EQ(c.potential1.kind, "lo");
    EXPECT_EQ(c.q2_wall, -0.5);
    EXPECT_EQ(*c.h, 1.0);
    EXPECT_EQ(c.n_returns, 1000);
    auto ls = cf::level_set(c);
    EXPECT_EQ(ls.e1, 0.5);
}

TEST(Config, AllSamplesParse) {
    for (const char* name : {"lo_symmetric", "lo_rotation_reduction", "quartic_step", "corner", "diagram"})
        EXPECT_NO_THROW(cf::parse_run_config(slurp(std::string(STEPIEM_SAMPLES "/") + name + ".toml"))) << name;
}

TEST(Config, RoundTripIsLossless) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 200; ++k) {
        cf::RunConfig c;
        c.potential1 = {"quartic", std::exp(u(rng))};
        c.potential2 = {k % 2 ? "exponential" : "lo", std::exp(u(rng))};
        c.q1_wall = u(rng);
        c.q2_wall = u(rng) + 1e-300;
        c.h = std::exp(u(rng));
        c.e1 = *c.h * 0.3;
        c.h_grid = {std::exp(u(rng)), 1.0 / 3.0, 1e-17};
        c.theta2_0 = u(rng);
        c.trajectory = k % 3 == 0;
        c.eta = {1e-3, 0.1};
        c.special = "theta2-rational";
        c.seed = k;
        auto text = cf::serialize(c);
        auto back = cf::parse_run_config(text);
        EXPECT_EQ(back, c) << text;
        EXPECT_EQ(cf::serialize(back), text);
    }
}

TEST(Config, OverridesReplaceOrAdd) {
    auto doc = cf::parse("q1_wall = -0.5\nseed = 3\n");
    cf::apply_override(doc, "seed=9");
    cf::apply_override(doc, "potential1 = { kind = \"quartic\", a = 2 }");
    cf::apply_override(doc, "h_grid=[1, 2.5]");
    auto c = cf::from_document(doc);
    EXPECT_EQ(c.seed, 9);
    EXPECT_EQ(c.potential1.kind, "quartic");
    EXPECT_EQ(c.potential1.param, 2.0);
    EXPECT_EQ(c.h_grid, (std::vector<double>{1.0, 2.5}));
    EXPECT_THROW(cf::apply_override(doc, "seed"), cf::ConfigError);
}

TEST(Config, Errors) {
    EXPECT_THROW(cf::parse_run_config("q1_wall = 0.0\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("bogus = 1\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("seed = 1\nseed = 2\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("[section]\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("seed = 1.5\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("potential1 = { kind = \"cubic\", a = 1 }\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("potential1 = { kind = \"lo\", omega = -1 }\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("h = 1\ne1 = 0.5\ne2 = 0.6\n"), cf::ConfigError);
    EXPECT_THROW(cf::parse_run_config("name = \"unterminated\n"), cf::ConfigError);
    EXPECT_THROW(cf::level_set(cf::parse_run_config("h = 1\n")), cf::ConfigError);
}

TEST(Config, CommentsAndUnderscores) {
    auto c = cf::parse_run_config("# header\nn_returns = 1_000  # trailing\nspecial = \"degeneracy\"\n");
    EXPECT_EQ(c.n_returns, 1000);
    EXPECT_EQ(c.special, "degeneracy");
}

TEST(Io, NumbersUseSeventeenDigits) {
    EXPECT_EQ(io::num(0.1), "0.10000000000000001");
    EXPECT_EQ(io::num(2.0), "2");
    EXPECT_EQ(io::num(ExtendedReal::infinity()), "inf");
    EXPECT_EQ(std::stod(io::num(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, SweepCsvHeaderAndRows) {
    StepConfig cfg(Potential1D::linear_oscillator(1.0), Potential1D::linear_oscillator(1.0), -0.5, -0.5);
    std::ostringstream os;
    io::write_sweep_csv(os, sweep(cfg, 1.0, 4));
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "e1,theta2_wall,Theta2,chi2,K2,lam_JR,lam_JK,lam_JK1,thetaL_JR,deg_flags");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
    }
    EXPECT_EQ(rows, 4);
}

TEST(Io, IemJsonPieces) {
    StepConfig cfg(Potential1D::linear_oscillator(1.0), Potential1D::linear_oscillator(1.0), -0.5, -0.5);
    auto pr = compute_params(cfg, LevelSet(0.5, 1.0));
    auto ci = build_step_circle_iem(pr);
    auto j = io::iem_json(pr, ci, induce_fundamental(ci));
    ASSERT_EQ(j["pieces"].size(), 3u);
    EXPECT_EQ(j["pieces"][0]["tag"], "J_R");
    double total = 0.0;
    for (const auto& p : j["pieces"]) total += p["length"].get<double>();
    EXPECT_NEAR(total, two_pi, 1e-12);
    EXPECT_EQ(j["params"]["region"], to_string(Region::step_family));
    EXPECT_TRUE(j["fundamental"]["coincident_cuts"].get<bool>());
}
