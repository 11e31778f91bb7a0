#include <catch2/catch_amalgamated.hpp>

#include "lanetrack/config.hpp"
#include "lanetrack/simulator.hpp"

using namespace lanetrack;

TEST_CASE("key-value parsing with comments, repeats and line numbers", "[config]") {
    const std::string text =
        "# scenario\n"
        "name = demo\n"
        "\n"
        "n_frames = 12   # trailing comment\n"
        "dropout = 2 4\n"
        "dropout = 8 10 right\n";
    const KeyValueConfig kv = KeyValueConfig::parse_string(text);
    REQUIRE(kv.get_string("name", "") == "demo");
    REQUIRE(kv.get_long("n_frames", 0) == 12);
    REQUIRE(kv.all("dropout").size() == 2);
    REQUIRE(kv.all("dropout")[1]->line == 6);
    REQUIRE_FALSE(kv.has("seed"));
    REQUIRE(kv.get_long("seed", 77) == 77);
}

TEST_CASE("malformed lines and values report their line number", "[config]") {
    try {
        KeyValueConfig::parse_string("a = 1\nbroken line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line == 2);
    }
    const KeyValueConfig kv = KeyValueConfig::parse_string("a = 1\nb = xyz\n");
    try {
        kv.get_double("b", 0.0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line == 2);
        REQUIRE(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("unused keys are discoverable for unknown-key errors", "[config]") {
    const KeyValueConfig kv = KeyValueConfig::parse_string("n_frames = 5\nbogus_key = 1\n");
    (void)kv.get_long("n_frames", 0);
    const auto* unused = kv.first_unused();
    REQUIRE(unused != nullptr);
    REQUIRE(unused->key == "bogus_key");
    REQUIRE(unused->line == 2);
}

TEST_CASE("scenario files round trip", "[config]") {
    const ScenarioConfig original = scenario_preset("A");
    const std::string text = scenario_to_config(original);
    const KeyValueConfig kv = KeyValueConfig::parse_string(text);
    const ScenarioConfig back = scenario_from_config(kv);
    REQUIRE(kv.first_unused() == nullptr);

    REQUIRE(back.name == original.name);
    REQUIRE(back.n_frames == original.n_frames);
    REQUIRE(back.seed == original.seed);
    REQUIRE(back.dynamics.frame_interval == original.dynamics.frame_interval);
    REQUIRE(back.dynamics.sigma_rho == original.dynamics.sigma_rho);
    REQUIRE(back.geometry.focus_y == original.geometry.focus_y);
    REQUIRE(back.lanes.size() == original.lanes.size());
    REQUIRE(back.lanes[0].side == original.lanes[0].side);
    REQUIRE(back.lanes[0].initial.rho == original.lanes[0].initial.rho);
    REQUIRE(back.lanes[0].noise_theta == original.lanes[0].noise_theta);
    REQUIRE(back.clutter.size() == original.clutter.size());
    REQUIRE(back.clutter[0].line.rho == original.clutter[0].line.rho);
    REQUIRE(back.clutter[0].from == original.clutter[0].from);
    REQUIRE(back.clutter[0].intensity == original.clutter[0].intensity);
    REQUIRE(back.dropouts.size() == original.dropouts.size());
    REQUIRE(back.dropouts[0].side == original.dropouts[0].side);
    REQUIRE(back.true_score == original.true_score);
    REQUIRE(back.clutter_score == original.clutter_score);
}

#ifdef PRESETS_DIR
TEST_CASE("shipped preset files match the built-in presets", "[config]") {
    for (const char* name : {"A", "B", "C", "D", "E", "AB"}) {
        const ScenarioConfig builtin = scenario_preset(name);
        const KeyValueConfig kv =
            KeyValueConfig::parse_file(std::string(PRESETS_DIR) + "/" + name + ".cfg");
        const ScenarioConfig from_file = scenario_from_config(kv);
        INFO("preset " << name);
        REQUIRE(from_file.name == builtin.name);
        REQUIRE(from_file.n_frames == builtin.n_frames);
        REQUIRE(from_file.seed == builtin.seed);
        REQUIRE(from_file.dynamics.sigma_rho == builtin.dynamics.sigma_rho);
        REQUIRE(from_file.dynamics.sigma_theta == builtin.dynamics.sigma_theta);
        REQUIRE(from_file.lanes.size() == builtin.lanes.size());
        for (std::size_t i = 0; i < builtin.lanes.size(); ++i) {
            REQUIRE(from_file.lanes[i].side == builtin.lanes[i].side);
            REQUIRE(from_file.lanes[i].initial.rho == builtin.lanes[i].initial.rho);
            REQUIRE(from_file.lanes[i].initial.v_theta == builtin.lanes[i].initial.v_theta);
            REQUIRE(from_file.lanes[i].noise_rho == builtin.lanes[i].noise_rho);
        }
        REQUIRE(from_file.clutter.size() == builtin.clutter.size());
        for (std::size_t i = 0; i < builtin.clutter.size(); ++i) {
            REQUIRE(from_file.clutter[i].line.rho == builtin.clutter[i].line.rho);
            REQUIRE(from_file.clutter[i].from == builtin.clutter[i].from);
            REQUIRE(from_file.clutter[i].to == builtin.clutter[i].to);
        }
        REQUIRE(from_file.dropouts.size() == builtin.dropouts.size());
        REQUIRE(from_file.true_score == builtin.true_score);
        REQUIRE(from_file.clutter_score == builtin.clutter_score);
    }
}
#endif

TEST_CASE("scenario field errors carry line numbers", "[config]") {
    try {
        scenario_from_config(KeyValueConfig::parse_string("lane = right 1 2 3\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line == 1);
    }
    try {
        scenario_from_config(KeyValueConfig::parse_string("lane = middle 1 2 3 4 5 6\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("middle") != std::string::npos);
    }
    try {
        scenario_from_config(KeyValueConfig::parse_string("dropout = 1\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line == 1);
    }
}
