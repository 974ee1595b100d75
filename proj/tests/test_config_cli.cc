#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sphero/config.h"
#include "sphero/errors.h"
#include "sphero/simulation.h"
#include "sphero/svg.h"

using namespace sphero;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sphero_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd =
      std::string(SPHEROSIM_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Applies `patch` on top of a shipped scenario and reports the failing field.
std::string field_of(const std::string& patch) {
  nlohmann::json j =
      load_merged_json(resolve_config_path("cart_fixed_point"));
  j.merge_patch(nlohmann::json::parse(patch));
  try {
    scenario_from_json(j, ".");
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, ShippedScenariosLoad) {
  for (const char* name :
       {"cart_fixed_point", "cart_sinusoid", "cart_circle", "gyro_sinusoid",
        "gyro_circle", "reaction_wheels_sinusoid", "reaction_wheels_circle",
        "rw_incline5"}) {
    const Scenario s = load_scenario(name);
    EXPECT_NO_THROW(validate(s.config)) << name;
    EXPECT_EQ(s.config.name, name);
  }
  const Scenario cart = load_scenario("cart_fixed_point");
  EXPECT_EQ(cart.config.params.actuators.size(), 1u);
  EXPECT_NEAR(cart.config.incline, 20.0 * M_PI / 180.0, 1e-15);
  EXPECT_NEAR(cart.config.nominal_incline, 30.0 * M_PI / 180.0, 1e-15);
  EXPECT_EQ(cart.config.gains.kp, 100.0);
  EXPECT_EQ(cart.config.perturb, 0.5);
  const Scenario rw = load_scenario("reaction_wheels_sinusoid");
  ASSERT_EQ(rw.config.params.actuators.size(), 3u);
  EXPECT_NEAR(2 * rw.config.params.actuators[0].mass, 5.78, 1e-12);
  EXPECT_EQ(rw.config.params.actuators[1].offset, 0.11);
  EXPECT_EQ(load_campaign("cart_campaign").size(), 3u);
  EXPECT_EQ(load_campaign("cart_fixed_point").size(), 1u);
}

TEST(Config, ValidationNamesKeyPath) {
  EXPECT_EQ(field_of(R"({"robot": {"r": -0.18}})"), "r");
  EXPECT_EQ(field_of(R"({"robot": {"radius": 0.18}})"), "robot.radius");
  EXPECT_EQ(field_of(R"({"h": "fast"})"), "h");
  EXPECT_EQ(field_of(R"({"reference": {"kind": ""}})"), "reference.kind");
  EXPECT_EQ(field_of(R"({"gains": {"kp": -1}})"), "gains.kp");
  EXPECT_EQ(field_of(R"({"robot": {"actuators": [{"class": "magnet"}]}})"),
            "robot.actuators[0].class");
}

TEST(Config, IncludeChainMerges) {
  const fs::path dir = scratch("include");
  fs::create_directories(dir / "sub");
  write(dir / "sub" / "base.json",
        R"({"robot": {"r": 0.2, "m_b": 2.0}, "seed": 5,
            "reference": {"kind": "circle", "center": [1, 2]}})");
  write(dir / "top.json", R"({
    // comments are allowed
    "include": "sub/base.json",
    "robot": {"m_b": 3.0,
              "actuators": [{"class": "gyroscopic", "m": 1, "I": [1, 1, 1]}]},
    "reference": {"radius": 4}
  })");
  const Scenario s = load_scenario((dir / "top.json").string());
  EXPECT_EQ(s.config.params.radius, 0.2);
  EXPECT_EQ(s.config.params.shell_mass, 3.0);
  EXPECT_EQ(s.config.seed, 5u);
  EXPECT_EQ(s.config.reference.kind, ReferenceKind::kCircle);
  EXPECT_EQ(s.config.reference.cx, 1.0);
  EXPECT_EQ(s.config.reference.radius, 4.0);
}

TEST(Config, ResolvedJsonReproducesScenario) {
  const Scenario s = load_scenario("gyro_circle");
  const Simulator sim(s.config);
  nlohmann::json j = resolved_json(s, sim.nominal());
  const Scenario back = scenario_from_json(j, ".");
  std::ostringstream a, b;
  ScenarioConfig ca = s.config, cb = back.config;
  ca.duration = cb.duration = 0.3;
  write_csv(run(ca), a);
  write_csv(run(cb), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(j.contains("controller_params"));
}

TEST(Config, UnknownNameFails) {
  EXPECT_THROW(resolve_config_path("no_such_scenario"), ValidationError);
}

TEST(Svg, DeterministicAndSinglePoint) {
  Panel one{"t", "x", "y", {{"p", "#000000", {1.0}, {2.0}}}, false};
  const std::string svg = render_svg({one});
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg, render_svg({one}));
  Panel two = one;
  two.series[0].x = {0, 1, 2};
  two.series[0].y = {0, 1, 4};
  EXPECT_NE(render_svg({two}).find("<polyline"), std::string::npos);
}

TEST(Svg, EmptyLogRejected) {
  CsvTable t;
  t.header = {"t", "o_x"};
  EXPECT_THROW(plot_log(t, scratch("empty").string()), ValidationError);
}

TEST(Cli, ExitCodesAndOutputs) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run --config no_such_file --out " + (dir / "x").string()), 1);
  write(dir / "bad.json", R"({"include": ")" SPHERO_CONFIG_DIR
        R"(/cart_fixed_point.json", "robot": {"r": -1}})");
  EXPECT_EQ(cli("run --config " + (dir / "bad.json").string() + " --out " +
                (dir / "bad").string()),
            1);
  // Coplanar wheel axes fail inside the controller.
  write(dir / "coplanar.json", R"({"include": ")" SPHERO_CONFIG_DIR
        R"(/reaction_wheels_sinusoid.json", "perturb": 0, "duration": 0.1,
        "robot": {"actuators": [{"class": "reaction_wheels", "m": 1, "I": [0.01, 0.01, 0.02], "l": 0.1, "axis": [1, 0, 0]},
                                {"class": "reaction_wheels", "m": 1, "I": [0.01, 0.01, 0.02], "l": 0.1, "axis": [0, 1, 0]},
                                {"class": "reaction_wheels", "m": 1, "I": [0.01, 0.01, 0.02], "l": 0.1, "axis": [0.7071067811865476, 0.7071067811865476, 0]}]}})");
  EXPECT_EQ(cli("run --config " + (dir / "coplanar.json").string() +
                " --out " + (dir / "coplanar").string()),
            2);
  EXPECT_EQ(cli("run --config gyro_sinusoid --duration 1 --out " +
                (dir / "gyro").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "gyro" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "gyro" / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "gyro" / "config.json"));
  EXPECT_EQ(cli("plot --log " + (dir / "gyro" / "trajectory.csv").string() +
                " --out " + (dir / "plots").string()),
            0);
  for (const char* f : {"path.svg", "position_error.svg",
                        "angular_velocity_error.svg", "actuators.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "plots" / f)) << f;
  }
  // The echoed config reproduces the run.
  EXPECT_EQ(cli("run --config " + (dir / "gyro" / "config.json").string() +
                " --out " + (dir / "again").string()),
            0);
  EXPECT_EQ(slurp(dir / "gyro" / "trajectory.csv"),
            slurp(dir / "again" / "trajectory.csv"));
  EXPECT_EQ(cli("certify --config gyro_sinusoid"), 0);
  EXPECT_EQ(cli("equilibrium --config cart_fixed_point"), 0);
  EXPECT_EQ(cli("synthesize-gains --config cart_fixed_point"), 2);
}
