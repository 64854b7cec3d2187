#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/experiment.hpp"
#include "fracsaddle/special_functions.hpp"

namespace fs = fracsaddle;
namespace sfs = std::filesystem;

namespace {

sfs::path scratch(const std::string& name) {
  const sfs::path p = sfs::temp_directory_path() / ("fracsaddle_test_" + name);
  sfs::remove_all(p);
  return p;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

int run(const fs::ExperimentConfig& cfg, const sfs::path& dir, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int rc = fs::run_experiment(cfg, dir, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

fs::ExperimentConfig sample() {
  return fs::load_config(sfs::path(FRACSADDLE_SOURCE_DIR) / "configs" / "example1.ini");
}

int cli(const std::string& args) {
  const int status = std::system((std::string(FRACSADDLE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Format, DoublesRoundTripBitExact) {
  std::vector<double> xs = {0.0,
                            -0.0,
                            1.0 / 3.0,
                            std::numbers::pi,
                            std::numeric_limits<double>::min(),
                            std::numeric_limits<double>::denorm_min(),
                            std::numeric_limits<double>::max(),
                            -std::numeric_limits<double>::epsilon(),
                            std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()};
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto bits = rng();
    const double x = std::bit_cast<double>(bits);
    if (!std::isnan(x)) xs.push_back(x);
  }
  for (double x : xs) EXPECT_TRUE(same_bits(fs::parse_double(fs::format_double(x)), x)) << fs::format_double(x);
  EXPECT_TRUE(std::isnan(fs::parse_double(fs::format_double(std::nan("")))));
  EXPECT_EQ(fs::format_double(0.1), "1.0000000000000001e-01");
  EXPECT_THROW(fs::parse_double("1.0x"), fs::IoError);
  EXPECT_THROW(fs::parse_double(""), fs::IoError);
}

TEST(Csv, RoundTripBitExact) {
  const auto path = scratch("csv") / "t.csv";
  fs::CsvTable t{{"a", "b", "c"}, {}};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int i = 0; i < 100; ++i) t.rows.push_back({g(rng), std::exp(g(rng) / 10), static_cast<double>(i)});
  t.rows.push_back({std::numeric_limits<double>::infinity(), -0.0, 1e-310});
  fs::write_csv(path, t);
  const auto r = fs::read_csv(path);
  ASSERT_EQ(r.header, t.header);
  ASSERT_EQ(r.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(same_bits(r.rows[i][j], t.rows[i][j]));
  }
  EXPECT_EQ(r.column("c"), 2u);
  EXPECT_THROW((void)r.column("d"), fs::IoError);
  EXPECT_THROW(fs::read_csv(path.parent_path() / "missing.csv"), fs::IoError);
  fs::CsvTable ragged{{"a"}, {{1.0, 2.0}}};
  EXPECT_THROW(fs::write_csv(path, ragged), fs::IoError);
}

TEST(Json, SaddleRoundTripBitExact) {
  auto cfg = sample();
  auto p = fs::build_problem(cfg);
  const auto r = fs::solve(*p, p->constant_control(std::vector<double>{0.2, 0.7}), cfg.solver);
  const auto back = fs::parse_saddle_json(fs::saddle_json(r), p->basis());
  ASSERT_EQ(back.u.size(), r.u.size());
  for (std::size_t i = 0; i < r.u.size(); ++i) {
    EXPECT_TRUE(same_bits(back.u.coeffs[i], r.u.coeffs[i]));
    EXPECT_TRUE(same_bits(back.v.coeffs[i], r.v.coeffs[i]));
  }
  EXPECT_TRUE(same_bits(back.action, r.action));
  EXPECT_TRUE(same_bits(back.residual_u, r.residual_u));
  EXPECT_EQ(back.iterations, r.iterations);
  EXPECT_EQ(back.certificate.passed, r.certificate.passed);
  EXPECT_EQ(fs::saddle_json(back), fs::saddle_json(r));

  auto other = fs::enumerate_modes({3, std::numbers::pi}, 2);
  EXPECT_THROW(fs::parse_saddle_json(fs::saddle_json(r), other), fs::IoError);
  EXPECT_THROW(fs::parse_saddle_json("{", p->basis()), fs::IoError);
}

TEST(Config, SampleParsesToDocumentedValues) {
  const auto c = sample();
  EXPECT_EQ(c.mode, fs::RunMode::solve);
  EXPECT_EQ(c.domain.side, std::numbers::pi);
  EXPECT_EQ(c.alpha, 1.5);
  EXPECT_EQ(c.cutoff, 3);
  EXPECT_EQ(c.grid, 7);
  EXPECT_EQ(c.nonlinearity, "linear_coupled");
  EXPECT_EQ(c.nonlinearity_params.at("l1"), "1,1,1:1.0");
  EXPECT_EQ(c.controls.box.size(), 2u);
  EXPECT_EQ(c.control_value, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(c.cost_params.at("s"), "2");
  // the sample only restates defaults outside the forcing and the constant control
  const fs::ExperimentConfig d;
  EXPECT_EQ(c.solver.tol, d.solver.tol);
  EXPECT_EQ(c.sequence.decay, d.sequence.decay);
  EXPECT_EQ(c.sequence.amplitude, d.sequence.amplitude);
  EXPECT_EQ(c.optimizer.initial_step, d.optimizer.initial_step);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Rejections) {
  EXPECT_THROW(fs::parse_config("[nope]\na = 1\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[domain]\nwidth = 1\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[domain]\nalpha = fast\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[run]\nmode = plot\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[controls]\nbox = 0-1\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[solver]\nrandom_init = maybe\n"), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("loose = 1\n"), fs::ValidationError);

  EXPECT_THROW(fs::parse_config("[domain]\ncutoff = 8\ngrid = 7\n").validate(), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[domain]\nalpha = 2.5\n").validate(), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[controls]\nvalue = 2, 0\n").validate(), fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[run]\nmode = stability\n[controls]\np = inf\n[sequence]\nmode = weak_lp\n").validate(),
               fs::ValidationError);
  EXPECT_THROW(fs::parse_config("[run]\nmode = stability\n[sequence]\nmode = weak_star\n").validate(),
               fs::ValidationError);
  EXPECT_NO_THROW(fs::parse_config("[run]\nmode = stability\n[controls]\np = inf\n[sequence]\nmode = weak_star\n").validate());
}

TEST(Config, WeakModesNeedTheSplit) {
  fs::register_nonlinearity("nosplit_test", [](const fs::ParamMap&, const fs::BasisPtr&, double) {
    return std::make_shared<fs::FunctionNonlinearity>(
        "nosplit_test", fs::NonlinearityTraits{}, [](const fs::PointArgs&) { return fs::PointValue{}; });
  });
  auto c = fs::parse_config("[run]\nmode = stability\n[domain]\ngrid = 31\n[nonlinearity]\nname = nosplit_test\n"
                            "[controls]\np = 4\n[sequence]\nmode = weak_lp\n");
  EXPECT_THROW(fs::build_problem(c), fs::ValidationError);
  std::string err;
  EXPECT_EQ(run(c, scratch("nosplit"), nullptr, &err), fs::kExitValidation);
  EXPECT_NE(err.find("split"), std::string::npos);
}

TEST(Run, ConstantsMode) {
  fs::ExperimentConfig c;
  c.mode = fs::RunMode::constants;
  const auto dir = scratch("constants");
  std::string out;
  ASSERT_EQ(run(c, dir, &out), fs::kExitOk);
  const auto j = nlohmann::json::parse(fs::read_text(dir / "constants.json"));
  EXPECT_NEAR(j["rho1_pow_half_alpha"].get<double>(), std::pow(3.0, 0.75), 1e-14);
  EXPECT_EQ(j["critical_exponent"].get<double>(), 4.0);
  EXPECT_EQ(j["sobolev_constant"].get<double>(), fs::sobolev_constant(1.5, 3));
  EXPECT_NE(out.find("2*_alpha         = 4"), std::string::npos);
  EXPECT_TRUE(sfs::exists(dir / "run_info.json"));
}

TEST(Run, SolveHomogeneousWritesZeros) {
  fs::ExperimentConfig c;  // linear_coupled without forcing
  const auto dir = scratch("solve0");
  ASSERT_EQ(run(c, dir), fs::kExitOk);
  const auto t = fs::read_csv(dir / "fields.csv");
  ASSERT_EQ(t.rows.size(), 27u);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r[t.column("u")], 0.0);
    EXPECT_EQ(r[t.column("v")], 0.0);
  }
  const auto j = nlohmann::json::parse(fs::read_text(dir / "result.json"));
  EXPECT_EQ(j["action"].get<double>(), 0.0);
  EXPECT_TRUE(j["converged"].get<bool>());
  const auto info = nlohmann::json::parse(fs::read_text(dir / "run_info.json"));
  EXPECT_EQ(info["exit_code"].get<int>(), 0);
  EXPECT_FALSE(info["timestamp"].get<std::string>().empty());
}

TEST(Run, StabilityConstantSequence) {
  auto c = sample();
  c.mode = fs::RunMode::stability;
  c.sequence.amplitude = 0.0;
  c.sequence.length = 4;
  const auto dir = scratch("stab0");
  ASSERT_EQ(run(c, dir), fs::kExitOk);
  const auto t = fs::read_csv(dir / "dependence.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r[t.column("control_distance")], 0.0);
    EXPECT_EQ(r[t.column("solution_distance")], 0.0);
  }
  const auto j = nlohmann::json::parse(fs::read_text(dir / "verdicts.json"));
  EXPECT_EQ(j["verdicts"]["overall"].get<std::string>(), "pass");
}

TEST(Run, ExitCodes) {
  auto c = sample();
  c.grid = 2;
  EXPECT_EQ(run(c, scratch("bad")), fs::kExitValidation);

  c = sample();
  c.solver.max_iters = 3;
  std::string err;
  EXPECT_EQ(run(c, scratch("noconv"), nullptr, &err), fs::kExitSolver);
  EXPECT_FALSE(err.empty());

  // a regular file where the directory should go
  const auto blocker = scratch("blocker");
  fs::write_text(blocker / "file", "x");
  EXPECT_EQ(run(sample(), blocker / "file" / "sub"), fs::kExitIo);

  c = sample();
  c.mode = fs::RunMode::selftest;
  std::string out;
  EXPECT_EQ(run(c, scratch("selftest"), &out), fs::kExitOk);
  EXPECT_NE(out.find("selftest passed"), std::string::npos);
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  for (auto mode : {fs::RunMode::solve, fs::RunMode::stability, fs::RunMode::optimize}) {
    auto c = sample();
    c.mode = mode;
    c.seed = 11;
    c.solver.random_init = true;
    if (mode == fs::RunMode::stability) c.sequence.length = 6;
    if (mode == fs::RunMode::optimize) {
      c.cutoff = 2;
      c.grid = 5;
      c.baseline_samples = 10;
      c.optimizer.step_tol = 1e-2;
    }
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    ASSERT_EQ(run(c, a), fs::kExitOk) << fs::to_string(mode);
    c.threads = 1;
    ASSERT_EQ(run(c, b), fs::kExitOk) << fs::to_string(mode);
    int compared = 0;
    for (const auto& e : sfs::directory_iterator(a)) {
      const auto name = e.path().filename();
      if (name == "run_info.json") continue;
      EXPECT_EQ(fs::read_text(e.path()), fs::read_text(b / name)) << name;
      ++compared;
    }
    EXPECT_GE(compared, 2) << fs::to_string(mode);
  }
}

TEST(Cli, FlagsEnvironmentAndExitCodes) {
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("--bogus"), fs::kExitValidation);
  EXPECT_EQ(cli("--config /nonexistent/x.ini"), fs::kExitIo);
  EXPECT_EQ(cli("--mode nope"), fs::kExitValidation);

  const auto root = scratch("envroot");
  ::setenv("FRACSADDLE_OUTPUT_ROOT", root.c_str(), 1);
  EXPECT_EQ(cli("--mode constants"), 0);
  ::unsetenv("FRACSADDLE_OUTPUT_ROOT");
  EXPECT_TRUE(sfs::exists(root / "constants" / "constants.json"));

  const auto out = scratch("cliout");
  const std::string cfg = (sfs::path(FRACSADDLE_SOURCE_DIR) / "configs" / "example1.ini").string();
  EXPECT_EQ(cli("--config " + cfg + " --out " + out.string() + " --seed 3 --threads 1 --verbose"), 0);
  const auto info = nlohmann::json::parse(fs::read_text(out / "run_info.json"));
  EXPECT_EQ(info["config"]["seed"].get<int>(), 3);
  EXPECT_EQ(info["config"]["threads"].get<int>(), 1);
  EXPECT_TRUE(sfs::exists(out / "iterations.csv"));
}
