#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"

namespace fs = std::filesystem;
using fracsmooth::cli::Config;
using fracsmooth::cli::ConfigError;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fracsmooth_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code = -1;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(FRACSMOOTH_CLI) + " " + args + " --out " + dir.string() +
                          " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

Config parse(const std::string& text) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "exp.cfg") << text;
  return Config::from_file((dir / "exp.cfg").string());
}

}  // namespace

TEST(Config, ParsesKeyValueLines) {
  Config c = parse("# experiment\nsigma = 0.4   # volatility\n\nn_list=8, 16,32\npayoff=binary\n");
  EXPECT_DOUBLE_EQ(c.real("sigma", 1.0), 0.4);
  EXPECT_EQ(c.counts("n_list", {}), (std::vector<std::size_t>{8, 16, 32}));
  EXPECT_EQ(c.choice("payoff", "call", {"call", "binary"}), "binary");
  EXPECT_EQ(c.integer("m", 100), 100u);
  EXPECT_NO_THROW(c.reject_unused());
  EXPECT_EQ(c.resolved().at("m"), "100");
  EXPECT_EQ(c.resolved().at("n_list"), "8,16,32");
}

TEST(Config, OverridesReplaceFileValues) {
  Config c = parse("m = 10\n");
  c.set("m", "20");
  EXPECT_EQ(c.integer("m", 1), 20u);
}

TEST(Config, ErrorsNameTheField) {
  auto field_of = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(e.field()), std::string::npos);
      return e.field();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of([] { parse("a = 1\na = 2\n"); }), "a");
  EXPECT_EQ(field_of([] { parse("sigma\n"); }), "config");
  EXPECT_EQ(field_of([] {
              Config c = parse("sigma = -1\n");
              c.real("sigma", 1.0, [](double v) { return v > 0; }, "> 0");
            }),
            "sigma");
  EXPECT_EQ(field_of([] {
              Config c = parse("sigma = abc\n");
              c.real("sigma", 1.0);
            }),
            "sigma");
  EXPECT_EQ(field_of([] {
              Config c = parse("m = 1\n");
              c.integer("m", 10, 2);
            }),
            "m");
  EXPECT_EQ(field_of([] {
              Config c = parse("measure = physical\n");
              c.choice("measure", "historical", {"historical", "martingale"});
            }),
            "measure");
  EXPECT_EQ(field_of([] {
              Config c = parse("n_list = 8,x\n");
              c.counts("n_list", {});
            }),
            "n_list");
  EXPECT_EQ(field_of([] {
              Config c = parse("sigmaa = 1\n");
              c.real("sigma", 1.0);
              c.reject_unused();
            }),
            "sigmaa");
  EXPECT_EQ(field_of([] { Config::from_file("/nonexistent/exp.cfg"); }), "config");
}

TEST(Cli, AffinePriceTableHasConstantDelta) {
  const fs::path dir = scratch("price");
  const CliRun r = run_cli("price --payoff affine --c0 0.5 --c1 0.7 --s_points 5", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "price.csv");
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      EXPECT_EQ(line, "t,s,price,delta,gamma");
      header = true;
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_DOUBLE_EQ(v[2], 0.5 + 0.7 * v[1]);
    EXPECT_DOUBLE_EQ(v[3], 0.7);
    EXPECT_EQ(v[4], 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 15);
  EXPECT_TRUE(fs::exists(dir / "price_summary.json"));
}

TEST(Cli, OutputsEchoTheResolvedConfig) {
  const fs::path dir = scratch("echo");
  ASSERT_EQ(run_cli("price --seed 5 --sigma 0.3", dir).code, 0);
  const std::string csv = slurp(dir / "price.csv");
  EXPECT_NE(csv.find("# command=price"), std::string::npos);
  EXPECT_NE(csv.find("# sigma=0.3"), std::string::npos);
  // defaults are echoed too
  EXPECT_NE(csv.find("# s0=1"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("codes");
  CliRun bad = run_cli("price --sigma -1", dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("field=sigma"), std::string::npos) << bad.err;
  EXPECT_EQ(run_cli("price --sigmaa 1", dir).code, 2);
  EXPECT_EQ(run_cli("price --config /nonexistent.cfg", dir).code, 2);
  EXPECT_EQ(run_cli("nosuchcommand", dir).code, 2);
  const CliRun exact =
      run_cli("hedge-sweep --payoff affine --c1 1 --n_list 4,8,16,32,64 --m 100", dir);
  EXPECT_EQ(exact.code, 3);
  EXPECT_NE(exact.err.find("kind=exact_hedge"), std::string::npos) << exact.err;
}

TEST(Cli, ConfigFileAndOverride) {
  const fs::path dir = scratch("cfgfile");
  std::ofstream(dir / "exp.cfg") << "payoff = binary\nn_list = 4,8,16,32,64\nm = 200\nseed = 3\n";
  ASSERT_EQ(run_cli("hedge-sweep --config " + (dir / "exp.cfg").string() + " --m 300", dir).code, 0);
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_NE(csv.find("# m=300"), std::string::npos);
  EXPECT_NE(csv.find("# payoff=binary"), std::string::npos);
  EXPECT_NE(csv.find("# seed=3"), std::string::npos);
}

TEST(Cli, OutputsDoNotDependOnThreadCount) {
  const std::vector<std::string> runs{
      "price --payoff power_holder --holder_theta 0.25",
      "hedge-sweep --payoff power_holder --holder_theta 0.25 --n_list 4,8,16,32,64 --m 400",
      "smoothness --payoff binary --levels 12 --profile_levels 12",
      "chaos --payoff call --K 64 --theta_list 0.5",
      "weaklimit --payoff binary --theta 0.4 --n 16 --m 400 --clock_levels 12 --lp_m 200 --lp_levels 8",
      "zreg --payoff call --n_list 4,8,16,32"};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path one = scratch("det1_" + std::to_string(i));
    const fs::path eight = scratch("det8_" + std::to_string(i));
    const CliRun a = run_cli(runs[i] + " --seed 11 --threads 1", one);
    const CliRun b = run_cli(runs[i] + " --seed 11 --threads 8", eight);
    ASSERT_EQ(a.code, 0) << runs[i] << ": " << a.err;
    ASSERT_EQ(b.code, 0) << runs[i] << ": " << b.err;
    int files = 0;
    for (const auto& entry : fs::directory_iterator(one)) {
      const auto name = entry.path().filename();
      if (name == "stderr.txt") continue;
      ASSERT_TRUE(fs::exists(eight / name)) << name;
      EXPECT_EQ(slurp(entry.path()), slurp(eight / name)) << runs[i] << " " << name;
      ++files;
    }
    EXPECT_GE(files, 3) << runs[i];
  }
}
