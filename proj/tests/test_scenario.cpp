#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "affsieve/commands.hpp"
#include "oracles.hpp"

using namespace affsieve;

namespace {

std::string scenario_path(const std::string& name) { return std::string(AFFSIEVE_SCENARIO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(AFFSIEVE_CLI) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const std::string kMinimal =
    "name = t\n"
    "group = SL_n\n"
    "dimension = 2\n"
    "generator = [[1,2],[0,1]]\n"
    "generator = [[1,0],[2,1]]\n"
    "f = tr - 2\n";

}  // namespace

TEST(ScenarioParse, MinimalDefaults) {
  auto sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.name, "t");
  EXPECT_EQ(sc.generators.size(), 2u);
  EXPECT_TRUE(sc.ambient_defaulted);
  ASSERT_EQ(sc.ambient.size(), 1u);
  EXPECT_EQ(sc.ambient[0].eval(MatrixQ{{2, 1}, {1, 1}}), 0);
  EXPECT_EQ(sc.tau, Rational(1, 2));
  EXPECT_EQ(sc.hash.size(), 16u);
  EXPECT_FALSE(sc.levi_semisimple.has_value());
}

TEST(ScenarioParse, HashIgnoresCommentsButNotContent) {
  auto a = parse_scenario(kMinimal);
  auto b = parse_scenario("# a comment\n\n" + kMinimal + "   # trailing\n");
  EXPECT_EQ(a.hash, b.hash);
  auto c = parse_scenario(kMinimal + "S0 = {2}\n");
  EXPECT_NE(a.hash, c.hash);
}

TEST(ScenarioParse, StrictSchema) {
  EXPECT_THROW(parse_scenario(kMinimal + "tua = 1/2\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "f = tr\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "tau = 0.5\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "tau = 3/2\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "no equals sign\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "generator = [[2,0],[0,1]]\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "generator = [[1,0,0],[0,1,0],[0,0,1]]\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "levi_semisimple = maybe\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "family = x12, x21\n"), InvalidInput);
  EXPECT_THROW(parse_scenario("group = SL_n\ndimension = 2\ngenerator = [[1,1],[0,1]]\nf = x11\n"), InvalidInput);
  EXPECT_THROW(parse_scenario(kMinimal + "orbit_vector = [1,2,3]\n"), InvalidInput);
  EXPECT_THROW(load_scenario("/nonexistent/file.cfg"), InvalidInput);
}

TEST(ScenarioParse, KindsAndEchoes) {
  auto h = load_scenario(scenario_path("heisenberg.cfg"));
  EXPECT_EQ(h.kind, GroupKind::Unipotent);
  EXPECT_EQ(h.f.vars(), upper_coordinate_names(3));
  ASSERT_EQ(h.families.size(), 1u);
  EXPECT_EQ(h.families[0].size(), 2u);
  auto a = load_scenario(scenario_path("affine-shift.cfg"));
  EXPECT_EQ(a.kind, GroupKind::Affine);
  EXPECT_EQ(a.matrix_dim(), 3u);
  EXPECT_EQ(a.generators[0](0, 2), 1);
  auto d = parse_scenario(kMinimal + "levi_semisimple = true\ndecomposition_pi = left multiplication\n");
  auto echo = scenario_echo(d);
  EXPECT_EQ(echo["levi_semisimple"], "true");
  EXPECT_EQ(echo["decomposition"]["pi"], "left multiplication");
}

TEST(Commands, RFormulaWorkedExample) {
  Flags f{{"deg", "1"}, {"s", "1"}, {"dim", "3"}, {"tau", "0.5"}, {"omega", "4"}, {"T", "1"}, {"logM0", "1"}};
  auto rec = run_command("r-formula", nullptr, f);
  EXPECT_EQ(rec.json["outputs"]["r"], 104);
  f["tau"] = "1/2";
  EXPECT_EQ(run_command("r-formula", nullptr, f).json["outputs"]["r"], 104);
  f.erase("deg");
  EXPECT_THROW(run_command("r-formula", nullptr, f), InvalidInput);
  EXPECT_THROW(run_command("r-formula", nullptr, {{"bogus", "1"}}), InvalidInput);
}

TEST(Commands, BetaTableMatchesEnumeration) {
  auto sc = load_scenario(scenario_path("sl2-free.cfg"));
  auto rec = run_command("beta-table", &sc, {{"pmax", "31"}});
  for (const auto& row : rec.json["outputs"]["rows"]) {
    long p = row["p"];
    if (p == 2) {
      EXPECT_EQ(row["beta"], "0");
      EXPECT_TRUE(row["ramified"].get<bool>());
      continue;
    }
    if (p <= 7) {
      long n = 0, total = 0;
      for (const auto& e : oracle::sl2_elements(p)) {
        ++total;
        n += (e[0] + e[3]) % p == 2 % p;
      }
      EXPECT_EQ(row["beta"], to_string(make_rational(n, total)));
    }
    EXPECT_EQ(row["beta"], to_string(make_rational(p, p * p - 1)));
  }
}

TEST(Commands, SaturateGolden) {
  auto sc = load_scenario(scenario_path("sl2-free.cfg"));
  auto rec = run_command("saturate", &sc, {{"D", "1"}, {"Lmax", "8"}});
  const auto& out = rec.json["outputs"];
  auto golden = Json::parse(slurp(std::string(AFFSIEVE_SCENARIO_DIR) + "/../tests/golden/saturate-sl2-free.json"));
  EXPECT_EQ(out, golden);
  EXPECT_EQ(out["label"], "empirical lower-confidence estimate");
  EXPECT_EQ(out["levi_semisimple"], "true");
  // Independent check of r_hat = 0: elements with |tr - 2| a power of 2 span all affine-linear functions.
  ASSERT_EQ(out["r_hat"], 0);
  std::vector<std::vector<Rational>> rows;
  for (const auto& g : ball(sc.generator_set(), 8).elements) {
    Rational v = g.trace() - 2;
    if (v == 0) continue;
    bool power_of_two = true;
    for (const auto& [p, e] : oracle::factor(abs(v).get_num())) power_of_two = power_of_two && p == 2;
    if (power_of_two) rows.push_back({1, g(0, 0), g(0, 1), g(1, 0), g(1, 1)});
  }
  std::size_t rank = 0;
  for (std::size_t c = 0; c < 5 && rank < rows.size(); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[rank], rows[piv]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != rank && rows[r][c] != 0) {
        Rational k = rows[r][c] / rows[rank][c];
        for (std::size_t j = 0; j < 5; ++j) rows[r][j] -= k * rows[rank][j];
      }
    ++rank;
  }
  EXPECT_EQ(rank, 5u);
  EXPECT_EQ(out["steps"].back()["sample_sizes"][0], rows.size());
}

TEST(Commands, ThreadsDoNotChangePayload) {
  auto sc = load_scenario(scenario_path("sl2-free.cfg"));
  for (const std::string cmd : {"census", "sequence", "beta-table"}) {
    Flags f = cmd == "beta-table" ? Flags{{"pmax", "23"}} : Flags{{"L", "6"}};
    EXPECT_EQ(run_command(cmd, &sc, f, 1).json.dump(), run_command(cmd, &sc, f, 4).json.dump()) << cmd;
  }
}

TEST(Commands, RecordsEchoScenario) {
  auto sc = load_scenario(scenario_path("sl2-free.cfg"));
  auto rec = run_command("ball", &sc, {{"L", "3"}});
  EXPECT_EQ(rec.json["scenario"]["hash"], sc.hash);
  EXPECT_EQ(rec.json["outputs"]["size"], 53);
  EXPECT_EQ(rec.json["inputs"]["L"], "3");
  EXPECT_EQ(rec.json["version"], kVersion);
  EXPECT_THROW(run_command("ball", nullptr, {}), InvalidInput);
  EXPECT_THROW(run_command("no-such-command", &sc, {}), InvalidInput);
  auto tsv = table_tsv(rec.table);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "length\tshell\tcumulative");
}

TEST(Cli, ExitCodesAndReplay) {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "affsieve_cli_test";
  fs::create_directories(dir);
  std::string s = scenario_path("sl2-free.cfg");
  std::string a = (dir / "a.json").string(), b = (dir / "b.json").string(), t = (dir / "t.tsv").string();
  EXPECT_EQ(run_cli("census --scenario " + s + " --L 5 --out " + a + " --tsv " + t), 0);
  EXPECT_EQ(run_cli("census --scenario " + s + " --L 5 --threads 3 --out " + b), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(t).empty());
  EXPECT_EQ(run_cli("local-density --scenario " + s + " --p 9 --out " + a), 2);
  EXPECT_EQ(run_cli("census --scenario " + s + " --bogus 1"), 2);
  EXPECT_EQ(run_cli("ball --scenario /nonexistent.cfg"), 2);
  std::string capped = (dir / "capped.cfg").string();
  std::ofstream(capped) << kMinimal << "ball_cap = 100\n";
  EXPECT_EQ(run_cli("ball --scenario " + capped + " --L 8 --out " + a), 3);
  fs::remove_all(dir);
}
