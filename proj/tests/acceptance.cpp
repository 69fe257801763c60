// Acceptance gate: one [PASS]/[FAIL] line per criterion. Exit status is the
// number of failing criteria (capped at 1 for ctest).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "affsieve/commands.hpp"
#include "oracles.hpp"

using namespace affsieve;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << title << " -- " << detail << std::endl;
  if (!ok) ++failures;
}

template <class Fn>
void criterion(int id, const std::string& title, Fn fn) {
  try {
    std::string detail;
    bool ok = fn(detail);
    report(id, title, ok, detail);
  } catch (const std::exception& e) {
    report(id, title, false, std::string("exception: ") + e.what());
  }
}

GeneratorSet free_pair() { return GeneratorSet({MatrixQ{{1, 2}, {0, 1}}, MatrixQ{{1, 0}, {2, 1}}}, true); }

std::string scenario(const std::string& name) { return std::string(AFFSIEVE_SCENARIO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(AFFSIEVE_CLI) + " " + args + " --quiet > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// #{g in SL_2(Z/p) : pred(g)} and |SL_2(Z/p)| by enumeration.
template <class Pred>
std::pair<long, long> oracle_sl2(long p, Pred pred) {
  long n = 0, total = 0;
  for (const auto& e : oracle::sl2_elements(p)) {
    ++total;
    n += pred(e) ? 1 : 0;
  }
  return {n, total};
}

long oracle_trace_two(long p) {
  return oracle_sl2(p, [p](const auto& e) { return (e[0] + e[3]) % p == 2 % p; }).first;
}

Integer classical_sl2_order(long q) {
  Integer out = 1;
  for (long p = 2; p <= q; ++p)
    if (q % p == 0) {
      out *= Integer(p) * (Integer(p) * p - 1);
      while (q % p == 0) q /= p;
    }
  return out;
}

bool z_rough(long long v, double z) {
  for (const auto& [p, e] : oracle::trial_factor(v))
    if (p.get_d() <= z) return false;
  return true;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;

  criterion(1, "local density of tr-2 on the free SL2 pair", [](std::string& d) {
    auto t0 = clock::now();
    auto f = parse_matrix_poly("tr - 2", 2);
    bool ok = true;
    for (long p : {3L, 5L, 7L, 11L, 13L}) {
      auto ld = local_density(free_pair(), f, p);
      auto [n, total] = oracle_sl2(p, [p](const auto& e) { return (e[0] + e[3]) % p == 2 % p; });
      ok = ok && ld.beta == make_rational(p, p * p - 1) && ld.beta == make_rational(n, total);
    }
    double secs = std::chrono::duration<double>(clock::now() - t0).count();
    d = "beta(p) = p/(p^2-1) for p in {3,5,7,11,13}, matches enumeration; " + std::to_string(secs) + " s";
    return ok && secs < 5.0;
  });

  criterion(2, "multiplicativity of N_f on squarefree moduli", [](std::string& d) {
    auto f = parse_matrix_poly("tr - 2", 2);
    Integer n15 = count_Nf(generate_image(free_pair(), 15), f, 15);
    Integer n21 = count_Nf(generate_image(free_pair(), 21), f, 21);
    long o3 = oracle_trace_two(3), o5 = oracle_trace_two(5), o7 = oracle_trace_two(7);
    d = "N_f(15) = " + n15.get_str() + " vs " + std::to_string(o3) + "*" + std::to_string(o5) + ", N_f(21) = " +
        n21.get_str() + " vs " + std::to_string(o3) + "*" + std::to_string(o7);
    return n15 == 225 && n15 == o3 * o5 && n21 == 441 && n21 == o3 * o7;
  });

  criterion(3, "strong approximation on the free SL2 pair", [](std::string& d) {
    bool ok = true;
    std::string s;
    for (long q : {3L, 5L, 7L, 15L, 35L}) {
      auto v = verify_strong_approx(free_pair(), q, sl_expected_order(2));
      Integer expected = classical_sl2_order(q);
      if (q <= 7) ok = ok && expected == static_cast<long>(oracle::sl2_elements(q).size());
      ok = ok && v.status == StrongApproxVerdict::Holds && v.image_order == expected;
      s += std::to_string(q) + ":" + v.status_name() + " ";
    }
    auto two = verify_strong_approx(free_pair(), 2, sl_expected_order(2));
    ok = ok && two.status == StrongApproxVerdict::Fails && two.image_order == 1;
    d = s + "2:" + two.status_name() + " (image order " + two.image_order.get_str() + ")";
    return ok;
  });

  criterion(4, "ramified primes of tr-2", [](std::string& d) {
    auto sc = load_scenario(scenario("sl2-free.cfg"));
    auto r = run_command("ramified", &sc, {{"L", "3"}, {"pmax", "100"}});
    auto table = run_command("beta-table", &sc, {{"pmax", "13"}});
    const auto& row2 = table.json["outputs"]["rows"][0];
    bool fiat = row2["p"] == 2 && row2["beta"] == "0" && row2["ramified"] == true;
    // Oracle: tr - 2 vanishes mod 2 on every element of a ball, and not mod 3.
    bool all_even = true, some_odd3 = false;
    for (const auto& g : ball(free_pair(), 4).elements) {
      Integer v = Rational(g.trace() - 2).get_num();
      all_even = all_even && mpz_even_p(v.get_mpz_t());
      some_odd3 = some_odd3 || !mpz_divisible_ui_p(v.get_mpz_t(), 3);
    }
    d = "confirmed = " + r.json["outputs"]["confirmed"].dump() + ", beta(2) row " + row2.dump();
    return r.json["outputs"]["confirmed"] == Json::array({"2"}) && fiat && all_even && some_odd3;
  });

  criterion(5, "splitting shape of x11^2 + 1 on SL2", [](std::string& d) {
    auto eqs = std::vector<MultiPoly>{parse_matrix_poly("det - 1", 2), parse_matrix_poly("x11^2 + 1", 2)};
    bool ok = true;
    std::vector<std::int64_t> small;
    for (long p : {3L, 5L, 7L, 11L, 13L, 17L, 19L, 23L, 29L}) small.push_back(p);
    auto c = splitting_census(eqs, 2, small, 4);
    for (const auto& row : c.rows) {
      long p = row.p;
      long expected_c = p % 4 == 1 ? 2 : 0;
      Integer expected_count = expected_c * Integer(p) * p;
      if (p <= 13) {
        auto [n, total] = oracle_sl2(p, [p](const auto& e) { return (e[0] * e[0] + 1) % p == 0; });
        ok = ok && row.count == n;
      }
      ok = ok && row.c_hat && *row.c_hat == expected_c && row.count == expected_count;
    }
    std::vector<std::int64_t> primes;
    for (auto p : primes_up_to(2000))
      if (p > 2) primes.push_back(static_cast<std::int64_t>(p));
    auto big = splitting_census(eqs, 2, primes, 4, {}, 4);
    std::size_t twos = big.frequencies.count(2) ? big.frequencies.at(2) : 0;
    double share = static_cast<double>(twos) / static_cast<double>(primes.size() - big.unclassified);
    d = "c_hat exact for odd p <= 29; share of c_hat = 2 over odd p <= 2000: " + std::to_string(share);
    return ok && big.unclassified == 0 && std::abs(share - 0.5) <= 0.05;
  });

  criterion(6, "sieve-dimension calibration", [](std::string& d) {
    bool ok = true;
    std::string s;
    for (double c : {1.0, 2.0}) {
      std::map<Integer, double> table;
      for (auto p : primes_up_to(10000)) table[Integer(static_cast<unsigned long>(p))] = c / static_cast<double>(p);
      auto fit = sieve_dimension_fit(table, 2, 10000);
      ok = ok && std::abs(fit.slope - c) <= 0.05 * c;
      s += "c=" + std::to_string(c).substr(0, 3) + " t=" + std::to_string(fit.slope) + "; ";
    }
    auto sc = load_scenario(scenario("sl2-free.cfg"));
    auto rec = run_command("sieve-dim", &sc, {{"source", "variety"}, {"w", "2"}, {"z", "2000"}}, 4);
    double t = rec.json["outputs"]["t_hat"];
    // The variety ratio is checked against the closed form at a few primes.
    for (long p : {101L, 1009L, 1999L})
      ok = ok && variety_beta(sc.ambient, sc.f, p).beta == make_rational(p, p * p - 1);
    d = s + "tr-2 t=" + std::to_string(t);
    return ok && std::abs(t - 1.0) <= 0.25;
  });

  criterion(7, "Brun bracketing on n(n+2)", [](std::string& d) {
    SieveSequence seq;
    for (long n = 3; n <= 10000; ++n) {
      seq.entries[Integer(n) * (n + 2)] += 1;
      seq.X += 1;
    }
    bool ok = true;
    std::string s;
    for (double z : {7.0, 10.0, 13.0}) {
      long exact = 0;
      for (long n = 3; n <= 10000; ++n) exact += z_rough(static_cast<long long>(n) * (n + 2), z);
      Integer gap_prev = -1;
      for (unsigned b : {2u, 3u}) {
        auto bb = brun_bound(seq, z, b);
        ok = ok && bb.exact == exact && bb.lower <= exact && exact <= bb.upper;
        Integer gap = bb.upper - bb.lower;
        if (gap_prev >= 0) ok = ok && (gap < gap_prev || (gap == 0 && gap_prev == 0));
        s += "z=" + std::to_string(static_cast<int>(z)) + ",b=" + std::to_string(b) + ": " + bb.lower.get_str() +
             "<=" + std::to_string(exact) + "<=" + bb.upper.get_str() + " ";
        gap_prev = gap;
      }
    }
    d = s;
    return ok;
  });

  criterion(8, "unipotent sieve end to end on the Heisenberg group", [](std::string& d) {
    auto out = (std::filesystem::temp_directory_path() / "acceptance-uni.json").string();
    if (run_cli("uni-sieve --scenario " + scenario("heisenberg.cfg") + " --out " + out) != 0) {
      d = "CLI failed";
      return false;
    }
    auto rec = Json::parse(slurp(out));
    const auto& o = rec["outputs"];
    PrimeSet S = parse_prime_set([&] {
      std::string s;
      for (const auto& p : o["S"]) s += (s.empty() ? "" : ",") + p.get<std::string>();
      return s;
    }());
    unsigned r = o["r"];
    std::size_t verified = 0, total = o["points"].size();
    for (const auto& pt : o["points"]) {
      // Matrix route: integral upper unipotent, log computed by hand.
      const auto& m = pt["element"];
      auto q = [&](int i, int j) { return parse_rational(m[i][j].get<std::string>()); };
      bool shape = q(0, 0) == 1 && q(1, 1) == 1 && q(2, 2) == 1 && q(1, 0) == 0 && q(2, 0) == 0 && q(2, 1) == 0;
      Rational a = q(0, 1), b = q(1, 2), c = q(0, 2);
      bool integral = a.get_den() == 1 && b.get_den() == 1 && c.get_den() == 1;
      Rational x13 = c - a * b / 2;
      bool value = parse_rational(pt["p_value"].get<std::string>()) == x13 && x13 != 0;
      unsigned omega = 0;
      if (value) {
        Integer num = abs(x13).get_num(), den = x13.get_den();
        for (const auto& [p, e] : oracle::factor(num))
          if (!S.contains(p)) omega += e;
        for (const auto& [p, e] : oracle::factor(den))
          if (!S.contains(p)) value = false;
      }
      bool coprime = true;
      for (const auto& [p, e] : oracle::factor(gcd(a.get_num(), b.get_num())))
        coprime = coprime && S.contains(p);
      if (a == 0 && b == 0) coprime = false;
      if (shape && integral && value && omega <= r && coprime) ++verified;
    }
    bool bad_in_S = true;
    for (const auto& level : o["levels"]) {
      std::string ls;
      for (const auto& p : level["S"]) ls += (ls.empty() ? "" : ",") + p.get<std::string>();
      PrimeSet LS = parse_prime_set(ls);
      for (const auto& bad : level["single_instance_bad_primes"])
        for (const auto& p : bad) bad_in_S = bad_in_S && LS.contains(parse_integer(p.get<std::string>())) &&
                                              S.contains(parse_integer(p.get<std::string>()));
    }
    d = std::to_string(verified) + "/" + std::to_string(total) + " certificates re-verified, r = " + std::to_string(r) +
        ", S = " + S.to_string();
    return total >= 100 && verified == total && bad_in_S;
  });

  criterion(9, "r formula", [](std::string& d) {
    long long r = r_formula(1, 1, 3, 0.5, 4, 1, 1);
    // Direct evaluation: floor(9 * 2 * 1 * 1 * 4 * 1 / (1/2 * log 4)) + 1.
    long long direct = static_cast<long long>(std::floor(72.0 / (0.5 * std::log(4.0)))) + 1;
    bool mono = true;
    for (unsigned deg = 1; deg <= 3; ++deg)
      for (std::size_t s = 0; s <= 2; ++s) {
        long long v = r_formula(deg, s, 3, 0.5, 4, 1, 1);
        if (s > 0) mono = mono && v >= r_formula(deg, s - 1, 3, 0.5, 4, 1, 1);
        if (deg > 1) mono = mono && v >= r_formula(deg - 1, s, 3, 0.5, 4, 1, 1);
      }
    auto rec = run_command("r-formula", nullptr,
                           {{"deg", "1"}, {"s", "1"}, {"dim", "3"}, {"tau", "0.5"}, {"omega", "4"}, {"T", "1"}, {"logM0", "1"}});
    d = "r = " + std::to_string(r) + " (direct " + std::to_string(direct) + ", CLI " + rec.json["outputs"]["r"].dump() +
        "), monotone on 3x3 grid: " + (mono ? "yes" : "no");
    return r == 104 && direct == 104 && rec.json["outputs"]["r"] == 104 && mono;
  });

  criterion(10, "2^m trend table and Borel-Cantelli sums", [](std::string& d) {
    TorusSpec spec{{MatrixQ{{2, 0}, {0, Rational(1, 2)}}}, 120};
    auto t = prime_factor_trend(spec, parse_matrix_poly("(x11 - 1)*(x11 - 2)", 2), PrimeSet{2}, {}, 4);
    bool rows_ok = t.rows.size() == 120;
    std::size_t matched = 0;
    for (const auto& row : t.rows) {
      long m = row.m[0];
      Integer a = pow(Integer(2), static_cast<unsigned long>(m)) - 1;
      Integer b = pow(Integer(2), static_cast<unsigned long>(m - 1)) - 1;  // (2^m - 2) / 2
      if (m == 1) {
        if (row.zero) ++matched;
        continue;
      }
      std::map<mpz_class, unsigned> odd;
      for (const auto& [p, e] : oracle::factor(a)) odd[p] += e;
      for (const auto& [p, e] : oracle::factor(b)) odd[p] += e;
      odd.erase(2);
      unsigned total = 0;
      for (const auto& [p, e] : odd) total += e;
      if (row.omega_distinct && *row.omega_distinct == odd.size() && row.omega_total && *row.omega_total == total &&
          row.value == Rational(a * b * 2))
        ++matched;
    }
    bool m5 = t.rows[4].omega_distinct && *t.rows[4].omega_distinct == 3;
    auto bc = borel_cantelli_sum(1, 2, 1, {10, 100, 1000, 10000, 100000, 1000000});
    long double inc = bc.checkpoints[5].second - bc.checkpoints[4].second;
    std::ostringstream os;
    os << "omega_odd(30*31) = " << (m5 ? 3 : -1) << ", trend rows matched " << matched << "/120, increment 1e5->1e6 = "
       << static_cast<double>(inc) << ", bound " << static_cast<double>(bc.tail_bound);
    d = os.str();
    return rows_ok && m5 && matched == 120 && inc < 2e-5L && bc.bounded && bc.increments_decreasing;
  });

  criterion(11, "deterministic replay of every command", [](std::string& d) {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "acceptance-replay";
    fs::create_directories(dir);
    const std::string free = "--scenario " + scenario("sl2-free.cfg");
    const std::vector<std::string> runs = {
        "ball " + free + " --L 5",
        "orbit --scenario " + scenario("affine-shift.cfg") + " --L 4",
        "local-density " + free + " --p 11",
        "beta-table " + free + " --pmax 31",
        "strong-approx " + free + " --q 2,3,15",
        "ramified " + free,
        "variety-count --scenario " + scenario("sl2-x11sq.cfg") + " --pmax 50",
        "splitting-census --scenario " + scenario("sl2-x11sq.cfg") + " --pmax 100",
        "sequence " + free + " --L 5",
        "decompose " + free + " --L 5 --moduli 30",
        "level-report " + free + " --L 5 --moduli 30",
        "sieve-dim " + free + " --z 300",
        "brun-bound " + free + " --L 5 --z 13 --b 2",
        "census " + free + " --L 5",
        "saturate " + free + " --D 1 --Lmax 6",
        "uni-sieve --scenario " + scenario("heisenberg.cfg"),
        "torus-heuristic --scenario " + scenario("pow2.cfg") + " --M 20 --trend_M 40",
        "r-formula --deg 1 --s 1 --dim 3 --tau 0.5 --omega 4 --T 1 --logM0 1",
    };
    std::size_t identical = 0;
    std::string bad;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      auto a = (dir / ("a" + std::to_string(i) + ".json")).string();
      auto b = (dir / ("b" + std::to_string(i) + ".json")).string();
      int ra = run_cli(runs[i] + " --out " + a);
      int rb = run_cli(runs[i] + " --threads 4 --out " + b);
      if (ra == 0 && rb == 0 && slurp(a) == slurp(b) && !slurp(a).empty()) {
        ++identical;
      } else {
        bad += runs[i].substr(0, runs[i].find(' ')) + " ";
      }
    }
    fs::remove_all(dir);
    d = std::to_string(identical) + "/" + std::to_string(runs.size()) +
        " commands byte-identical across replays (threads 1 vs 4)" + (bad.empty() ? "" : "; differing: " + bad);
    return identical == runs.size();
  });

  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
