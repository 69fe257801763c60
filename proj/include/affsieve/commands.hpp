#pragma once

/**
 * @file commands.hpp
 * @brief The command layer behind the `affsieve` tool: each command turns a
 * scenario and string flags into a deterministic JSON record plus a flat table.
 */

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "affsieve/scenario.hpp"

namespace affsieve {

using Json = nlohmann::json;
using Flags = std::map<std::string, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CommandOutput {
  Json outputs = Json::object();
  std::vector<std::string> budgets_hit;
  Table table;
};

struct CommandSpec {
  std::string name;
  bool needs_scenario = true;
  std::vector<std::pair<std::string, std::string>> flags;  // name, help
  std::function<CommandOutput(const Scenario*, const Flags&, unsigned threads)> run;
};

inline constexpr const char* kVersion = "affsieve 1.0.0";

namespace detail {

inline std::string str(const Integer& z) { return z.get_str(); }
inline std::string str(const Rational& q) { return to_string(q); }

inline Json json_matrix(const MatrixQ& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(str(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline Json json_vector(const VectorQ& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(str(x));
  return out;
}

inline Json json_primes(const PrimeSet& S) {
  Json out = Json::array();
  for (const auto& p : S) out.push_back(str(p));
  return out;
}

inline Json json_factors(const Factorization& f) {
  Json out = Json::array();
  for (const auto& [p, e] : f.factors) out.push_back(Json::array({str(p), e}));
  return out;
}

inline Json json_density(const DensityVerdict& v) {
  Json vanish = Json::array();
  for (const auto& p : v.vanishing) vanish.push_back(p.to_string());
  return Json{{"dense", v.dense},
              {"underdetermined", v.underdetermined},
              {"points_needed", v.points_needed},
              {"monomials", v.monomials},
              {"rank", v.rank},
              {"ambient_dimension", v.ambient_dimension},
              {"vanishing", vanish}};
}

inline const std::string* flag(const Flags& f, const std::string& k) {
  auto it = f.find(k);
  return it == f.end() ? nullptr : &it->second;
}

inline unsigned long flag_uint(const Flags& f, const std::string& k, std::optional<unsigned long> def = {}) {
  if (auto v = flag(f, k)) return parse_unsigned("--" + k, *v);
  if (!def) throw InvalidInput("missing required flag --" + k);
  return *def;
}

inline unsigned flag_u(const Flags& f, const std::string& k, std::optional<unsigned long> def = {}) {
  return static_cast<unsigned>(flag_uint(f, k, def));
}

// Accepts "3/4" or a decimal such as "0.75".
inline double flag_double(const Flags& f, const std::string& k, std::optional<double> def = {}) {
  if (auto v = flag(f, k)) {
    try {
      if (v->find('/') != std::string::npos) return parse_rational(*v).get_d();
      std::size_t used = 0;
      double d = std::stod(*v, &used);
      if (used != v->size()) throw InvalidInput("");
      return d;
    } catch (const std::exception&) {
      throw InvalidInput("flag --" + k + " is not a number: '" + *v + "'");
    }
  }
  if (!def) throw InvalidInput("missing required flag --" + k);
  return *def;
}

inline std::vector<unsigned long> flag_list(const Flags& f, const std::string& k,
                                            std::optional<std::vector<unsigned long>> def = {}) {
  if (auto v = flag(f, k)) {
    std::vector<unsigned long> out;
    for (const auto& part : split_top_level(*v, ',')) out.push_back(parse_unsigned("--" + k, part));
    return out;
  }
  if (!def) throw InvalidInput("missing required flag --" + k);
  return *def;
}

inline std::vector<double> flag_doubles(const Flags& f, const std::string& k, std::vector<double> def) {
  auto v = flag(f, k);
  if (!v) return def;
  std::vector<double> out;
  for (const auto& part : split_top_level(*v, ',')) {
    Flags one{{k, part}};
    out.push_back(flag_double(one, k));
  }
  return out;
}

inline bool flag_bool(const Flags& f, const std::string& k, bool def) {
  if (auto v = flag(f, k)) return parse_bool("--" + k, *v);
  return def;
}

inline std::vector<std::int64_t> primes_between(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::int64_t> out;
  for (auto p : primes_up_to(hi))
    if (p >= lo) out.push_back(static_cast<std::int64_t>(p));
  return out;
}

inline const Scenario& need(const Scenario* sc) {
  if (!sc) throw InvalidInput("this command needs --scenario");
  return *sc;
}

inline unsigned default_group_dim(const Scenario& sc) {
  const auto n = sc.matrix_dim();
  if (sc.kind == GroupKind::SLn) return static_cast<unsigned>(n * n - 1);
  if (sc.kind == GroupKind::Unipotent) return static_cast<unsigned>(n * (n - 1) / 2);
  return static_cast<unsigned>(sc.dimension * sc.dimension + sc.dimension);
}

// beta(p) for the sieve: image counts by default; declared ramified primes are zero.
inline BetaProvider scenario_beta(const Scenario& sc) {
  return local_beta_provider(sc.generator_set(), sc.f, sc.ramified, sc.image_cap);
}

inline std::vector<unsigned> saturation_schedule(const Scenario& sc, unsigned Lmax) {
  std::set<unsigned> s;
  for (unsigned L : sc.L_schedule)
    if (L <= Lmax) s.insert(L);
  s.insert(Lmax);
  if (s.size() == 1 && Lmax >= 2) s.insert(Lmax - 2);
  return {s.begin(), s.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------

namespace detail {

inline CommandOutput cmd_ball(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned L = flag_u(f, "L", 4);
  auto B = ball(sc.generator_set(), L, sc.ball_options(threads));
  CommandOutput out;
  Json shells = Json::array();
  out.table.header = {"length", "shell", "cumulative"};
  std::size_t cum = 0;
  for (unsigned k = 0; k <= L; ++k) {
    std::size_t sz = B.shell_size(k);
    cum += sz;
    shells.push_back(sz);
    out.table.rows.push_back({std::to_string(k), std::to_string(sz), std::to_string(cum)});
  }
  out.outputs = {{"L", L}, {"size", B.size()}, {"shell_sizes", shells}};
  return out;
}

inline CommandOutput cmd_orbit(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  if (!sc.orbit_vector) throw InvalidInput("orbit: scenario has no orbit_vector");
  unsigned L = flag_u(f, "L", 4);
  std::size_t limit = flag_uint(f, "limit", 1000);
  auto O = orbit(sc.generator_set(), *sc.orbit_vector, L, sc.ball_options(threads));
  CommandOutput out;
  Json pts = Json::array();
  out.table.header = {"length", "point"};
  for (std::size_t i = 0; i < O.points.size() && i < limit; ++i) {
    pts.push_back(Json{{"length", O.lengths[i]}, {"point", json_vector(O.points[i])}});
    out.table.rows.push_back({std::to_string(O.lengths[i]), to_string(O.points[i])});
  }
  if (O.points.size() > limit) out.budgets_hit.push_back("point listing truncated at --limit");
  out.outputs = {{"L", L}, {"base", json_vector(O.base)}, {"size", O.points.size()}, {"points", pts}};
  return out;
}

inline Json json_local(const LocalDensity& ld) {
  return Json{{"p", ld.p}, {"N_f", str(ld.N_f)}, {"order", str(ld.order)}, {"beta", str(ld.beta)},
              {"ramified", ld.ramified}};
}

inline CommandOutput cmd_local_density(const Scenario* s, const Flags& f, unsigned) {
  const auto& sc = need(s);
  auto p = static_cast<std::int64_t>(flag_uint(f, "p"));
  auto ld = local_density(sc.generator_set(), sc.f, p, sc.ramified, sc.image_cap);
  CommandOutput out;
  out.outputs = json_local(ld);
  out.table.header = {"p", "N_f", "order", "beta", "ramified"};
  out.table.rows.push_back({std::to_string(p), str(ld.N_f), str(ld.order), str(ld.beta), ld.ramified ? "yes" : "no"});
  return out;
}

inline CommandOutput cmd_beta_table(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  auto primes = primes_between(flag_uint(f, "pmin", 2), flag_uint(f, "pmax", 31));
  std::vector<LocalDensity> rows(primes.size());
  auto gens = sc.generator_set();
  parallel_for(primes.size(), threads, [&](std::size_t i) {
    rows[i] = local_density(gens, sc.f, primes[i], sc.ramified, sc.image_cap);
  });
  CommandOutput out;
  Json arr = Json::array();
  out.table.header = {"p", "N_f", "order", "beta", "ramified"};
  for (const auto& ld : rows) {
    arr.push_back(json_local(ld));
    out.table.rows.push_back({std::to_string(ld.p), str(ld.N_f), str(ld.order), str(ld.beta), ld.ramified ? "yes" : "no"});
  }
  out.outputs = {{"rows", arr}, {"source", "image"}};
  return out;
}

inline CommandOutput cmd_strong_approx(const Scenario* s, const Flags& f, unsigned) {
  const auto& sc = need(s);
  auto qs = flag_list(f, "q");
  ExpectedOrder expected = sc.kind == GroupKind::SLn ? sl_expected_order(sc.dimension)
                                                     : variety_expected_order(sc.ambient, sc.variety_options());
  CommandOutput out;
  Json arr = Json::array();
  out.table.header = {"q", "verdict", "image_order", "expected_order"};
  auto gens = sc.generator_set();
  for (auto q : qs) {
    auto v = verify_strong_approx(gens, static_cast<std::int64_t>(q), expected, sc.image_cap);
    Json per = Json::object();
    for (const auto& [p, o] : v.image_order_per_prime) {
      const auto& e = v.expected_per_prime.at(p);
      per[std::to_string(p)] = Json{{"image", str(o)}, {"expected", e ? Json(str(*e)) : Json(nullptr)}};
    }
    arr.push_back(Json{{"q", q},
                       {"verdict", v.status_name()},
                       {"image_order", str(v.image_order)},
                       {"expected_order", str(v.expected_order)},
                       {"per_prime", per},
                       {"witness", v.witness}});
    out.table.rows.push_back({std::to_string(q), v.status_name(), str(v.image_order), str(v.expected_order)});
  }
  out.outputs = {{"rows", arr},
                 {"expected_source", sc.kind == GroupKind::SLn ? "classical |SL_n(F_p)|" : "ambient point counts"}};
  return out;
}

inline CommandOutput cmd_ramified(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned L = flag_u(f, "L", 3);
  auto pmax = static_cast<std::int64_t>(flag_uint(f, "pmax", 100));
  auto gens = sc.generator_set();
  auto sample = ball(gens, L, sc.ball_options(threads)).elements;
  // Only denominator primes are stripped; S0 may itself contain ramified primes.
  auto r = detect_ramified(gens, sc.f, sample, pmax, prime_support(gens.denominator_lcm()), sc.image_cap);
  CommandOutput out;
  Json rej = Json::array(), unres = Json::array();
  for (const auto& p : r.rejected) rej.push_back(str(p));
  for (const auto& p : r.unresolved) unres.push_back(str(p));
  if (!r.unresolved.empty()) out.budgets_hit.push_back("candidates above --pmax or unfactored left unresolved");
  out.outputs = {{"confirmed", json_primes(r.confirmed)}, {"rejected", rej},   {"unresolved", unres},
                 {"sample_gcd", str(r.sample_gcd)},        {"sample_size", r.sample_size}, {"L", L}};
  out.table.header = {"prime", "status"};
  for (const auto& p : r.confirmed) out.table.rows.push_back({str(p), "ramified"});
  for (const auto& p : r.rejected) out.table.rows.push_back({str(p), "rejected"});
  for (const auto& p : r.unresolved) out.table.rows.push_back({str(p), "unresolved"});
  return out;
}

inline CommandOutput cmd_variety_count(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  if (sc.kind == GroupKind::Unipotent) throw InvalidInput("variety-count: f must be over the matrix entries");
  if (sc.ambient.empty()) throw InvalidInput("variety-count: scenario has no ambient equations");
  std::vector<std::int64_t> primes;
  if (flag(f, "p")) {
    for (auto p : flag_list(f, "p")) primes.push_back(static_cast<std::int64_t>(p));
  } else {
    primes = primes_between(flag_uint(f, "pmin", 2), flag_uint(f, "pmax", 31));
  }
  std::vector<VarietyBeta> rows(primes.size());
  parallel_for(primes.size(), threads, [&](std::size_t i) {
    rows[i] = variety_beta(sc.ambient, sc.f, primes[i], sc.variety_options());
  });
  CommandOutput out;
  Json arr = Json::array();
  out.table.header = {"p", "count_f", "count_ambient", "beta"};
  for (const auto& r : rows) {
    arr.push_back(Json{{"p", r.p}, {"count_f", str(r.count_f)}, {"count_ambient", str(r.count_ambient)},
                       {"beta", str(r.beta)}});
    out.table.rows.push_back({std::to_string(r.p), str(r.count_f), str(r.count_ambient), str(r.beta)});
  }
  out.outputs = {{"rows", arr}};
  return out;
}

inline CommandOutput cmd_splitting_census(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  if (sc.kind == GroupKind::Unipotent) throw InvalidInput("splitting-census: f must be over the matrix entries");
  auto eqs = sc.ambient;
  eqs.push_back(sc.f);
  const auto n = sc.matrix_dim();
  unsigned long dflt_dim = n * n > eqs.size() ? n * n - eqs.size() : 0;
  unsigned dim_V = flag_u(f, "dim", dflt_dim);
  Integer bez = 1;
  for (const auto& e : eqs) bez *= std::max(1u, e.degree());
  if (flag(f, "bezout")) bez = Integer(flag_uint(f, "bezout"));
  auto primes = primes_between(flag_uint(f, "pmin", 3), flag_uint(f, "pmax", 200));
  auto c = splitting_census(eqs, dim_V, primes, bez, sc.variety_options(), threads);
  CommandOutput out;
  Json rows = Json::array(), freq = Json::object();
  out.table.header = {"p", "count", "c_hat", "residual"};
  for (const auto& r : c.rows) {
    rows.push_back(Json{{"p", r.p}, {"count", str(r.count)}, {"c_hat", r.c_hat ? Json(*r.c_hat) : Json(nullptr)},
                        {"residual", str(r.residual)}});
    out.table.rows.push_back({std::to_string(r.p), str(r.count), r.c_hat ? std::to_string(*r.c_hat) : "-", str(r.residual)});
  }
  std::size_t classified = 0;
  for (const auto& [v, k] : c.frequencies) {
    freq[std::to_string(v)] = k;
    classified += k;
  }
  Json share = Json::object();
  for (const auto& [v, k] : c.frequencies)
    share[std::to_string(v)] = classified ? static_cast<double>(k) / static_cast<double>(classified) : 0.0;
  out.outputs = {{"dim_V", c.dim_V},
                 {"rows", rows},
                 {"frequencies", freq},
                 {"frequency_share", share},
                 {"unclassified", c.unclassified},
                 {"max_c_hat", c.max_c_hat},
                 {"mean_c_hat", c.mean_c_hat},
                 {"two_valued", c.two_valued},
                 {"component_degree_estimate", c.component_degree_estimate},
                 {"bezout_bound", str(c.bezout_bound)},
                 {"bezout_ok", c.bezout_ok},
                 {"range_too_small", c.range_too_small}};
  return out;
}

inline CommandOutput cmd_sequence(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned L = flag_u(f, "L", 4);
  auto seq = build_sequence(sc.generator_set(), sc.f, L, sc.S0, sc.ball_options(threads));
  CommandOutput out;
  Json entries = Json::array();
  out.table.header = {"n", "a_n"};
  for (const auto& [n, a] : seq.entries) {
    entries.push_back(Json::array({str(n), str(a)}));
    out.table.rows.push_back({str(n), str(a)});
  }
  out.outputs = {{"L", L},           {"S", json_primes(seq.S_used)}, {"X", str(seq.X)},
                 {"skipped", seq.skipped}, {"ball_size", seq.ball_size}, {"distinct", seq.entries.size()},
                 {"entries", entries}};
  return out;
}

inline ModuliDecomposition decomposition_for(const Scenario& sc, const Flags& f, unsigned threads) {
  unsigned L = flag_u(f, "L", 4);
  unsigned D = flag_u(f, "moduli", 30);
  auto seq = build_sequence(sc.generator_set(), sc.f, L, sc.S0, sc.ball_options(threads));
  return moduli_decomposition(seq, scenario_beta(sc), D, threads);
}

inline CommandOutput cmd_decompose(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  auto dec = decomposition_for(sc, f, threads);
  CommandOutput out;
  Json rows = Json::array();
  out.table.header = {"d", "A_d", "beta", "prediction", "remainder"};
  for (const auto& r : dec.rows) {
    rows.push_back(Json{{"d", str(r.d)}, {"A", str(r.A)}, {"beta", str(r.beta)}, {"prediction", str(r.prediction)},
                        {"remainder", str(r.remainder)}});
    out.table.rows.push_back({str(r.d), str(r.A), str(r.beta), str(r.prediction), str(r.remainder)});
  }
  out.outputs = {{"X", str(dec.X)}, {"D", dec.D}, {"rows", rows}, {"L", flag_u(f, "L", 4)}};
  return out;
}

inline CommandOutput cmd_level_report(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  auto dec = decomposition_for(sc, f, threads);
  auto grid = flag_doubles(f, "taus", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  double dim = flag_double(f, "dim", default_group_dim(sc));
  double eps = flag_double(f, "eps", 0.0);
  auto rep = level_distribution_report(dec, grid, dim, eps);
  CommandOutput out;
  Json g = Json::array();
  out.table.header = {"tau", "satisfied"};
  for (const auto& [tau, ok] : rep.grid) {
    g.push_back(Json{{"tau", tau}, {"satisfied", ok}});
    out.table.rows.push_back({Json(tau).dump(), ok ? "yes" : "no"});
  }
  out.outputs = {{"sum_abs_remainder", str(rep.sum_abs)},
                 {"max_abs_remainder", str(rep.max_abs)},
                 {"X", str(rep.X)},
                 {"D", rep.D},
                 {"dim", rep.dim},
                 {"epsilon", rep.epsilon},
                 {"grid", g},
                 {"least_tau", rep.least_tau ? Json(*rep.least_tau) : Json(nullptr)},
                 {"label", "empirical"}};
  return out;
}

inline CommandOutput cmd_sieve_dim(const Scenario* s, const Flags& f, unsigned threads) {
  std::string source = flag(f, "source") ? *flag(f, "source") : "variety";
  double w = flag_double(f, "w", 2.0), z = flag_double(f, "z", 2000.0);
  std::map<Integer, double> table;
  auto primes = primes_between(2, static_cast<std::uint64_t>(z));
  if (source == "synthetic") {
    double c = flag_double(f, "c", 1.0);
    for (auto p : primes) table[Integer(static_cast<long>(p))] = c / static_cast<double>(p);
  } else if (source == "variety" || source == "image") {
    const auto& sc = need(s);
    std::vector<Rational> betas(primes.size());
    if (source == "variety") {
      if (sc.ambient.empty() || sc.kind == GroupKind::Unipotent)
        throw InvalidInput("sieve-dim: variety source needs ambient equations over matrix entries");
      parallel_for(primes.size(), threads, [&](std::size_t i) {
        betas[i] = variety_beta(sc.ambient, sc.f, primes[i], sc.variety_options()).beta;
      });
    } else {
      auto gens = sc.generator_set();
      parallel_for(primes.size(), threads, [&](std::size_t i) {
        betas[i] = local_density(gens, sc.f, primes[i], sc.ramified, sc.image_cap).beta;
      });
    }
    for (std::size_t i = 0; i < primes.size(); ++i) {
      Integer p(static_cast<long>(primes[i]));
      table[p] = sc.ramified.contains(p) ? 0.0 : betas[i].get_d();
    }
  } else {
    throw InvalidInput("sieve-dim: --source must be variety, image or synthetic");
  }
  auto fit = sieve_dimension_fit(table, w, z);
  CommandOutput out;
  out.outputs = {{"source", source},       {"w", fit.w},           {"z", fit.z},
                 {"t_hat", fit.slope},     {"c_hat", fit.intercept}, {"residual", fit.residual},
                 {"primes_used", fit.primes_used}, {"inconclusive", fit.inconclusive}};
  out.table.header = {"p", "beta"};
  for (const auto& [p, b] : table) out.table.rows.push_back({str(p), Json(b).dump()});
  return out;
}

inline CommandOutput cmd_brun_bound(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned L = flag_u(f, "L", 4);
  double z = flag_double(f, "z", 13);
  unsigned b = flag_u(f, "b", 2);
  auto seq = build_sequence(sc.generator_set(), sc.f, L, sc.S0, sc.ball_options(threads));
  auto bb = brun_bound(seq, z, b, scenario_beta(sc));
  CommandOutput out;
  Json sp = Json::array();
  for (const auto& p : bb.sifting_primes) sp.push_back(str(p));
  out.outputs = {{"L", L},
                 {"z", z},
                 {"b", b},
                 {"X", str(seq.X)},
                 {"lower", str(bb.lower)},
                 {"upper", str(bb.upper)},
                 {"exact", str(bb.exact)},
                 {"sifting_primes", sp},
                 {"moduli", bb.moduli},
                 {"predicted", bb.predicted ? Json(str(*bb.predicted)) : Json(nullptr)}};
  out.table.header = {"lower", "exact", "upper"};
  out.table.rows.push_back({str(bb.lower), str(bb.exact), str(bb.upper)});
  return out;
}

inline CommandOutput cmd_census(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned L = flag_u(f, "L", 4);
  unsigned rmax = flag_u(f, "rmax", sc.r_max);
  auto c = almost_prime_census(sc.generator_set(), sc.f, L, sc.S0, rmax, sc.ball_options(threads), sc.factor);
  CommandOutput out;
  Json counts = Json::array();
  out.table.header = {"r", "count"};
  for (unsigned r = 0; r < c.counts.size(); ++r) {
    counts.push_back(c.counts[r]);
    out.table.rows.push_back({std::to_string(r), std::to_string(c.counts[r])});
  }
  if (c.incomplete) out.budgets_hit.push_back("factoring budget: " + std::to_string(c.incomplete) + " values unfactored");
  out.outputs = {{"L", L},          {"S", json_primes(c.S)}, {"r_max", rmax},   {"counts", counts},
                 {"ball_size", c.ball_size}, {"zero", c.zero},  {"incomplete", c.incomplete}};
  return out;
}

inline CommandOutput cmd_saturate(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  unsigned D = flag_u(f, "D", sc.D);
  unsigned Lmax = flag_u(f, "Lmax", sc.L_schedule.empty() ? 6 : sc.L_schedule.back());
  unsigned rmax = flag_u(f, "rmax", sc.r_max);
  auto sched = saturation_schedule(sc, Lmax);
  auto est = saturation_estimate(sc.generator_set(), sc.f, sc.S0, D, sched, rmax, sc.ambient, sc.ball_options(threads),
                                 sc.factor);
  CommandOutput out;
  Json steps = Json::array();
  out.table.header = {"L", "r", "sample", "rank", "monomials", "dense"};
  for (const auto& st : est.steps) {
    Json verdicts = Json::array();
    for (std::size_t r = 0; r < st.verdicts.size(); ++r) {
      verdicts.push_back(json_density(st.verdicts[r]));
      const auto& v = st.verdicts[r];
      out.table.rows.push_back({std::to_string(st.L), std::to_string(r), std::to_string(st.sample_sizes[r]),
                                std::to_string(v.rank), std::to_string(v.monomials),
                                v.underdetermined ? "underdetermined" : (v.dense ? "yes" : "no")});
    }
    steps.push_back(Json{{"L", st.L},
                         {"r_hat", st.r_hat ? Json(*st.r_hat) : Json(nullptr)},
                         {"sample_sizes", st.sample_sizes},
                         {"verdicts", verdicts}});
  }
  out.outputs = {{"r_hat", est.r_hat ? Json(*est.r_hat) : Json(nullptr)},
                 {"S", json_primes(est.S)},
                 {"D", est.D},
                 {"L_schedule", est.L_schedule},
                 {"stable", est.stable},
                 {"status", est.status},
                 {"label", est.label},
                 {"steps", steps},
                 {"at_r_hat", est.at_r_hat ? json_density(*est.at_r_hat) : Json(nullptr)},
                 {"at_r_hat_minus_1", est.at_r_hat_minus_1 ? json_density(*est.at_r_hat_minus_1) : Json(nullptr)},
                 {"levi_semisimple", sc.levi_semisimple ? Json(*sc.levi_semisimple) : Json("not asserted")}};
  return out;
}

inline Json json_uni_levels(const UniSieveResult& res) {
  Json levels = Json::array();
  for (const UniSieveResult* lv = &res; lv; lv = lv->sub.get()) {
    Json bad = Json::array();
    for (const auto& b : lv->single_instance_bad_primes) bad.push_back(json_primes(b));
    levels.push_back(Json{{"vars", lv->vars},
                          {"last_variable", lv->last_variable},
                          {"r", lv->r},
                          {"r_single", lv->r_single},
                          {"S", json_primes(lv->S)},
                          {"S_constants", json_primes(lv->S_constants)},
                          {"degree_bound", lv->degree_bound},
                          {"family_count", lv->family_count},
                          {"layers", lv->layers.size()},
                          {"points", lv->points.size()},
                          {"prefixes_skipped", lv->prefixes_skipped},
                          {"points_unverifiable", lv->points_unverifiable},
                          {"single_instance_bad_primes", bad},
                          {"prefix_density", lv->prefix_density ? json_density(*lv->prefix_density) : Json(nullptr)}});
  }
  return levels;
}

inline CommandOutput cmd_uni_sieve(const Scenario* s, const Flags& f, unsigned) {
  const auto& sc = need(s);
  if (sc.kind != GroupKind::Unipotent) throw InvalidInput("uni-sieve: scenario group must be unipotent");
  UniSieveBudget b = sc.sieve;
  b.want = flag_uint(f, "want", b.want);
  b.candidates = flag_uint(f, "candidates", b.candidates);
  auto res = unipotent_group_sieve(sc.generators, sc.f, sc.families, sc.chart, b);
  CommandOutput out;
  Json pts = Json::array();
  out.table.header = {"lattice_coordinates", "p_value", "omega_outside_S", "element"};
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const auto& p = res.points[i];
    Json coords = Json::array(), gcds = Json::array();
    for (const auto& c : p.lattice_coordinates) coords.push_back(str(c));
    for (const auto& g : p.family_gcds) gcds.push_back(str(g));
    Json cert = i < res.sieve.certificates.size() ? json_factors(res.sieve.certificates[i].factorization) : Json(nullptr);
    pts.push_back(Json{{"lattice_coordinates", coords}, {"element", json_matrix(p.element)}, {"p_value", str(p.p_value)},
                       {"s_part", str(p.s_part)},          {"omega_outside", p.omega_outside},
                       {"family_gcds", gcds},              {"lattice_value_factors", cert}});
    std::string cs;
    for (const auto& c : p.lattice_coordinates) cs += (cs.empty() ? "" : ",") + str(c);
    out.table.rows.push_back({cs, str(p.p_value), std::to_string(p.omega_outside), p.element.to_string()});
  }
  Json basis = Json::array();
  for (const auto& m : res.lattice.basis) basis.push_back(json_matrix(m));
  Json fams = Json::array();
  for (const auto& fam : res.lattice_problem.families) {
    Json one = Json::array();
    for (const auto& p : fam) one.push_back(p.to_string());
    fams.push_back(one);
  }
  out.outputs = {{"r", res.r},
                 {"S", json_primes(res.S)},
                 {"chart", sc.chart == UniChart::Log ? "log" : "matrix"},
                 {"lattice", Json{{"basis", basis},
                                  {"scale", str(res.lattice.scale)},
                                  {"N", str(res.lattice.N)},
                                  {"lie_dimension", res.lattice.lie_dimension},
                                  {"group_containment_certified", res.lattice.group_containment_certified}}},
                 {"lattice_problem", Json{{"P", res.lattice_problem.P.to_string()}, {"families", fams}}},
                 {"denominator", str(res.denominator)},
                 {"levels", json_uni_levels(res.sieve)},
                 {"points", pts},
                 {"point_count", res.points.size()}};
  return out;
}

inline CommandOutput cmd_torus(const Scenario* s, const Flags& f, unsigned threads) {
  const auto& sc = need(s);
  TorusSpec spec{sc.generators, flag_u(f, "M", sc.torus_M)};
  auto g = norm_growth_check(spec);
  const unsigned t = static_cast<unsigned>(sc.generators.size());
  unsigned nu = flag_u(f, "nu", t + 1);
  unsigned r = flag_u(f, "r", 1);
  auto checkpoints = flag_list(f, "bc", std::vector<unsigned long>{10, 100, 1000, 10000, 100000, 1000000});
  auto bc = borel_cantelli_sum(t, nu, r, checkpoints);
  CommandOutput out;
  Json shells = Json::array();
  for (const auto& [k, mm] : g.shells) shells.push_back(Json{{"norm", k}, {"min_log_F", mm.first}, {"max_log_F", mm.second}});
  Json F = Json::array(), shifted = Json::array();
  for (const auto& x : sc.generators) {
    F.push_back(str(hilbert_schmidt(x)));
    shifted.push_back(str(shifted_product(x, nu)));
  }
  Json cps = Json::array(), incs = Json::array();
  for (const auto& [M, v] : bc.checkpoints) cps.push_back(Json{{"M", M}, {"partial_sum", static_cast<double>(v)}});
  for (auto v : bc.increments) incs.push_back(static_cast<double>(v));
  Json trend = nullptr;
  out.table.header = {"m", "norm", "value", "omega_distinct", "omega_total"};
  if (flag_bool(f, "trend", true) && sc.kind != GroupKind::Unipotent) {
    unsigned Mt = flag_u(f, "trend_M", spec.M);
    TorusSpec ts{sc.generators, Mt};
    auto tt = prime_factor_trend(ts, sc.f, sc.S0, sc.factor, threads);
    Json rows = Json::array(), dy = Json::array();
    std::size_t failed = 0;
    for (const auto& row : tt.rows) {
      auto opt = [](const std::optional<unsigned>& v) { return v ? Json(*v) : Json(nullptr); };
      rows.push_back(Json{{"m", row.m}, {"norm", row.norm}, {"value", str(row.value)}, {"zero", row.zero},
                          {"omega_distinct", opt(row.omega_distinct)}, {"omega_total", opt(row.omega_total)}});
      std::string ms;
      for (long v : row.m) ms += (ms.empty() ? "" : ",") + std::to_string(v);
      auto os = [](const std::optional<unsigned>& v) { return v ? std::to_string(*v) : std::string("-"); };
      out.table.rows.push_back({ms, std::to_string(row.norm), str(row.value), os(row.omega_distinct), os(row.omega_total)});
      if (!row.zero && !row.omega_distinct) ++failed;
    }
    for (const auto& [lo, mn] : tt.dyadic_minimum) dy.push_back(Json{{"window_start", lo}, {"min_omega", mn ? Json(*mn) : Json(nullptr)}});
    if (failed) out.budgets_hit.push_back("factoring budget: " + std::to_string(failed) + " trend rows unfactored");
    trend = Json{{"S", json_primes(tt.S)}, {"rows", rows}, {"dyadic_minimum", dy}};
  }
  out.outputs = {{"norm_growth", Json{{"A1", str(g.A1)}, {"A2", str(g.A2)}, {"A1_fit", g.A1_fit}, {"A2_fit", g.A2_fit},
                                      {"K", str(g.K)}, {"envelope_verified", g.envelope_verified},
                                      {"degenerate", g.degenerate}, {"note", g.note}, {"points", g.points},
                                      {"shells", shells}}},
                 {"hilbert_schmidt", F},
                 {"shifted_product", shifted},
                 {"nu", nu},
                 {"borel_cantelli", Json{{"t", bc.t}, {"nu", bc.nu}, {"r", bc.r}, {"checkpoints", cps},
                                         {"increments", incs}, {"increments_decreasing", bc.increments_decreasing},
                                         {"integral_test_bound", static_cast<double>(bc.tail_bound)},
                                         {"bounded", bc.bounded}, {"summand_constant", 1}}},
                 {"trend", trend}};
  return out;
}

inline CommandOutput cmd_r_formula(const Scenario* s, const Flags& f, unsigned) {
  std::optional<unsigned long> deg, cnt, dim, omega;
  std::optional<double> tau, T, logM0;
  if (s) {
    deg = s->lift_degree ? *s->lift_degree : s->f.degree();
    cnt = s->S0.size();
    dim = default_group_dim(*s);
    omega = s->generator_set().size();
    tau = s->tau.get_d();
    T = s->T.get_d();
    logM0 = s->logM0.get_d();
  }
  unsigned d = flag_u(f, "deg", deg);
  std::size_t sc = flag_uint(f, "s", cnt);
  unsigned dm = flag_u(f, "dim", dim);
  double ta = flag_double(f, "tau", tau), TT = flag_double(f, "T", T), lm = flag_double(f, "logM0", logM0);
  unsigned long long om = flag_uint(f, "omega", omega);
  long long r = r_formula(d, sc, dm, ta, om, TT, lm);
  CommandOutput out;
  out.outputs = {{"r", r},   {"deg", d},  {"s", sc},      {"dim", dm},
                 {"tau", ta}, {"omega", om}, {"T", TT}, {"logM0", lm},
                 {"M0_note", "logM0 is an explicit input; M0 is not fixed by the source formula"}};
  out.table.header = {"r"};
  out.table.rows.push_back({std::to_string(r)});
  return out;
}

}  // namespace detail

inline const std::vector<CommandSpec>& command_table() {
  using namespace detail;
  static const std::vector<CommandSpec> table = {
      {"ball", true, {{"L", "word length radius"}}, cmd_ball},
      {"orbit", true, {{"L", "word length radius"}, {"limit", "points listed"}}, cmd_orbit},
      {"local-density", true, {{"p", "prime"}}, cmd_local_density},
      {"beta-table", true, {{"pmin", "smallest prime"}, {"pmax", "largest prime"}}, cmd_beta_table},
      {"strong-approx", true, {{"q", "comma-separated squarefree moduli"}}, cmd_strong_approx},
      {"ramified", true, {{"L", "sample radius"}, {"pmax", "largest candidate tested"}}, cmd_ramified},
      {"variety-count", true, {{"p", "comma-separated primes"}, {"pmin", "smallest prime"}, {"pmax", "largest prime"}},
       cmd_variety_count},
      {"splitting-census", true,
       {{"pmin", "smallest prime"}, {"pmax", "largest prime"}, {"dim", "dimension of V"}, {"bezout", "component bound"}},
       cmd_splitting_census},
      {"sequence", true, {{"L", "word length radius"}}, cmd_sequence},
      {"decompose", true, {{"L", "word length radius"}, {"moduli", "largest modulus d"}}, cmd_decompose},
      {"level-report", true,
       {{"L", "word length radius"}, {"moduli", "largest modulus d"}, {"taus", "tau grid"}, {"dim", "group dimension"},
        {"eps", "epsilon"}},
       cmd_level_report},
      {"sieve-dim", false,
       {{"source", "variety | image | synthetic"}, {"w", "lower prime bound"}, {"z", "upper prime bound"},
        {"c", "synthetic constant"}},
       cmd_sieve_dim},
      {"brun-bound", true, {{"L", "word length radius"}, {"z", "sifting limit"}, {"b", "truncation parameter"}},
       cmd_brun_bound},
      {"census", true, {{"L", "word length radius"}, {"rmax", "largest r"}}, cmd_census},
      {"saturate", true, {{"D", "density degree"}, {"Lmax", "largest radius"}, {"rmax", "largest r"}}, cmd_saturate},
      {"uni-sieve", true, {{"want", "values per prefix"}, {"candidates", "terms tried per prefix"}}, cmd_uni_sieve},
      {"torus-heuristic", true,
       {{"M", "exponent box"}, {"nu", "shift count"}, {"r", "prime factor bound"}, {"bc", "Borel-Cantelli checkpoints"},
        {"trend", "true | false"}, {"trend_M", "trend exponent box"}},
       cmd_torus},
      {"r-formula", false,
       {{"deg", "degree of the lift"}, {"s", "#S"}, {"dim", "group dimension"}, {"tau", "level exponent"},
        {"omega", "generating set size"}, {"T", "growth exponent"}, {"logM0", "log M0"}},
       cmd_r_formula},
  };
  return table;
}

inline const CommandSpec& find_command(const std::string& name) {
  for (const auto& c : command_table())
    if (c.name == name) return c;
  throw InvalidInput("unknown command '" + name + "'");
}

inline Json scenario_echo(const Scenario& sc) {
  Json entries = Json::array();
  for (const auto& [k, v] : sc.entries) entries.push_back(Json::array({k, v}));
  Json decomposition = nullptr;
  if (sc.decomposition_pi || sc.decomposition_phi)
    decomposition = Json{{"pi", sc.decomposition_pi ? Json(*sc.decomposition_pi) : Json(nullptr)},
                         {"phi", sc.decomposition_phi ? Json(*sc.decomposition_phi) : Json(nullptr)}};
  return Json{{"name", sc.name},
              {"hash", sc.hash},
              {"group", Scenario::kind_name(sc.kind)},
              {"levi_semisimple", sc.levi_semisimple ? Json(*sc.levi_semisimple) : Json("not asserted")},
              {"ambient", sc.ambient_text},
              {"ambient_defaulted", sc.ambient_defaulted},
              {"decomposition", decomposition},
              {"entries", entries}};
}

struct Record {
  Json json;
  Table table;
};

/// The full record; `flags` excludes output paths and --threads, which do not
/// change the payload.
inline Record run_command(const std::string& name, const Scenario* sc, const Flags& flags, unsigned threads = 1) {
  const auto& cmd = find_command(name);
  for (const auto& [k, v] : flags) {
    bool ok = false;
    for (const auto& fl : cmd.flags) ok = ok || fl.first == k;
    if (!ok) throw InvalidInput(name + ": unknown flag --" + k);
  }
  if (cmd.needs_scenario && !sc) throw InvalidInput(name + ": --scenario is required");
  auto out = cmd.run(sc, flags, threads);
  Json inputs = Json::object();
  for (const auto& [k, v] : flags) inputs[k] = v;
  Record rec;
  rec.json = Json{{"command", name},
                  {"scenario", sc ? scenario_echo(*sc) : Json(nullptr)},
                  {"inputs", inputs},
                  {"outputs", out.outputs},
                  {"budgets_hit", out.budgets_hit},
                  {"version", kVersion}};
  if (sc) {
    rec.json["budgets"] = Json{{"ball_cap", sc->ball_cap},
                               {"image_cap", sc->image_cap},
                               {"trial_bound", sc->factor.trial_bound},
                               {"rho_iterations", sc->factor.rho_iterations},
                               {"max_work", sc->max_work},
                               {"sieve_candidates", sc->sieve.candidates},
                               {"sieve_want", sc->sieve.want},
                               {"sieve_max_points", sc->sieve.max_points}};
  }
  rec.table = std::move(out.table);
  return rec;
}

inline std::string table_tsv(const Table& t) {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "\t" : "") + cells[i];
    s += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return s;
}

}  // namespace affsieve
