#pragma once

/**
 * @file scenario.hpp
 * @brief Scenario files: a strict line-based `key = value` format binding the
 * group, the polynomial, the prime sets and the budgets used by every command.
 *
 * Grammar (one entry per line, `#` starts a comment):
 *
 *   name            = identifier                      required
 *   group           = SL_n | affine | unipotent       required
 *   dimension       = n                               required
 *   generator       = [[a,b],[c,d]]                   repeatable (SL_n, unipotent)
 *   affine_generator= [[a,b],[c,d]] | [e,f]           repeatable (affine)
 *   symmetric       = true | false                    default true
 *   orbit_vector    = [v1,...,vn]
 *   f               = polynomial                      required
 *   lift            = polynomial      lift_degree = k
 *   ambient         = polynomial                      repeatable; SL_n defaults to det - 1
 *   S0, S_prime, ramified = {p1,p2,...}
 *   tau, T, logM0   = rational literal (no decimals)
 *   D, r_max, torus_M = unsigned
 *   L_schedule      = L1,L2,...
 *   family          = poly, poly, ...                 repeatable (unipotent)
 *   chart           = log | matrix                    unipotent only, default log
 *   levi_semisimple = true | false                    user assertion, echoed verbatim
 *   decomposition_pi, decomposition_phi = free text   echoed verbatim
 *   ball_cap, image_cap, trial_bound, rho_iterations, max_work,
 *   sieve_candidates, sieve_want, sieve_max_points, r_per_degree = unsigned
 *
 * Polynomials are in the matrix entries x11..xnn (with tr and det), except for
 * unipotent scenarios, whose f and families use the chart coordinates.
 */

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "affsieve/heuristics.hpp"
#include "affsieve/modp.hpp"
#include "affsieve/orbit_sieve.hpp"
#include "affsieve/unipotent_sieve.hpp"

namespace affsieve {

enum class GroupKind { SLn, Affine, Unipotent };

struct Scenario {
  std::string name;
  GroupKind kind = GroupKind::SLn;
  std::size_t dimension = 0;  // affine: dimension of the affine space
  std::vector<MatrixQ> generators;  // embedded matrices for affine scenarios
  bool symmetric = true;
  std::optional<VectorQ> orbit_vector;
  std::string f_text;
  MultiPoly f;
  std::optional<std::string> lift_text;
  std::optional<unsigned> lift_degree;
  std::vector<std::string> ambient_text;
  std::vector<MultiPoly> ambient;
  bool ambient_defaulted = false;
  PrimeSet S0, S_prime, ramified;
  Rational tau = Rational(1, 2), T = 1, logM0 = 1;
  unsigned D = 2, r_max = 3, torus_M = 10;
  std::vector<unsigned> L_schedule;
  std::vector<std::vector<std::string>> family_text;
  std::vector<std::vector<MultiPoly>> families;
  UniChart chart = UniChart::Log;
  std::optional<std::string> levi_semisimple;
  std::optional<std::string> decomposition_pi, decomposition_phi;

  std::size_t ball_cap = 1'000'000, image_cap = 2'000'000;
  FactorBudget factor{};
  double max_work = 2e10;
  UniSieveBudget sieve{};

  std::vector<std::pair<std::string, std::string>> entries;  // normalized, in file order
  std::string hash;

  std::size_t matrix_dim() const { return kind == GroupKind::Affine ? dimension + 1 : dimension; }
  std::vector<std::string> f_variables() const {
    return kind == GroupKind::Unipotent ? chart_variables(dimension, chart) : matrix_variables(matrix_dim());
  }
  GeneratorSet generator_set() const { return GeneratorSet(generators, symmetric); }
  BallOptions ball_options(unsigned threads) const { return BallOptions{ball_cap, threads}; }
  VarietyOptions variety_options() const { return VarietyOptions{VarietyStrategy::Sliced, max_work}; }
  static std::string kind_name(GroupKind k) {
    return k == GroupKind::SLn ? "SL_n" : k == GroupKind::Affine ? "affine" : "unipotent";
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline unsigned long parse_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidInput("scenario: " + key + " must be a non-negative integer, got '" + v + "'");
  return std::stoul(v);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidInput("scenario: " + key + " must be true or false, got '" + v + "'");
}

inline Rational parse_rational_literal(const std::string& key, const std::string& v) {
  if (v.find('.') != std::string::npos || v.find('e') != std::string::npos)
    throw InvalidInput("scenario: " + key + " must be a rational literal such as 3/4, got '" + v + "'");
  try {
    return parse_rational(v);
  } catch (const std::exception&) {
    throw InvalidInput("scenario: " + key + " is not a rational literal: '" + v + "'");
  }
}

inline std::vector<std::string> split_top_level(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  static const std::set<std::string> repeatable{"generator", "affine_generator", "ambient", "family"};
  static const std::set<std::string> known{
      "name",        "group",        "dimension",      "generator",       "affine_generator", "symmetric",
      "orbit_vector", "f",           "lift",           "lift_degree",     "ambient",          "S0",
      "S_prime",     "ramified",     "tau",            "T",               "logM0",            "D",
      "r_max",       "torus_M",      "L_schedule",     "family",          "chart",            "levi_semisimple",
      "decomposition_pi", "decomposition_phi", "ball_cap", "image_cap",   "trial_bound",      "rho_iterations",
      "max_work",    "sieve_candidates", "sieve_want", "sieve_max_points", "r_per_degree"};
  Scenario sc;
  std::multimap<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("scenario line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
    if (!known.count(key)) throw InvalidInput("scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!repeatable.count(key) && kv.count(key))
      throw InvalidInput("scenario line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) throw InvalidInput("scenario line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    kv.emplace(key, value);
    sc.entries.emplace_back(key, value);
  }
  std::string canonical;
  for (const auto& [k, v] : sc.entries) canonical += k + " = " + v + "\n";
  sc.hash = detail::fnv1a_hex(canonical);

  auto one = [&](const std::string& k) -> std::optional<std::string> {
    auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto all = [&](const std::string& k) {
    std::vector<std::string> out;
    auto [a, b] = kv.equal_range(k);
    for (auto it = a; it != b; ++it) out.push_back(it->second);
    return out;
  };
  auto required = [&](const std::string& k) {
    auto v = one(k);
    if (!v) throw InvalidInput("scenario: missing required key '" + k + "'");
    return *v;
  };

  sc.name = required("name");
  std::string group = required("group");
  if (group == "SL_n") sc.kind = GroupKind::SLn;
  else if (group == "affine") sc.kind = GroupKind::Affine;
  else if (group == "unipotent") sc.kind = GroupKind::Unipotent;
  else throw InvalidInput("scenario: group must be SL_n, affine or unipotent, got '" + group + "'");
  sc.dimension = detail::parse_unsigned("dimension", required("dimension"));
  if (sc.dimension < 1 || sc.matrix_dim() > 9) throw InvalidInput("scenario: dimension out of range");

  if (auto c = one("chart")) {
    if (sc.kind != GroupKind::Unipotent) throw InvalidInput("scenario: chart applies to unipotent scenarios only");
    if (*c == "log") sc.chart = UniChart::Log;
    else if (*c == "matrix") sc.chart = UniChart::Matrix;
    else throw InvalidInput("scenario: chart must be log or matrix");
  }

  if (sc.kind == GroupKind::Affine) {
    if (!all("generator").empty()) throw InvalidInput("scenario: affine scenarios use affine_generator");
    for (const auto& g : all("affine_generator")) {
      auto parts = detail::split_top_level(g, '|');
      if (parts.size() != 2) throw InvalidInput("scenario: affine_generator must be 'A | b'");
      MatrixQ A = parse_matrix(parts[0]);
      VectorQ b = parse_vector(parts[1]);
      if (A.dim() != sc.dimension || b.size() != sc.dimension)
        throw InvalidInput("scenario: affine_generator does not match dimension");
      sc.generators.push_back(affine_embed(A, b));
    }
  } else {
    if (!all("affine_generator").empty()) throw InvalidInput("scenario: affine_generator needs group = affine");
    for (const auto& g : all("generator")) {
      MatrixQ m = parse_matrix(g);
      if (m.dim() != sc.dimension) throw InvalidInput("scenario: generator " + g + " does not match dimension");
      sc.generators.push_back(m);
    }
  }
  if (sc.generators.empty()) throw InvalidInput("scenario: no generators");
  if (sc.kind == GroupKind::SLn)
    for (const auto& g : sc.generators)
      if (g.det() != 1) throw InvalidInput("scenario: generator " + g.to_string() + " is not in SL_n");
  if (sc.kind == GroupKind::Unipotent)
    for (const auto& g : sc.generators)
      if (!is_unipotent_upper(g)) throw InvalidInput("scenario: generator " + g.to_string() + " is not unipotent upper triangular");

  if (auto s = one("symmetric")) sc.symmetric = detail::parse_bool("symmetric", *s);
  if (auto v = one("orbit_vector")) {
    sc.orbit_vector = parse_vector(*v);
    if (sc.orbit_vector->size() != sc.dimension) throw InvalidInput("scenario: orbit_vector does not match dimension");
  }

  const auto vars = sc.f_variables();
  auto parse_f = [&](const std::string& text) {
    return sc.kind == GroupKind::Unipotent ? parse_poly(text, vars) : parse_matrix_poly(text, sc.matrix_dim());
  };
  sc.f_text = required("f");
  sc.f = parse_f(sc.f_text);
  if (auto l = one("lift")) {
    sc.lift_text = *l;
    parse_f(*l);
  }
  if (auto d = one("lift_degree")) sc.lift_degree = static_cast<unsigned>(detail::parse_unsigned("lift_degree", *d));

  sc.ambient_text = all("ambient");
  if (sc.ambient_text.empty() && sc.kind == GroupKind::SLn) {
    sc.ambient_text.push_back("det - 1");
    sc.ambient_defaulted = true;
  }
  for (const auto& a : sc.ambient_text) sc.ambient.push_back(parse_matrix_poly(a, sc.matrix_dim()));

  if (auto s = one("S0")) sc.S0 = parse_prime_set(*s);
  if (auto s = one("S_prime")) sc.S_prime = parse_prime_set(*s);
  if (auto s = one("ramified")) sc.ramified = parse_prime_set(*s);
  if (auto v = one("tau")) {
    sc.tau = detail::parse_rational_literal("tau", *v);
    if (sc.tau <= 0 || sc.tau >= 1) throw InvalidInput("scenario: tau must lie in (0, 1)");
  }
  if (auto v = one("T")) sc.T = detail::parse_rational_literal("T", *v);
  if (auto v = one("logM0")) sc.logM0 = detail::parse_rational_literal("logM0", *v);
  if (auto v = one("D")) sc.D = static_cast<unsigned>(detail::parse_unsigned("D", *v));
  if (auto v = one("r_max")) sc.r_max = static_cast<unsigned>(detail::parse_unsigned("r_max", *v));
  if (auto v = one("torus_M")) sc.torus_M = static_cast<unsigned>(detail::parse_unsigned("torus_M", *v));
  if (auto v = one("L_schedule"))
    for (const auto& part : detail::split_top_level(*v, ','))
      sc.L_schedule.push_back(static_cast<unsigned>(detail::parse_unsigned("L_schedule", part)));

  for (const auto& fam : all("family")) {
    if (sc.kind != GroupKind::Unipotent) throw InvalidInput("scenario: family applies to unipotent scenarios only");
    auto parts = detail::split_top_level(fam, ',');
    std::vector<MultiPoly> polys;
    for (const auto& p : parts) polys.push_back(parse_poly(p, vars));
    sc.family_text.push_back(parts);
    sc.families.push_back(std::move(polys));
  }

  if (auto v = one("levi_semisimple")) {
    detail::parse_bool("levi_semisimple", *v);
    sc.levi_semisimple = *v;
  }
  sc.decomposition_pi = one("decomposition_pi");
  sc.decomposition_phi = one("decomposition_phi");

  if (auto v = one("ball_cap")) sc.ball_cap = detail::parse_unsigned("ball_cap", *v);
  if (auto v = one("image_cap")) sc.image_cap = detail::parse_unsigned("image_cap", *v);
  if (auto v = one("trial_bound")) sc.factor.trial_bound = detail::parse_unsigned("trial_bound", *v);
  if (auto v = one("rho_iterations")) sc.factor.rho_iterations = detail::parse_unsigned("rho_iterations", *v);
  if (auto v = one("max_work")) sc.max_work = static_cast<double>(detail::parse_unsigned("max_work", *v));
  if (auto v = one("sieve_candidates")) sc.sieve.candidates = detail::parse_unsigned("sieve_candidates", *v);
  if (auto v = one("sieve_want")) sc.sieve.want = detail::parse_unsigned("sieve_want", *v);
  if (auto v = one("sieve_max_points")) sc.sieve.max_points = detail::parse_unsigned("sieve_max_points", *v);
  if (auto v = one("r_per_degree"))
    sc.sieve.r_per_degree = static_cast<unsigned>(detail::parse_unsigned("r_per_degree", *v));
  sc.sieve.density_degree = sc.D;
  sc.sieve.factor = sc.factor;
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace affsieve
