// Command-line front end. Exit codes: 0 ok, 1 internal error, 2 invalid input,
// 3 resource budget exhausted.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "affsieve/commands.hpp"

using namespace affsieve;

namespace {

void print_human(const std::string& command, const Record& rec, std::ostream& os) {
  os << "command: " << command;
  const auto& sc = rec.json["scenario"];
  if (!sc.is_null()) os << "  scenario: " << sc["name"].get<std::string>() << " [" << sc["hash"].get<std::string>() << "]";
  os << "\n";
  for (const auto& [k, v] : rec.json["outputs"].items()) {
    if (v.is_array() || v.is_object()) continue;
    os << "  " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
  for (const auto& b : rec.json["budgets_hit"]) os << "  budget: " << b.get<std::string>() << "\n";
  const auto& t = rec.table;
  if (t.rows.empty()) return;
  std::vector<std::size_t> width(t.header.size(), 0);
  const std::size_t shown = std::min<std::size_t>(t.rows.size(), 60);
  for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = t.header[i].size();
  for (std::size_t r = 0; r < shown; ++r)
    for (std::size_t i = 0; i < t.rows[r].size() && i < width.size(); ++i) width[i] = std::max(width[i], t.rows[r][i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    os << " ";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << " " << cells[i];
      if (i + 1 < cells.size()) os << std::string(width[i] - std::min(width[i], cells[i].size()), ' ');
    }
    os << "\n";
  };
  line(t.header);
  for (std::size_t r = 0; r < shown; ++r) line(t.rows[r]);
  if (shown < t.rows.size()) os << "  ... " << (t.rows.size() - shown) << " more rows (see --tsv)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affsieve: affine sieve laboratory"};
  app.require_subcommand(1);
  struct Parsed {
    std::string scenario, out, tsv;
    unsigned threads = 1;
    bool quiet = false;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, std::unique_ptr<Parsed>> parsed;
  for (const auto& cmd : command_table()) {
    auto* sub = app.add_subcommand(cmd.name, "");
    auto& p = *parsed.emplace(cmd.name, std::make_unique<Parsed>()).first->second;
    sub->add_option("--scenario", p.scenario, "scenario file");
    sub->add_option("--out", p.out, "record file (default ./<command>.record.json)");
    sub->add_option("--tsv", p.tsv, "flat table export");
    sub->add_option("--threads", p.threads, "worker cap")->check(CLI::Range(1u, 256u));
    sub->add_flag("--quiet", p.quiet, "no human table");
    for (const auto& [name, help] : cmd.flags) sub->add_option("--" + name, p.values[name], help);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    for (auto* sub : app.get_subcommands()) {
      const std::string name = sub->get_name();
      auto& p = *parsed.at(name);
      Flags flags;
      for (const auto& [k, v] : p.values)
        if (sub->count("--" + k)) flags[k] = v;
      std::unique_ptr<Scenario> sc;
      if (!p.scenario.empty()) sc = std::make_unique<Scenario>(load_scenario(p.scenario));
      auto rec = run_command(name, sc.get(), flags, p.threads);
      std::string out = p.out.empty() ? name + ".record.json" : p.out;
      std::ofstream(out) << rec.json.dump(2) << "\n";
      if (!p.tsv.empty()) std::ofstream(p.tsv) << table_tsv(rec.table);
      if (!p.quiet) print_human(name, rec, std::cout);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ResourceExhausted& e) {
    std::cerr << "resource budget exhausted: " << e.what() << " (reached " << e.reached() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
