// gram-recur: run one experiment, or an N x tau / (k,p) x tau sweep when a
// grid key carries a comma-separated list.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gramrecur/experiment.hpp"

namespace ex = gramrecur::experiment;

namespace {

int exit_code_for(std::string_view kind) {
  if (kind == "config") return 1;
  if (kind == "io") return 3;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gram-matrix spectra of quantum return times and classical return-time laws"};
  std::string kind;
  std::string config_file;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  app.add_option("kind", kind,
                 "baker-spectrum | top-spectrum | random-spectrum | mp-curve | classical-returns | symbol-demo | "
                 "compare")
      ->required();
  app.add_option("--config", config_file, "flat key = value config file");
  app.add_option("--set", overrides, "override a config key (key=value); repeatable");
  app.add_option("--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "RNG seed (unsigned 64-bit)");
  app.add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    ex::KeyValues kv;
    if (!config_file.empty()) kv = ex::read_config_file(config_file);
    for (const auto& o : overrides) {
      auto [key, value] = ex::parse_override(o);
      kv[key] = value;
    }
    kv["kind"] = kind;
    if (seed) kv["seed"] = std::to_string(*seed);
    if (out) kv["out"] = *out;

    if (ex::is_sweep(kv)) {
      auto grid = ex::expand_grid(kv);
      const std::filesystem::path dir = grid.front().out;
      const auto cells = ex::sweep(std::move(grid), dir, jobs);
      int rc = 0;
      for (const auto& cell : cells) {
        if (cell.ok) {
          std::cout << cell.dir << ": ok\n";
        } else {
          std::cerr << cell.dir << ": " << cell.error << '\n';
          rc = std::max(rc, exit_code_for(cell.error_kind));
        }
      }
      std::cout << "wrote " << (dir / "sweep.json").string() << '\n';
      return rc;
    }

    const ex::ExperimentConfig config = ex::from_key_values(kv);
    const ex::RunReport report = ex::run_experiment(config, config.out);
    for (const auto& f : report.files) std::cout << "wrote " << (std::filesystem::path(config.out) / f).string() << '\n';
    if (report.report.contains("distances") && !report.report["distances"].empty()) {
      std::cout << "distances: " << report.report["distances"].dump() << '\n';
    }
    return 0;
  } catch (const ex::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 1;
  } catch (const ex::IoError& e) {
    std::cerr << "I/O failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    const auto k = ex::error_kind(e);
    std::cerr << (k == "config" ? "invalid config: " : "numerical failure: ") << e.what() << '\n';
    return exit_code_for(k);
  }
}
