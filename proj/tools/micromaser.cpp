// micromaser {steady|sweep|trajectory|trap} --config FILE [--out DIR]
//
// Output directory precedence: --out, then $MICROMASER_OUT, then the
// config's output_dir, then ./out.
// Exit codes: 0 ok, 1 run failure (or sweep below 90% converged), 2 bad input.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "micromaser/cli_io.hpp"
#include "micromaser/errors.hpp"

using namespace micromaser;

int main(int argc, char** argv) {
  CLI::App app{"Micromaser and microlaser photon statistics"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<long long> atoms;
  std::vector<long long> snapshots;

  struct Sub {
    CLI::App* app;
    Command command;
  };
  std::vector<Sub> subs;
  const std::pair<Command, const char*> commands[] = {
      {Command::steady, "steady-state P(n), <n> and v"},
      {Command::sweep, "<n> and v over a pump-parameter grid"},
      {Command::trajectory, "atom-by-atom simulation with random arrivals"},
      {Command::trap, "trap condition and Fock-state candidates"},
  };
  for (const auto& [c, description] : commands) {
    auto* sub = app.add_subcommand(to_string(c), description);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory");
    if (c == Command::trajectory) {
      sub->add_option("--seed", seed, "RNG seed");
      sub->add_option("--atoms", atoms, "number of atoms");
      sub->add_option("--snapshot", snapshots, "atom index for a P(n) snapshot (repeatable)");
    }
    subs.push_back({sub, c});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Command command = Command::steady;
  for (const auto& s : subs)
    if (s.app->parsed()) command = s.command;

  try {
    RunConfig cfg = load_config(config_path, command, false);
    if (seed) cfg.seed = *seed;
    if (atoms) cfg.n_atoms = *atoms;
    if (!snapshots.empty()) cfg.snapshots = snapshots;
    validate_config(cfg);

    std::filesystem::path dir = "out";
    if (!out_dir.empty()) {
      dir = out_dir;
    } else if (const char* env = std::getenv("MICROMASER_OUT"); env && *env) {
      dir = env;
    } else if (!cfg.output_dir.empty()) {
      dir = cfg.output_dir;
    }

    const CommandOutput out = run_command(cfg);
    write_outputs(dir, out);
    if (!out.message.empty()) std::cerr << out.message << '\n';
    std::cout << "wrote " << out.files.size() << " files to " << dir.string() << '\n';
    return out.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
