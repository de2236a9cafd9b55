#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "rampc/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  rampc::CommandOptions opt;
};

nlohmann::json load_config_doc(const CommonArgs& args) {
  if (args.preset.empty() && args.config_path.empty()) {
    throw rampc::ConfigError("config: provide --preset and/or --config");
  }
  nlohmann::json doc = nlohmann::json::object();
  if (!args.preset.empty()) doc = rampc::preset_config(args.preset);
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) {
      throw rampc::ConfigError("config: cannot open '" + args.config_path +
                               "'");
    }
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw rampc::ConfigError("config: '" + args.config_path +
                               "': " + e.what());
    }
    doc = rampc::merge_config(doc, user);
  }
  return doc;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "JSON config file (overlays the preset)");
  cmd->add_option("-p,--preset", args.preset,
                  "named preset: table1, P_p, P_s, fig3");
  cmd->add_option("-o,--out", args.opt.out_dir, "output directory")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Risk-averse learning model predictive control for adaptive cruise "
      "control. Mode indices are 0-based in configs, outputs and sample "
      "files."};
  app.require_subcommand(1);

  CommonArgs inv_args, sim_args, once_args, est_args;
  std::string sample_path;

  CLI::App* inv = app.add_subcommand(
      "invariant-set",
      "Run the invariant-set iteration and write the metadata JSON and the "
      "safety-distance comparison grid CSV");
  add_common(inv, inv_args);

  CLI::App* sim = app.add_subcommand(
      "simulate",
      "Run seeded closed-loop batches and write per-realization CSV, "
      "summary JSON and cost ECDF CSV");
  add_common(sim, sim_args);
  sim->add_flag("-v,--verbose", sim_args.opt.verbose,
                "also write one per-step trajectory CSV per realization");

  CLI::App* once = app.add_subcommand(
      "solve-once",
      "Assemble and solve a single optimal control problem from the "
      "configured initial state and print the outcome");
  add_common(once, once_args);
  once->add_flag("--dump-program", once_args.opt.dump_program,
                 "write the assembled conic program as JSON");

  CLI::App* est = app.add_subcommand(
      "estimate",
      "Print the transition estimate and concentration sets for a recorded "
      "mode sample");
  add_common(est, est_args);
  est->add_option("-s,--sample", sample_path,
                  "JSON array of 0-based mode indices")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (inv->parsed()) {
      return rampc::cmd_invariant_set(
          rampc::parse_cli_config(load_config_doc(inv_args)), inv_args.opt);
    }
    if (sim->parsed()) {
      return rampc::cmd_simulate(
          rampc::parse_cli_config(load_config_doc(sim_args)), sim_args.opt);
    }
    if (once->parsed()) {
      return rampc::cmd_solve_once(
          rampc::parse_cli_config(load_config_doc(once_args)), once_args.opt);
    }
    if (est->parsed()) {
      return rampc::cmd_estimate(
          rampc::parse_cli_config(load_config_doc(est_args)), sample_path);
    }
  } catch (const rampc::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
