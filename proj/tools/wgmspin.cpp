// wgmspin: whispering-gallery resonances, rotational coupling and spin
// precession of a dielectric sphere, driven by a run configuration file.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wgmspin/cli/commands.hpp"
#include "wgmspin/cli/config.hpp"

namespace {

struct Invocation {
  std::string config;
  std::string out;
  bool natural_units = false;
  bool verbose = false;
};

void add_common(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config, "Run configuration file")->required();
  sub->add_option("--out", inv.out, "Output directory (overrides output.directory)");
  sub->add_flag("--natural-units", inv.natural_units, "Report in c = hbar = 1 units");
  sub->add_flag("--verbose", inv.verbose, "Print search diagnostics");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wgmspin::cli;
  CLI::App app{"Whispering-gallery modes and rotational coupling of a dielectric sphere"};
  app.set_version_flag("--version", std::string(WGMSPIN_VERSION));
  app.require_subcommand(1);

  Invocation inv;
  struct Verb {
    const char* name;
    const char* help;
    Command cmd;
  };
  const Verb verbs[] = {
      {"modes", "Find resonance poles in the wavelength window", cmd_modes},
      {"lambda", "Compute the coupling constant Lambda", cmd_lambda},
      {"simulate", "Integrate the coupled precession", cmd_simulate},
      {"estimate", "Closed-form precession rate and Zeeman threshold", cmd_estimate},
  };
  for (const auto& v : verbs) add_common(app.add_subcommand(v.name, v.help), inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_invalid;
  }

  std::ifstream in(inv.config);
  if (!in) {
    std::cerr << "wgmspin: cannot read " << inv.config << '\n';
    return exit_invalid;
  }
  RunConfig config;
  try {
    config = parse_config(in);
  } catch (const ConfigError& e) {
    std::cerr << "wgmspin: invalid configuration: " << e.what() << '\n';
    return exit_invalid;
  }

  CommandOptions opt;
  if (!inv.out.empty()) opt.out_dir = inv.out;
  opt.natural_units = inv.natural_units;
  opt.verbose = inv.verbose;
  for (const auto& v : verbs) {
    if (app.got_subcommand(v.name)) return run(v.cmd, config, opt, {std::cout, std::cerr});
  }
  return exit_invalid;
}
