#pragma once

// Argument handling for the selfsim executable:
//   selfsim <subcommand> [--config FILE] [--out DIR] [--<key> VALUE ...]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "selfsim/cli.hpp"
#include "selfsim/config.hpp"

namespace selfsim {

inline std::string subcommand_help(const std::string& name) {
  static const std::map<std::string, std::string> help = {
      {"params", "derived constants for (d, p, alpha)"},
      {"linear", "tabulate the linear solution I(r, t)"},
      {"profile", "solve the self-similar profile ODE"},
      {"evolve", "time-dependent radial run with snapshots and the R-trace"},
      {"stationary", "stationary solution with its sub- and super-solutions"},
      {"verify", "full pipeline with the pass/fail report"},
      {"convergence", "full pipeline, also writing profile, stationary and trace CSVs"},
      {"sweep", "verify over a list of (d, p, alpha) cases"},
  };
  return help.at(name);
}

inline int selfsim_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Point-source diffusion with power-law absorption: profiles, evolution and comparison audits"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;

  for (const auto& name : subcommand_names()) {
    CLI::App* sub = app.add_subcommand(name, subcommand_help(name));
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_dir, "output directory (default: $SELFSIM_OUT or .)");
    for (const auto& key : config_keys()) {
      auto* opt = sub->add_option(std::string("--") + key.name, flag_values[key.name], key.help);
      opt->default_str(key.default_value);
      flag_options[name + "/" + key.name] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  RunConfig cfg;
  try {
    ConfigMap file = config_path.empty() ? ConfigMap{} : read_config_file(config_path);
    ConfigMap flags;
    for (const auto& key : config_keys())
      if (flag_options[name + "/" + key.name]->count() > 0) flags[key.name] = flag_values[key.name];
    cfg = parse_config(file, flags);
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return run_subcommand(name, cfg, out_dir.empty() ? default_output_dir() : out_dir, out, err);
}

}  // namespace selfsim
