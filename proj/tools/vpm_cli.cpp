#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpm/vpm.h"

namespace {

struct ConfigGuard {
  vpm_config* cfg = nullptr;
  ~ConfigGuard() { vpm_config_free(cfg); }
};

int report(vpm_status s) {
  if (s != VPM_OK) std::cerr << "error: " << vpm_last_error() << "\n";
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual point metering of zone-level HVAC energy flexibility"};
  app.set_version_flag("--version", std::string(vpm_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output_dir;
  std::vector<std::string> overrides;
  bool print_config = false;
  app.add_option("-c,--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("-o,--output-dir", output_dir, "Directory for inputs and outputs");
  app.add_option("-s,--set", overrides, "Override a config key, e.g. simulate.seed=7")->allow_extra_args(false)->take_all();
  app.add_flag("--print-config", print_config, "Print the effective configuration before running");

  for (const char* name : {"simulate", "fit", "disaggregate", "report", "pipeline"}) {
    const char* help = "";
    const std::string n = name;
    if (n == "simulate") help = "Generate a synthetic campus with known ground truth";
    else if (n == "fit") help = "Fit fresh-air, building and fan models";
    else if (n == "disaggregate") help = "Compute zone-level electrical loads";
    else if (n == "report") help = "Compute flexibility, heterogeneity and thermal metrics";
    else help = "simulate, fit, disaggregate and report in one go";
    app.add_subcommand(name, help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  ConfigGuard g;
  if (auto s = vpm_config_new(&g.cfg); s != VPM_OK) return report(s);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    if (auto s = vpm_config_merge_json(g.cfg, buf.str().c_str()); s != VPM_OK) return report(s);
  }
  if (!output_dir.empty())
    if (auto s = vpm_config_set(g.cfg, ("output_dir=\"" + output_dir + "\"").c_str()); s != VPM_OK) return report(s);
  for (const auto& o : overrides)
    if (auto s = vpm_config_set(g.cfg, o.c_str()); s != VPM_OK) return report(s);

  if (print_config) {
    char* text = nullptr;
    if (auto s = vpm_config_to_json(g.cfg, &text); s != VPM_OK) return report(s);
    std::cout << text << "\n";
    vpm_string_free(text);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  char* log = nullptr;
  const auto s = vpm_run(g.cfg, command.c_str(), &log);
  if (log) {
    std::cout << log;
    vpm_string_free(log);
  }
  return report(s);
}
