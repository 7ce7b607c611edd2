#include "ghmm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Filtering, information and model-selection runs for hidden Markov models"};
  app.set_version_flag("--version", ghmm::kVersion);
  std::string config, command, out = ".";
  ghmm::RunOptions opt;
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("command", command,
                 "simulate | loglik | score | hessian | fisher | kl | kl-sweep | quad-check | crlb | aic-order | "
                 "aic-states (overrides the config's command)");
  app.add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  auto* t = app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  auto* s = app.add_option("--seed", seed, "master seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ghmm::kExitValidation;
  }
  opt.out = out;
  if (*t) opt.threads = threads;
  if (*s) opt.seed = seed;
  if (command.empty()) return ghmm::run_config_file(config, opt, std::cerr);

  std::ifstream in(config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: InvalidConfig: " << e.what() << '\n';
    return ghmm::kExitValidation;
  }
  if (!j.is_object()) {
    std::cerr << "error: InvalidConfig: config must be a JSON object\n";
    return ghmm::kExitValidation;
  }
  j["command"] = command;
  const std::filesystem::path parent = std::filesystem::path(config).parent_path();
  opt.base_dir = parent.empty() ? "." : parent;
  return ghmm::cmd_dispatch(std::move(j), opt, std::cerr);
}
