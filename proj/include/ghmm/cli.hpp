#pragma once

#include "ghmm/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace ghmm {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

struct ModelSetup {
  std::shared_ptr<const Model> model;
  Vec theta;
};

/// Builds a model and its θ from a config block; `path` prefixes field names
/// in error messages. Defaults are written back into `block`.
ModelSetup make_model(nlohmann::json& block, const std::string& path = "model");

/// CSV with a header row; columns named y1..yd are read in that order, other
/// columns (t, x) are ignored.
Series read_observations_csv(const std::filesystem::path& file);

struct RunOptions {
  std::filesystem::path out = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  /// Relative input paths in the config resolve against this directory.
  std::filesystem::path base_dir = ".";
};

/// Runs the config's command and writes `<command>.csv`, `<command>.json` and
/// `run_meta.json` into `opt.out`. Returns the process exit status; errors are
/// reported on `err`.
int cmd_dispatch(nlohmann::json config, const RunOptions& opt, std::ostream& err);

/// Loads the config file, then cmd_dispatch.
int run_config_file(const std::filesystem::path& config, RunOptions opt, std::ostream& err);

}  // namespace ghmm
