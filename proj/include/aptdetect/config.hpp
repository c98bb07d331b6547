#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "aptdetect/pipeline.hpp"

namespace aptd {

enum class ModelSelector : std::uint8_t { tree, nb, mlp, all };

// Output directory used when neither the config nor the command line names
// one.
inline constexpr const char* kOutDirEnv = "APTDETECT_OUT";

struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  ModelSelector model = ModelSelector::all;
  std::size_t k_folds = 10;
  std::uint64_t seed = 42;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::filesystem::path out_dir;
  std::size_t lift_bins = 10;

  TreeParams tree;
  double nb_alpha = 1.0;
  double nb_var_floor = 1e-9;
  std::vector<MaxoutShape> mlp_hidden = std::vector<MaxoutShape>(4, MaxoutShape{50, 2});
  TrainConfig mlp;
  double mlp_train_fraction = 0.8;

  std::vector<ModelKind> models() const;
  ModelSpec spec(ModelKind kind) const;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

// Default config with the output directory taken from $APTDETECT_OUT when set.
ExperimentConfig default_config();

// Flat INI-style text: [section] headers and key = value lines, ';' or '#'
// comments. Unknown sections or keys and ill-typed values throw ConfigError.
// Keys absent from the text keep the values already in `base`.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = default_config());
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = default_config());

// Every effective setting, in the format parse_config reads.
void write_config(std::ostream& out, const ExperimentConfig& config);

std::string_view to_string(ModelSelector s);

}  // namespace aptd
