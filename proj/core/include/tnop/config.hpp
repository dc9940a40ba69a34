#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tnop/complexity.hpp"
#include "tnop/datagen.hpp"
#include "tnop/models.hpp"
#include "tnop/training.hpp"

namespace tnop {

enum class Problem { Lorenz63, Cde, Darcy, Kolmogorov };

std::string problem_name(Problem p);
Problem parse_problem(const std::string& name);

/// Lorenz time grids: the uniform grid, or one of the two irregular index sets.
enum class TimeGrid { Uniform, IrregularTrain, IrregularTest };

struct GeneratorSpec {
  Problem problem = Problem::Lorenz63;
  std::size_t n_samples = 16;
  std::optional<std::uint64_t> seed;
  LorenzSpec lorenz;
  TimeGrid time_grid = TimeGrid::Uniform;
  CdeSpec cde;
  DarcySpec darcy;
  KolmogorovSpec kolmogorov;

  /// Draws `n` samples with the given seed.
  Dataset generate(std::size_t n, std::uint64_t seed) const;

  /// Same law sampled `factor` times finer (0.5 halves the resolution). Throws
  /// ConfigError when the factor does not give a whole grid.
  GeneratorSpec at_resolution(double factor) const;

  /// Canonical JSON text of these generator settings.
  std::string to_json() const;
};

struct DataConfig {
  std::string train_path;  // container directories; empty means generate
  std::string test_path;
  std::optional<GeneratorSpec> generator;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct ModelBlock {
  ModelConfig model;      // dim, d_u, d_z and d_ic are filled from the data
  bool ic_token = true;   // use the dataset's IC features when it has them
  std::optional<std::uint64_t> init_seed;
};

struct EvalConfig {
  std::vector<double> resolutions{0.5, 1.0, 2.0};
  std::optional<bool> smoothing;  // overrides the checkpoint's setting
};

enum class VerifyKind { SelfAttention, CrossAttention };

struct VerifyConfig {
  VerifyKind kind = VerifyKind::SelfAttention;
  int seeds = 32;
  int n_min = 16;
  int n_max = 4096;
  int reference_points = 8192;
  int query_points = 65;
  int d_k = 4;
  int d_v = 2;
  std::uint64_t param_seed = 7;
  bool constant_input = false;  // u = const, for which the estimator is exact
};

struct ComplexityBlock {
  std::vector<Architecture> rows{Architecture::FNO, Architecture::AFNO, Architecture::TNO,
                                 Architecture::ViTNO, Architecture::FANO};
  ComplexityConfig hyper = [] {
    ComplexityConfig c;
    c.cutoffs = {4, 4};
    c.patches = 16;
    return c;
  }();
  std::int64_t n_points = 4096;
  std::int64_t instantiate_limit = 4'000'000;  // larger rows skip the constructed count
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ModelBlock model;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;
  VerifyConfig verify;
  ComplexityBlock complexity;

  /// Applies a command-line seed: replaces the top-level seed and every sub-seed.
  void override_seed(std::uint64_t s);

  std::uint64_t generator_seed() const;
  std::uint64_t test_seed() const;  // stream of generated test sets
  std::uint64_t init_seed() const;
};

/// Parses and validates a configuration. Unknown keys, wrong types and bad
/// values throw ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Model configuration with dimensions taken from `data`.
ModelConfig resolve_model(const ExperimentConfig& cfg, const Dataset& data);

}  // namespace tnop
