#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tnop/config.hpp"
#include "tnop/training.hpp"

namespace tnop {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4, kExitOther = 1 };

/// Runs `body`, maps its exception (if any) to an exit code and prints the message to `err`.
int run_guarded(const std::function<void()>& body, std::ostream& err);

/// Training and test sets named by the data block: containers, or generated from
/// the generator spec with the generator and test seed streams.
Dataset load_train_set(const ExperimentConfig& cfg);
Dataset load_test_set(const ExperimentConfig& cfg);

/// Generates generator.n_samples samples and writes a container to `out_dir`.
Dataset cmd_datagen(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct TrainOutcome {
  Model model;
  TrainResult result;
};

/// Trains from a fresh initialization and writes checkpoint.bin and history.csv.
/// A non-finite loss writes the partial history and throws NumericError.
TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                       std::ostream& log);

/// Writes metrics.json: per-sample relative L2 errors, aggregates and the
/// indices of the median and worst samples.
Metrics cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& out_dir);

std::string metrics_json(const Metrics& m);

struct SweepRow {
  double factor = 1.0;
  std::size_t points = 0;
  double median = 0.0;
};

/// Zero-shot evaluation at each eval.resolutions factor on test sets drawn from
/// the same law and seed stream. Incompatible factors are reported to `log` and
/// skipped. Writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                                const std::filesystem::path& out_dir, std::ostream& log);

struct ComplexityRow {
  Architecture arch = Architecture::TNO;
  std::int64_t params = 0;
  std::optional<std::int64_t> constructed;  // count_params of an instantiated model
  std::int64_t flops = 0;
};

/// Evaluates both closed forms for the requested rows; prints a table to `out`
/// and writes complexity.csv.
std::vector<ComplexityRow> cmd_complexity(const ExperimentConfig& cfg,
                                          const std::filesystem::path& out_dir, std::ostream& out);

// --- Monte-Carlo convergence -------------------------------------------------

struct VerifyReport {
  VerifyKind kind = VerifyKind::SelfAttention;
  std::vector<int> n;
  std::vector<double> mean_error;  // over seeds, sup over the query grid
  std::vector<double> std_error;
  double slope = 0.0;              // least-squares fit of log error against log N
  int inversions = 0;              // consecutive increases of the mean error
  double max_error = 0.0;
  bool passed = false;
};

/// Monte-Carlo attention against a trapezoid reference. Self-attention uses
/// u(x) = sin(2 pi x) + x^2 on [0,1]; cross-attention queries with u and keys
/// with v(y) = cos(pi y) + y/2 on E = [0,2]. The sup norm is the max over the
/// query grid, which bounds the continuum sup norm from below.
VerifyReport verify_convergence(const VerifyConfig& cfg);

/// Runs verify_convergence and writes verify_<kind>.json and .csv.
VerifyReport cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::string verify_report_json(const VerifyReport& r);

}  // namespace tnop
