#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tnop/dataset.hpp"
#include "tnop/models.hpp"

namespace tnop {

enum class LossKind { RelL2, RelH1 };

std::string loss_name(LossKind l);
LossKind parse_loss(const std::string& name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 10;
  LossKind loss = LossKind::RelL2;
  std::uint64_t seed = 0;
  AdamParams adam;

  void validate() const;
};

/// sqrt(sum w |p - t|^2) / sqrt(sum w |t|^2). If `grad` is given it receives the
/// derivative with respect to `pred` (zero where pred == truth).
double relative_l2(const Matrix& pred, const Matrix& truth, const QuadratureWeights& w,
                   Matrix* grad = nullptr);

/// Relative error in the H1 norm on a uniform grid; derivatives by central
/// differences with one-sided stencils at the ends of each axis.
double relative_h1(const Matrix& pred, const Matrix& truth, const GridSpec& grid,
                   const Domain& domain, Matrix* grad = nullptr);

/// Per-sample loss of `pred` against truth on the dataset's grid.
double sample_loss(LossKind kind, const Matrix& pred, const Matrix& truth, const Dataset& data,
                   Matrix* grad = nullptr);

struct LossGradient {
  double loss = 0.0;  // mean over the batch
  Vector grad;        // flattened, same layout as flatten(params)
};

/// Exact gradient of the mean batch loss. Samples are reduced in the order given.
LossGradient backward(const Model& model, const Dataset& data,
                      const std::vector<std::size_t>& batch, LossKind loss);

/// Mean batch loss only.
double batch_loss(const Model& model, const Dataset& data, const std::vector<std::size_t>& batch,
                  LossKind loss);

struct GradcheckEntry {
  std::size_t index = 0;
  std::string group;
  double analytic = 0.0;
  double numeric = 0.0;
  double deviation = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_deviation = 0.0;
};

struct GradcheckOptions {
  double h = 1e-6;                // step is h (1 + |theta_i|)
  std::size_t coordinates = 200;  // random coordinates on top of one per group
  std::uint64_t seed = 0;
};

/// Compares `analytic` with central differences of `loss`. The deviation is
/// |a - n| / max(|a|, |n|, 1e-3 max_i |analytic_i|), so entries far below the
/// gradient's scale are judged against that scale instead of their own size.
/// `groups` names each coordinate's parameter group (may be empty).
GradcheckReport finite_diff_gradcheck(const std::function<double(const Vector&)>& loss,
                                      const Vector& theta, const Vector& analytic,
                                      const std::vector<std::string>& groups,
                                      const GradcheckOptions& opt = {});

GradcheckReport finite_diff_gradcheck(const Model& model, const Dataset& data,
                                      const std::vector<std::size_t>& batch, LossKind loss,
                                      const GradcheckOptions& opt = {});

/// Group name of every flattened coordinate.
std::vector<std::string> parameter_groups(const ModelParameters& p);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update of `theta`.
void adam_step(Vector& theta, const Vector& grad, AdamState& state, double learning_rate,
               const AdamParams& adam);

struct Metrics {
  std::vector<double> errors;
  double median = 0.0;  // lower median
  double mean = 0.0;
  double max = 0.0;
  std::size_t median_index = 0;
  std::size_t worst_index = 0;
};

Metrics summarize(std::vector<double> errors);

/// Per-sample relative L2 error of the model on `data`.
Metrics evaluate(const Model& model, const Dataset& data);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_median_rel_l2 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  bool aborted = false;
  std::string abort_reason;
};

/// Fits per-channel mean/std of inputs, IC features and outputs.
Normalizer fit_normalizer(const Dataset& data);

/// Minibatch Adam on the dataset. Batches follow a seed-determined shuffle per
/// epoch. A non-finite loss stops training, keeps the last finite parameters and
/// returns the history so far with `aborted` set. `on_epoch` is called after each epoch.
TrainResult train(Model& model, const Dataset& train_set, const Dataset* validation,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// History as CSV text with header epoch,train_loss,val_median_rel_l2,wall_seconds.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace tnop
