#include "tnop/training.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>
#include <random>

namespace tnop {

std::string loss_name(LossKind l) { return l == LossKind::RelL2 ? "rel_l2" : "rel_h1"; }

LossKind parse_loss(const std::string& name) {
  if (name == "rel_l2") return LossKind::RelL2;
  if (name == "rel_h1") return LossKind::RelH1;
  throw ConfigError("unknown loss '" + name + "' (expected rel_l2 or rel_h1)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train: learning_rate must be a finite non-negative number");
  if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (epochs < 0) throw ConfigError("train: epochs must be non-negative");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in (0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train: adam eps must be positive");
}

double relative_l2(const Matrix& pred, const Matrix& truth, const QuadratureWeights& w,
                   Matrix* grad) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("relative_l2: prediction and truth shapes differ");
  if (w.size() != static_cast<std::size_t>(truth.rows()))
    throw std::invalid_argument("relative_l2: weights do not match the grid");
  const Matrix e = pred - truth;
  const double en = std::sqrt(w.weights.dot(e.rowwise().squaredNorm()));
  const double tn = std::sqrt(w.weights.dot(truth.rowwise().squaredNorm()));
  if (!(tn > 0.0)) throw NumericError("loss", "truth has zero norm");
  if (grad != nullptr) {
    if (en > 0.0)
      *grad = (e.array().colwise() * w.weights.array()).matrix() / (en * tn);
    else
      *grad = Matrix::Zero(e.rows(), e.cols());
  }
  return en / tn;
}

namespace {

using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// First-derivative matrices, one per axis.
std::vector<Sparse> difference_operators(const GridSpec& grid, const Domain& domain) {
  if (!grid.is_uniform()) throw std::invalid_argument("relative_h1: uniform grid required");
  const auto shape = grid.shape();
  const bool periodic = grid.is_periodic();
  const int d = static_cast<int>(shape.size());
  const int n = static_cast<int>(grid.point_count());
  std::vector<int> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * shape[a + 1];
  std::vector<Sparse> ops;
  for (int a = 0; a < d; ++a) {
    const int m = shape[a];
    const double h = domain.axis(a).length() / (periodic ? m : m - 1);
    std::vector<Eigen::Triplet<double>> t;
    for (int r = 0; r < n; ++r) {
      const int i = (r / stride[a]) % m;
      const int base = r - i * stride[a];
      auto at = [&](int j) { return base + j * stride[a]; };
      if (periodic) {
        t.emplace_back(r, at((i + 1) % m), 0.5 / h);
        t.emplace_back(r, at((i + m - 1) % m), -0.5 / h);
      } else if (i == 0) {
        t.emplace_back(r, at(1), 1.0 / h);
        t.emplace_back(r, at(0), -1.0 / h);
      } else if (i == m - 1) {
        t.emplace_back(r, at(m - 1), 1.0 / h);
        t.emplace_back(r, at(m - 2), -1.0 / h);
      } else {
        t.emplace_back(r, at(i + 1), 0.5 / h);
        t.emplace_back(r, at(i - 1), -0.5 / h);
      }
    }
    Sparse D(n, n);
    D.setFromTriplets(t.begin(), t.end());
    ops.push_back(std::move(D));
  }
  return ops;
}

double weighted_sq(const Vector& w, const Matrix& f) { return w.dot(f.rowwise().squaredNorm()); }

}  // namespace

double relative_h1(const Matrix& pred, const Matrix& truth, const GridSpec& grid,
                   const Domain& domain, Matrix* grad) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("relative_h1: prediction and truth shapes differ");
  if (static_cast<std::size_t>(truth.rows()) != grid.point_count())
    throw std::invalid_argument("relative_h1: values do not match the grid");
  const Vector w = default_weights(grid, domain).weights;
  const auto ops = difference_operators(grid, domain);
  const Matrix e = pred - truth;
  double en2 = weighted_sq(w, e);
  double tn2 = weighted_sq(w, truth);
  std::vector<Matrix> de;
  for (const auto& D : ops) {
    de.push_back(D * e);
    en2 += weighted_sq(w, de.back());
    tn2 += weighted_sq(w, D * truth);
  }
  const double en = std::sqrt(en2), tn = std::sqrt(tn2);
  if (!(tn > 0.0)) throw NumericError("loss", "truth has zero norm");
  if (grad != nullptr) {
    if (en > 0.0) {
      Matrix g = (e.array().colwise() * w.array()).matrix();
      for (std::size_t a = 0; a < ops.size(); ++a)
        g += ops[a].transpose() * (de[a].array().colwise() * w.array()).matrix();
      *grad = g / (en * tn);
    } else {
      *grad = Matrix::Zero(e.rows(), e.cols());
    }
  }
  return en / tn;
}

double sample_loss(LossKind kind, const Matrix& pred, const Matrix& truth, const Dataset& data,
                   Matrix* grad) {
  if (kind == LossKind::RelH1) return relative_h1(pred, truth, data.grid, data.domain, grad);
  return relative_l2(pred, truth, default_weights(data.grid, data.domain), grad);
}

LossGradient backward(const Model& model, const Dataset& data,
                      const std::vector<std::size_t>& batch, LossKind loss) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  ModelParameters g = zeros_like(model.params);
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i : batch) {
    const Matrix pred = predict(model, data.input(i), data.ic_of(i), nullptr, &cache);
    Matrix gp;
    const double l = sample_loss(loss, pred, data.outputs[i], data, &gp);
    if (!std::isfinite(l)) throw NumericError("loss", "non-finite loss at sample " + std::to_string(i));
    total += l;
    model_backward(model.params, cache, output_grad_to_raw(model, gp), g);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  return {total * inv, flatten(g) * inv};
}

double batch_loss(const Model& model, const Dataset& data, const std::vector<std::size_t>& batch,
                  LossKind loss) {
  double total = 0.0;
  for (std::size_t i : batch) {
    const Matrix pred = predict(model, data.input(i), data.ic_of(i));
    total += sample_loss(loss, pred, data.outputs[i], data);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<std::string> parameter_groups(const ModelParameters& p) {
  std::vector<std::string> names;
  visit_parameters(p, [&](const ParamGroup& g, const double*, std::size_t n) {
    names.insert(names.end(), n, g.name);
  });
  return names;
}

GradcheckReport finite_diff_gradcheck(const std::function<double(const Vector&)>& loss,
                                      const Vector& theta, const Vector& analytic,
                                      const std::vector<std::string>& groups,
                                      const GradcheckOptions& opt) {
  if (analytic.size() != theta.size())
    throw std::invalid_argument("gradcheck: gradient and parameter sizes differ");
  const auto n = static_cast<std::size_t>(theta.size());
  std::vector<std::size_t> picks;
  if (!groups.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      if (i == 0 || groups[i] != groups[i - 1]) picks.push_back(i);
  }
  if (n <= opt.coordinates + picks.size()) {
    picks.resize(n);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
  } else {
    // Distinct random coordinates on top of the group heads.
    std::vector<std::size_t> rest;
    rest.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::binary_search(picks.begin(), picks.end(), i)) rest.push_back(i);
    std::mt19937_64 rng(opt.seed);
    std::sample(rest.begin(), rest.end(), std::back_inserter(picks), opt.coordinates, rng);
    std::sort(picks.begin(), picks.end());
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  }
  const double floor = 1e-3 * analytic.cwiseAbs().maxCoeff();
  GradcheckReport report;
  Vector t = theta;
  for (std::size_t i : picks) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double h = opt.h * (1.0 + std::abs(theta[ii]));
    t[ii] = theta[ii] + h;
    const double lp = loss(t);
    t[ii] = theta[ii] - h;
    const double lm = loss(t);
    t[ii] = theta[ii];
    GradcheckEntry e;
    e.index = i;
    e.group = groups.empty() ? std::string() : groups[i];
    e.analytic = analytic[ii];
    e.numeric = (lp - lm) / (2.0 * h);
    const double scale = std::max({std::abs(e.analytic), std::abs(e.numeric), floor});
    e.deviation = scale > 0.0 ? std::abs(e.analytic - e.numeric) / scale : 0.0;
    report.max_deviation = std::max(report.max_deviation, e.deviation);
    report.entries.push_back(std::move(e));
  }
  return report;
}

GradcheckReport finite_diff_gradcheck(const Model& model, const Dataset& data,
                                      const std::vector<std::size_t>& batch, LossKind loss,
                                      const GradcheckOptions& opt) {
  const LossGradient lg = backward(model, data, batch, loss);
  Model probe = model;
  auto f = [&](const Vector& theta) {
    unflatten(theta, probe.params);
    return batch_loss(probe, data, batch, loss);
  };
  return finite_diff_gradcheck(f, flatten(model.params), lg.grad,
                               parameter_groups(model.params), opt);
}

void adam_step(Vector& theta, const Vector& grad, AdamState& state, double learning_rate,
               const AdamParams& adam) {
  if (state.m.size() != theta.size()) {
    state.m = Vector::Zero(theta.size());
    state.v = Vector::Zero(theta.size());
    state.t = 0;
  }
  state.t += 1;
  state.m = adam.beta1 * state.m + (1.0 - adam.beta1) * grad;
  state.v = adam.beta2 * state.v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.t));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double mh = state.m[i] / c1;
    const double vh = state.v[i] / c2;
    theta[i] -= learning_rate * mh / (std::sqrt(vh) + adam.eps);
  }
}

Metrics summarize(std::vector<double> errors) {
  Metrics m;
  m.errors = std::move(errors);
  if (m.errors.empty()) return m;
  std::vector<std::size_t> order(m.errors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return m.errors[a] < m.errors[b]; });
  m.median_index = order[(order.size() - 1) / 2];
  m.worst_index = order.back();
  m.median = m.errors[m.median_index];
  m.max = m.errors[m.worst_index];
  double s = 0.0;
  for (double e : m.errors) s += e;
  m.mean = s / static_cast<double>(m.errors.size());
  return m;
}

Metrics evaluate(const Model& model, const Dataset& data) {
  const QuadratureWeights w = default_weights(data.grid, data.domain);
  std::vector<double> errors;
  errors.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix pred = predict(model, data.input(i), data.ic_of(i));
    errors.push_back(relative_l2(pred, data.outputs[i], w));
  }
  return summarize(std::move(errors));
}

Normalizer fit_normalizer(const Dataset& data) {
  auto fit = [](const std::vector<Matrix>& xs, int c, Vector& mean, Vector& sd) {
    mean = Vector::Zero(c);
    sd = Vector::Zero(c);
    double count = 0.0;
    for (const auto& x : xs) {
      mean += x.colwise().sum().transpose();
      count += static_cast<double>(x.rows());
    }
    mean /= count;
    for (const auto& x : xs) sd += (x.rowwise() - mean.transpose()).colwise().squaredNorm().transpose();
    sd = (sd / count).cwiseSqrt();
    for (Eigen::Index i = 0; i < c; ++i)
      if (!(sd[i] > 1e-12)) sd[i] = 1.0;
  };
  Normalizer n;
  if (data.size() == 0) return n;
  fit(data.inputs, data.channels_in, n.in_mean, n.in_std);
  fit(data.outputs, data.channels_out, n.out_mean, n.out_std);
  if (!data.ic.empty() && data.d_ic > 0) {
    std::vector<Matrix> rows;
    rows.reserve(data.ic.size());
    for (const auto& v : data.ic) rows.emplace_back(v.transpose());
    fit(rows, data.d_ic, n.ic_mean, n.ic_std);
  }
  return n;
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset* validation,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  TrainResult result;
  Vector theta = flatten(model.params);
  AdamState state;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto start = std::chrono::steady_clock::now();
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += bs) {
      const std::vector<std::size_t> batch(
          order.begin() + static_cast<std::ptrdiff_t>(first),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(first + bs, order.size())));
      LossGradient lg;
      try {
        lg = backward(model, train_set, batch, config.loss);
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        return result;
      }
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        result.aborted = true;
        result.abort_reason = "loss: non-finite loss or gradient in epoch " + std::to_string(epoch);
        return result;
      }
      sum += lg.loss * static_cast<double>(batch.size());
      Vector next = theta;
      adam_step(next, lg.grad, state, config.learning_rate, config.adam);
      if (!next.allFinite()) {
        result.aborted = true;
        result.abort_reason = "optimizer: non-finite parameters in epoch " + std::to_string(epoch);
        return result;
      }
      theta = std::move(next);
      unflatten(theta, model.params);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum / static_cast<double>(order.size());
    if (validation != nullptr && validation->size() > 0) {
      try {
        rec.val_median_rel_l2 = evaluate(model, *validation).median;
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        return result;
      }
    } else {
      rec.val_median_rel_l2 = std::nan("");
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_median_rel_l2,wall_seconds\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.3f\n", r.epoch, r.train_loss,
                  r.val_median_rel_l2, r.wall_seconds);
    out += line;
  }
  return out;
}

}  // namespace tnop
