#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "tnop/commands.hpp"
#include "tnop/datagen.hpp"
#include "tnop/io.hpp"

namespace tnop {

namespace {

double u_fn(double x, bool constant) {
  return constant ? 0.7 : std::sin(2.0 * std::numbers::pi * x) + x * x;
}

double v_fn(double y, bool constant) { return constant ? -0.4 : std::cos(std::numbers::pi * y) + 0.5 * y; }

Matrix column(const Vector& x, const std::function<double(double)>& f) {
  Matrix m(x.size(), 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) m(i, 0) = f(x[i]);
  return m;
}

PointwiseHead random_head(const VerifyConfig& cfg) {
  std::mt19937_64 rng(cfg.param_seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  PointwiseHead h;
  h.q = Matrix::NullaryExpr(cfg.d_k, 1, [&] { return U(rng); });
  h.k = Matrix::NullaryExpr(cfg.d_k, 1, [&] { return U(rng); });
  h.v = Matrix::NullaryExpr(cfg.d_v, 1, [&] { return U(rng); });
  return h;
}

std::string kind_name(VerifyKind k) { return k == VerifyKind::SelfAttention ? "self" : "cross"; }

}  // namespace

VerifyReport verify_convergence(const VerifyConfig& cfg) {
  const bool cross = cfg.kind == VerifyKind::CrossAttention;
  const double e_len = cross ? 2.0 : 1.0;  // keys live on [0,1] or E = [0,2]
  auto query_fn = [&](double x) { return u_fn(x, cfg.constant_input); };
  auto key_fn = [&](double y) { return cross ? v_fn(y, cfg.constant_input) : u_fn(y, cfg.constant_input); };
  const PointwiseHead head = random_head(cfg);

  const Vector xq = Vector::LinSpaced(cfg.query_points, 0.0, 1.0);
  const Matrix uq = column(xq, query_fn);

  // Trapezoid reference of the continuum operator at the query points.
  const GridSpec ref_grid = GridSpec::uniform({cfg.reference_points});
  const Domain e_dom = Domain::interval(0.0, e_len);
  const Vector yr = Vector::LinSpaced(cfg.reference_points, 0.0, e_len);
  const SampledFunction keys_ref(e_dom, ref_grid, column(yr, key_fn));
  const SampledFunction queries(Domain::interval(0.0, 1.0), GridSpec::uniform({cfg.query_points}), uq);
  const Matrix reference =
      quadrature_cross_attention(queries, keys_ref, head, trapezoid_weights(ref_grid, e_dom)).values;

  VerifyReport r;
  r.kind = cfg.kind;
  for (int n = cfg.n_min; n <= cfg.n_max; n *= 2) r.n.push_back(n);
  std::uniform_real_distribution<double> U(0.0, e_len);
  for (int n : r.n) {
    std::vector<double> errs;
    for (int s = 0; s < cfg.seeds; ++s) {
      std::mt19937_64 rng(sample_seed(static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(n)));
      Vector y(n);
      for (int i = 0; i < n; ++i) y[i] = U(rng);
      const Matrix ks = column(y, key_fn);
      const Matrix est = cross ? mc_cross_attention_estimate(uq, ks, head) : mc_attention_estimate(uq, ks, head);
      errs.push_back((est - reference).rowwise().norm().maxCoeff());
    }
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= static_cast<double>(errs.size());
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    r.mean_error.push_back(mean);
    r.std_error.push_back(std::sqrt(var / static_cast<double>(errs.size() - 1)));
    for (double e : errs) r.max_error = std::max(r.max_error, e);
  }

  const auto m = static_cast<double>(r.n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < r.n.size(); ++i) {
    const double x = std::log(static_cast<double>(r.n[i]));
    const double y = std::log(std::max(r.mean_error[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  r.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  for (std::size_t i = 1; i < r.mean_error.size(); ++i)
    if (r.mean_error[i] > r.mean_error[i - 1]) ++r.inversions;
  r.passed = r.slope >= -0.65 && r.slope <= -0.35 && r.inversions <= 2;
  return r;
}

std::string verify_report_json(const VerifyReport& r) {
  nlohmann::json j;
  j["kind"] = kind_name(r.kind);
  j["n"] = r.n;
  j["mean_sup_error"] = r.mean_error;
  j["std_sup_error"] = r.std_error;
  j["slope"] = r.slope;
  j["slope_band"] = {-0.65, -0.35};
  j["inversions"] = r.inversions;
  j["max_error"] = r.max_error;
  j["passed"] = r.passed;
  j["note"] = "sup norm taken over the query grid; a lower bound for the continuum sup norm";
  return j.dump(2) + "\n";
}

VerifyReport cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const VerifyReport r = verify_convergence(cfg.verify);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string stem = "verify_" + kind_name(r.kind);
  write_text(out_dir / (stem + ".json"), verify_report_json(r));
  std::ostringstream csv;
  csv.precision(17);
  csv << "n,mean_sup_error,std_sup_error\n";
  for (std::size_t i = 0; i < r.n.size(); ++i) csv << r.n[i] << "," << r.mean_error[i] << "," << r.std_error[i] << "\n";
  write_text(out_dir / (stem + ".csv"), csv.str());
  return r;
}

}  // namespace tnop
