#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tnop/dataset.hpp"

namespace tnop {

/// Independent per-sample seed; serial and parallel generation agree.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// --- Lorenz-63 ---------------------------------------------------------------

enum class LorenzTask { XtoYZ, XtoY };

std::string lorenz_task_name(LorenzTask t);
LorenzTask parse_lorenz_task(const std::string& name);

struct LorenzSpec {
  double T = 2.0;
  double dt = 0.01;
  LorenzTask task = LorenzTask::XtoYZ;
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double spinup = 5.0;
  double max_step = 0.0025;  // internal RK4 step bound
};

using LorenzState = std::array<double, 3>;

LorenzState lorenz_rhs(const LorenzState& s, const LorenzSpec& spec);
LorenzState lorenz_rk4_step(const LorenzState& s, double h, const LorenzSpec& spec);

/// States at increasing `times` (times[0] is the initial time). Each gap is split
/// into equal RK4 steps no longer than spec.max_step.
std::vector<LorenzState> lorenz_trajectory(const LorenzState& x0,
                                           const std::vector<double>& times,
                                           const LorenzSpec& spec);

/// Uniform grid 0, dt, ..., T unless `grid` (1D, on [0, t_end]) is given.
Dataset lorenz63_dataset(std::size_t n_samples, const LorenzSpec& spec, std::uint64_t seed,
                         const GridSpec* grid = nullptr);

// --- Controlled ODE ----------------------------------------------------------

struct CdeSpec {
  int J = 10;
  double T = 1.0;
  double dt = 0.01;
  double z0 = 1.0;
  double max_step = 1e-3;
};

/// Integrates dz/dt = sin(z) u'(t) with RK4 and returns z at `times`.
std::vector<double> cde_solve(const std::function<double(double)>& u_prime, double z0,
                              const std::vector<double>& times, double max_step);

Dataset cde_dataset(std::size_t n_samples, const CdeSpec& spec, std::uint64_t seed);

// --- Gaussian random fields on [0,1]^2 ---------------------------------------

enum class PushForward { None, Exp, PiecewiseConstant };

std::string push_forward_name(PushForward p);
PushForward parse_push_forward(const std::string& name);

struct GrfSpec {
  double amplitude = 144.0;  // 12^2
  double shift = 36.0;       // 6^2
  double exponent = 2.0;
  int truncation = 0;        // per-axis cutoff; 0 uses the grid's highest cosine mode
  PushForward push_forward = PushForward::Exp;
  double hi = 12.0;
  double lo = 3.0;
};

/// Covariance eigenvalue amplitude (pi^2 |k|^2 + shift)^(-exponent).
double grf_eigenvalue(const GrfSpec& spec, int k1, int k2);

/// Modes (k1, k2) with max(k1, k2) <= K, k != 0, in shell order: a smaller
/// truncation draws a prefix of the same coefficient stream.
std::vector<std::array<int, 2>> grf_modes(int truncation);

/// Pointwise variance sum_k lambda_k phi_k(x)^2 of the truncated field.
double grf_pointwise_variance(const GrfSpec& spec, int truncation, double x1, double x2);

/// Field sum_k sqrt(lambda_k) xi_k phi_k with phi_k = prod_i c(k_i) cos(pi k_i x_i),
/// c(0) = 1 and c(k > 0) = sqrt(2), followed by the push-forward.
SampledFunction grf_sample(const GrfSpec& spec, const Domain& domain, const GridSpec& grid,
                           std::uint64_t seed);

// --- Darcy flow --------------------------------------------------------------

enum class FaceAverage { Arithmetic, Harmonic };

struct DarcySpec {
  int resolution = 32;
  double tolerance = 1e-10;
  int max_iterations = 20000;
  FaceAverage face = FaceAverage::Arithmetic;
  GrfSpec grf;
};

/// -div(a grad u) = 1 on [0,1]^2 with u = 0 on the boundary; 5-point finite
/// differences on the node grid of `a`, solved by conjugate gradients.
SampledFunction darcy_solve(const SampledFunction& a, const DarcySpec& spec = {});

/// ||A u - f|| / ||f|| of the discrete system over interior nodes.
double darcy_residual(const SampledFunction& a, const SampledFunction& u,
                      const DarcySpec& spec = {});

Dataset darcy_dataset(std::size_t n_samples, const DarcySpec& spec, std::uint64_t seed);

// --- Kolmogorov flow ---------------------------------------------------------

struct KolmogorovSpec {
  int resolution = 64;
  double nu = 1.0 / 70.0;
  int forcing_wavenumber = 4;
  bool forcing = true;
  double dt = 1e-3;
  double T = 11.0;
  double snapshot_dt = 0.1;
  double ic_amplitude = 343.0;  // 7^3
  double ic_shift = 49.0;
  double ic_exponent = 5.0;
  int ic_modes = 0;  // per-axis cutoff of the initial condition; 0 uses the dealiased band
};

/// Spectral state on an n x n periodic grid over [0, 2 pi]^2.
class KolmogorovSolver {
 public:
  explicit KolmogorovSolver(const KolmogorovSpec& spec);

  int resolution() const { return n_; }

  /// Mean-zero Gaussian initial vorticity on the grid (n*n x 1).
  Matrix initial_condition(std::uint64_t seed) const;

  /// Advances vorticity values by `steps` integrating-factor RK4 steps.
  Matrix advance(const Matrix& omega, int steps) const;

  /// Grid mean of the vorticity (Fourier mode 0 / N).
  static double mean(const Matrix& omega) { return omega.mean(); }

  /// (1/2) mean of omega^2.
  static double enstrophy(const Matrix& omega) { return 0.5 * omega.squaredNorm() / omega.size(); }

 private:
  CMatrix nonlinear(const CMatrix& w_hat) const;

  KolmogorovSpec spec_;
  int n_;
  Vector kx_, ky_, k2_;   // per Fourier bin, row-major (y, x)
  std::vector<bool> keep_;
  CMatrix forcing_hat_;
};

Dataset kolmogorov_dataset(std::size_t n_samples, const KolmogorovSpec& spec, std::uint64_t seed);

// --- Irregular time grids ----------------------------------------------------

enum class TimeGridKind { Train, Test };

/// Train: {n dt}, n = 0..N. Test: {n dt}, n = 0..N/2, then {2 n dt}, n = N/2+1..3N/4.
GridSpec irregular_time_grid(int n, double dt, TimeGridKind kind);

}  // namespace tnop
