#include "tnop/datagen.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "tnop/spectral.hpp"

namespace tnop {

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of the two words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

int steps_for(double gap, double max_step) {
  return std::max(1, static_cast<int>(std::ceil(gap / max_step - 1e-9)));
}

std::vector<double> uniform_times(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("time grid: T and dt must be positive");
  const long n = std::lround(T / dt);
  if (std::abs(n * dt - T) > 1e-9 * T)
    throw std::invalid_argument("time grid: T must be a multiple of dt");
  std::vector<double> t(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) * dt;
  return t;
}

std::vector<double> grid_times(const GridSpec& g, const Domain& d) {
  const Matrix c = g.coordinates(d);
  return std::vector<double>(c.data(), c.data() + c.rows());
}

}  // namespace

// --- Lorenz-63 ---------------------------------------------------------------

std::string lorenz_task_name(LorenzTask t) { return t == LorenzTask::XtoYZ ? "XtoYZ" : "XtoY"; }

LorenzTask parse_lorenz_task(const std::string& name) {
  if (name == "XtoYZ") return LorenzTask::XtoYZ;
  if (name == "XtoY") return LorenzTask::XtoY;
  throw ConfigError("unknown lorenz task '" + name + "' (expected XtoYZ or XtoY)");
}

LorenzState lorenz_rhs(const LorenzState& s, const LorenzSpec& p) {
  return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
}

LorenzState lorenz_rk4_step(const LorenzState& s, double h, const LorenzSpec& p) {
  auto axpy = [](const LorenzState& x, double a, const LorenzState& y) {
    return LorenzState{x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2]};
  };
  const LorenzState k1 = lorenz_rhs(s, p);
  const LorenzState k2 = lorenz_rhs(axpy(s, 0.5 * h, k1), p);
  const LorenzState k3 = lorenz_rhs(axpy(s, 0.5 * h, k2), p);
  const LorenzState k4 = lorenz_rhs(axpy(s, h, k3), p);
  LorenzState out;
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

std::vector<LorenzState> lorenz_trajectory(const LorenzState& x0,
                                           const std::vector<double>& times,
                                           const LorenzSpec& spec) {
  std::vector<LorenzState> out;
  out.reserve(times.size());
  LorenzState s = x0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) {
      const double gap = times[i] - times[i - 1];
      if (!(gap > 0.0)) throw std::invalid_argument("lorenz_trajectory: times must increase");
      const int m = steps_for(gap, spec.max_step);
      for (int j = 0; j < m; ++j) s = lorenz_rk4_step(s, gap / m, spec);
    }
    out.push_back(s);
  }
  return out;
}

Dataset lorenz63_dataset(std::size_t n_samples, const LorenzSpec& spec, std::uint64_t seed,
                         const GridSpec* grid) {
  if (!(spec.dt > 0.0)) throw ConfigError("lorenz: dt must be positive");
  Dataset d;
  d.problem = "lorenz63";
  if (grid != nullptr) {
    if (grid->dim() != 1) throw ConfigError("lorenz: time grids are one-dimensional");
    const double t_end = grid->is_uniform() ? spec.T : grid->as_irregular().coords.back();
    d.domain = Domain::interval(0.0, t_end);
    d.grid = *grid;
  } else {
    d.domain = Domain::interval(0.0, spec.T);
    d.grid = GridSpec::uniform({static_cast<int>(uniform_times(spec.T, spec.dt).size())});
  }
  d.grid.validate(d.domain);
  const std::vector<double> times = grid_times(d.grid, d.domain);
  if (times.front() != 0.0) throw ConfigError("lorenz: time grids must start at 0");
  const bool yz = spec.task == LorenzTask::XtoYZ;
  d.channels_in = 1;
  d.channels_out = yz ? 2 : 1;
  d.d_ic = yz ? 2 : 0;
  d.seed = seed;

  std::size_t regenerated = 0;
  const auto n = static_cast<Eigen::Index>(times.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(sample_seed(seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<LorenzState> traj;
    for (;;) {
      LorenzState x0{7.5 * normal(rng), 9.0 * normal(rng), 25.0 * normal(rng) + 24.0};
      if (spec.spinup > 0.0) x0 = lorenz_trajectory(x0, {0.0, spec.spinup}, spec).back();
      traj = lorenz_trajectory(x0, times, spec);
      bool finite = true;
      for (const auto& s : traj) finite = finite && std::isfinite(s[0] + s[1] + s[2]);
      if (finite) break;
      ++regenerated;
    }
    Matrix in(n, 1), out(n, d.channels_out);
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto& s = traj[static_cast<std::size_t>(t)];
      in(t, 0) = s[0];
      out(t, 0) = s[1];
      if (yz) out(t, 1) = s[2];
    }
    d.inputs.push_back(std::move(in));
    d.outputs.push_back(std::move(out));
    if (yz) d.ic.push_back(Eigen::Vector2d(traj.front()[1], traj.front()[2]));
  }
  nlohmann::json g = {{"name", "lorenz63"},
                      {"task", lorenz_task_name(spec.task)},
                      {"T", spec.T},
                      {"dt", spec.dt},
                      {"sigma", spec.sigma},
                      {"rho", spec.rho},
                      {"beta", spec.beta},
                      {"spinup", spec.spinup},
                      {"max_step", spec.max_step},
                      {"ic_law", "x0 ~ N(0,1)*(7.5,9,25)+(0,0,24), then spin-up"},
                      {"regenerated", regenerated}};
  d.generator = g.dump();
  return d;
}

// --- Controlled ODE ----------------------------------------------------------

std::vector<double> cde_solve(const std::function<double(double)>& u_prime, double z0,
                              const std::vector<double>& times, double max_step) {
  std::vector<double> z;
  z.reserve(times.size());
  double s = z0;
  auto f = [&](double t, double y) { return std::sin(y) * u_prime(t); };
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) {
      const double gap = times[i] - times[i - 1];
      const int m = steps_for(gap, max_step);
      const double h = gap / m;
      for (int j = 0; j < m; ++j) {
        const double t = times[i - 1] + j * h;
        const double k1 = f(t, s);
        const double k2 = f(t + 0.5 * h, s + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, s + 0.5 * h * k2);
        const double k4 = f(t + h, s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    z.push_back(s);
  }
  return z;
}

Dataset cde_dataset(std::size_t n_samples, const CdeSpec& spec, std::uint64_t seed) {
  if (!(spec.dt > 0.0)) throw ConfigError("cde: dt must be positive");
  if (spec.J < 1) throw ConfigError("cde: J must be at least 1");
  const std::vector<double> times = uniform_times(spec.T, spec.dt);
  Dataset d;
  d.problem = "cde";
  d.domain = Domain::interval(0.0, spec.T);
  d.grid = GridSpec::uniform({static_cast<int>(times.size())});
  d.seed = seed;
  const auto n = static_cast<Eigen::Index>(times.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(sample_seed(seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, spec.J);
    std::vector<double> xi(spec.J), eta(spec.J);
    for (int j = 0; j < spec.J; ++j) {
      xi[j] = normal(rng);
      eta[j] = unif(rng);
    }
    auto u = [&](double t) {
      double s = 0.0;
      for (int j = 0; j < spec.J; ++j) s += xi[j] * std::sin(std::numbers::pi * eta[j] * t);
      return s;
    };
    auto du = [&](double t) {
      double s = 0.0;
      for (int j = 0; j < spec.J; ++j)
        s += xi[j] * std::numbers::pi * eta[j] * std::cos(std::numbers::pi * eta[j] * t);
      return s;
    };
    const std::vector<double> z = cde_solve(du, spec.z0, times, spec.max_step);
    Matrix in(n, 1), out(n, 1);
    for (Eigen::Index t = 0; t < n; ++t) {
      in(t, 0) = u(times[static_cast<std::size_t>(t)]);
      out(t, 0) = z[static_cast<std::size_t>(t)];
    }
    d.inputs.push_back(std::move(in));
    d.outputs.push_back(std::move(out));
  }
  nlohmann::json g = {{"name", "cde"}, {"J", spec.J},   {"T", spec.T},
                      {"dt", spec.dt}, {"z0", spec.z0}, {"max_step", spec.max_step}};
  d.generator = g.dump();
  return d;
}

// --- Gaussian random fields --------------------------------------------------

std::string push_forward_name(PushForward p) {
  switch (p) {
    case PushForward::None: return "none";
    case PushForward::Exp: return "exp";
    case PushForward::PiecewiseConstant: return "piecewise_constant";
  }
  return "none";
}

PushForward parse_push_forward(const std::string& name) {
  if (name == "none") return PushForward::None;
  if (name == "exp") return PushForward::Exp;
  if (name == "piecewise_constant") return PushForward::PiecewiseConstant;
  throw ConfigError("unknown push_forward '" + name + "' (expected none, exp or piecewise_constant)");
}

double grf_eigenvalue(const GrfSpec& spec, int k1, int k2) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return spec.amplitude *
         std::pow(pi2 * (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2) + spec.shift,
                  -spec.exponent);
}

std::vector<std::array<int, 2>> grf_modes(int truncation) {
  std::vector<std::array<int, 2>> modes;
  for (int s = 1; s <= truncation; ++s) {
    for (int k1 = 0; k1 <= s; ++k1) modes.push_back({k1, s});
    for (int k2 = s - 1; k2 >= 0; --k2) modes.push_back({s, k2});
  }
  return modes;
}

namespace {

double cos_basis(int k, double x) {
  return k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(std::numbers::pi * k * x);
}

int default_truncation(const GridSpec& grid) {
  const auto shape = grid.shape();
  return *std::min_element(shape.begin(), shape.end()) - 1;
}

}  // namespace

double grf_pointwise_variance(const GrfSpec& spec, int truncation, double x1, double x2) {
  double v = 0.0;
  for (const auto& k : grf_modes(truncation)) {
    const double phi = cos_basis(k[0], x1) * cos_basis(k[1], x2);
    v += grf_eigenvalue(spec, k[0], k[1]) * phi * phi;
  }
  return v;
}

SampledFunction grf_sample(const GrfSpec& spec, const Domain& domain, const GridSpec& grid,
                           std::uint64_t seed) {
  if (!grid.is_uniform() || grid.dim() != 2 || domain.dim() != 2)
    throw std::invalid_argument("grf_sample: uniform 2D grid required");
  grid.validate(domain);
  const int K = spec.truncation > 0 ? spec.truncation : default_truncation(grid);
  const auto shape = grid.shape();
  const Matrix coords = grid.coordinates(domain);

  // Separable evaluation: field = C1^T Xi C2 with C_a(k, j) = c(k) cos(pi k x_j).
  auto basis = [&](int axis) {
    Matrix C(K + 1, shape[axis]);
    const Interval& ax = domain.axis(axis);
    for (int j = 0; j < shape[axis]; ++j) {
      const double x = ax.lo + (grid.is_periodic() ? static_cast<double>(j) / shape[axis]
                                                   : static_cast<double>(j) / (shape[axis] - 1)) *
                                   ax.length();
      for (int k = 0; k <= K; ++k) C(k, j) = cos_basis(k, x);
    }
    return C;
  };
  const Matrix C1 = basis(0), C2 = basis(1);
  Matrix xi = Matrix::Zero(K + 1, K + 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& k : grf_modes(K))
    xi(k[0], k[1]) = std::sqrt(grf_eigenvalue(spec, k[0], k[1])) * normal(rng);
  const Matrix field = C1.transpose() * xi * C2;  // (n1 x n2), row-major = grid order
  Matrix values = Eigen::Map<const Matrix>(field.data(), coords.rows(), 1);
  switch (spec.push_forward) {
    case PushForward::None: break;
    case PushForward::Exp: values = values.array().exp().matrix(); break;
    case PushForward::PiecewiseConstant:
      values = values.unaryExpr([&](double v) { return v >= 0.0 ? spec.hi : spec.lo; });
      break;
  }
  return SampledFunction(domain, grid, std::move(values));
}

// --- Darcy flow --------------------------------------------------------------

namespace {

using SparseMat = Eigen::SparseMatrix<double>;

double face(double a, double b, FaceAverage mode) {
  return mode == FaceAverage::Arithmetic ? 0.5 * (a + b) : 2.0 * a * b / (a + b);
}

struct DarcySystem {
  SparseMat A;
  int n = 0;  // nodes per axis
  int m = 0;  // interior nodes per axis
};

DarcySystem darcy_system(const SampledFunction& a, const DarcySpec& spec) {
  if (!a.grid.is_uniform() || a.grid.dim() != 2 || a.grid.is_periodic())
    throw std::invalid_argument("darcy: non-periodic uniform 2D node grid required");
  const auto shape = a.grid.shape();
  if (shape[0] != shape[1] || shape[0] < 3)
    throw std::invalid_argument("darcy: square grid with at least 3 nodes per axis required");
  if (a.channels() != 1) throw std::invalid_argument("darcy: scalar coefficient required");
  if ((a.values.array() <= 0.0).any()) throw std::invalid_argument("darcy: coefficient must be positive");
  const double L0 = a.domain.axis(0).length(), L1 = a.domain.axis(1).length();
  if (std::abs(L0 - L1) > 1e-12 * L0)
    throw std::invalid_argument("darcy: square domain required");
  DarcySystem s;
  s.n = shape[0];
  s.m = s.n - 2;
  const double h = L0 / (s.n - 1);
  const double inv_h2 = 1.0 / (h * h);
  auto av = [&](int i, int j) { return a.values(static_cast<Eigen::Index>(i) * s.n + j, 0); };
  auto id = [&](int i, int j) { return (i - 1) * s.m + (j - 1); };
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(s.m) * s.m * 5);
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int i = 1; i <= s.m; ++i) {
    for (int j = 1; j <= s.m; ++j) {
      double diag = 0.0;
      for (int q = 0; q < 4; ++q) {
        const int ii = i + di[q], jj = j + dj[q];
        const double c = face(av(i, j), av(ii, jj), spec.face) * inv_h2;
        diag += c;
        if (ii >= 1 && ii <= s.m && jj >= 1 && jj <= s.m) t.emplace_back(id(i, j), id(ii, jj), -c);
      }
      t.emplace_back(id(i, j), id(i, j), diag);
    }
  }
  s.A.resize(s.m * s.m, s.m * s.m);
  s.A.setFromTriplets(t.begin(), t.end());
  return s;
}

}  // namespace

SampledFunction darcy_solve(const SampledFunction& a, const DarcySpec& spec) {
  const DarcySystem s = darcy_system(a, spec);
  const Vector f = Vector::Ones(s.A.rows());
  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(spec.tolerance);
  cg.setMaxIterations(spec.max_iterations);
  cg.compute(s.A);
  const Vector x = cg.solve(f);
  if (cg.info() != Eigen::Success || !x.allFinite())
    throw NumericError("darcy", "conjugate gradients did not converge (residual " +
                                    std::to_string(cg.error()) + " after " +
                                    std::to_string(cg.iterations()) + " iterations)");
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(s.n) * s.n, 1);
  for (int i = 1; i <= s.m; ++i)
    for (int j = 1; j <= s.m; ++j)
      u(static_cast<Eigen::Index>(i) * s.n + j, 0) = x[(i - 1) * s.m + (j - 1)];
  return SampledFunction(a.domain, a.grid, std::move(u));
}

double darcy_residual(const SampledFunction& a, const SampledFunction& u, const DarcySpec& spec) {
  const DarcySystem s = darcy_system(a, spec);
  Vector x(s.A.rows());
  for (int i = 1; i <= s.m; ++i)
    for (int j = 1; j <= s.m; ++j)
      x[(i - 1) * s.m + (j - 1)] = u.values(static_cast<Eigen::Index>(i) * s.n + j, 0);
  const Vector f = Vector::Ones(s.A.rows());
  return (s.A * x - f).norm() / f.norm();
}

Dataset darcy_dataset(std::size_t n_samples, const DarcySpec& spec, std::uint64_t seed) {
  Dataset d;
  d.problem = "darcy";
  d.domain = Domain::unit(2);
  d.grid = GridSpec::uniform({spec.resolution, spec.resolution});
  d.seed = seed;
  for (std::size_t i = 0; i < n_samples; ++i) {
    SampledFunction a = grf_sample(spec.grf, d.domain, d.grid, sample_seed(seed, i));
    SampledFunction u = darcy_solve(a, spec);
    d.inputs.push_back(std::move(a.values));
    d.outputs.push_back(std::move(u.values));
  }
  const int K = spec.grf.truncation > 0 ? spec.grf.truncation : spec.resolution - 1;
  nlohmann::json g = {
      {"name", "darcy"},
      {"resolution", spec.resolution},
      {"tolerance", spec.tolerance},
      {"face", spec.face == FaceAverage::Arithmetic ? "arithmetic" : "harmonic"},
      {"grf",
       {{"amplitude", spec.grf.amplitude},
        {"shift", spec.grf.shift},
        {"exponent", spec.grf.exponent},
        {"truncation", K},
        {"push_forward", push_forward_name(spec.grf.push_forward)},
        {"hi", spec.grf.hi},
        {"lo", spec.grf.lo}}}};
  d.generator = g.dump();
  return d;
}

// --- Kolmogorov flow ---------------------------------------------------------

KolmogorovSolver::KolmogorovSolver(const KolmogorovSpec& spec) : spec_(spec), n_(spec.resolution) {
  if (n_ < 8 || n_ % 2 != 0) throw ConfigError("kolmogorov: resolution must be even and >= 8");
  if (!(spec.dt > 0.0) || !(spec.nu >= 0.0)) throw ConfigError("kolmogorov: need dt > 0, nu >= 0");
  const int N = n_ * n_;
  kx_.resize(N);
  ky_.resize(N);
  k2_.resize(N);
  keep_.assign(static_cast<std::size_t>(N), false);
  forcing_hat_ = CMatrix::Zero(N, 1);
  const int band = n_ / 3;
  for (int b0 = 0; b0 < n_; ++b0) {
    for (int b1 = 0; b1 < n_; ++b1) {
      const int r = b0 * n_ + b1;
      const int k0 = b0 <= n_ / 2 ? b0 : b0 - n_;
      const int k1 = b1 <= n_ / 2 ? b1 : b1 - n_;
      kx_[r] = k0;
      ky_[r] = k1;
      k2_[r] = static_cast<double>(k0) * k0 + static_cast<double>(k1) * k1;
      keep_[static_cast<std::size_t>(r)] = std::abs(k0) <= band && std::abs(k1) <= band;
    }
  }
  if (spec.forcing) {
    // -n cos(n y): y is the second axis; cos(n y) has DFT N/2 at k_y = +-n.
    const int n = spec.forcing_wavenumber;
    if (n < 1 || n > band) throw ConfigError("kolmogorov: forcing wavenumber outside the resolved band");
    const double amp = -static_cast<double>(n) * N / 2.0;
    forcing_hat_(n, 0) = amp;
    forcing_hat_(n_ - n, 0) = amp;
  }
}

Matrix KolmogorovSolver::initial_condition(std::uint64_t seed) const {
  const int N = n_ * n_;
  const int K = spec_.ic_modes > 0 ? spec_.ic_modes : n_ / 3;
  if (K > n_ / 3) throw ConfigError("kolmogorov: initial-condition band exceeds the dealiased band");
  CMatrix w = CMatrix::Zero(N, 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto bin = [&](int k) { return k >= 0 ? k : k + n_; };
  for (int s = 1; s <= K; ++s) {
    for (int k0 = -s; k0 <= s; ++k0) {
      for (int k1 = 0; k1 <= s; ++k1) {
        if (std::max(std::abs(k0), k1) != s) continue;
        if (k1 == 0 && k0 <= 0) continue;  // half plane
        const double lam = spec_.ic_amplitude *
                           std::pow(static_cast<double>(k0 * k0 + k1 * k1) + spec_.ic_shift,
                                    -spec_.ic_exponent);
        const double re = normal(rng), im = normal(rng);
        const Complex c = Complex(re, im) * (std::sqrt(lam / 2.0) * N / (2.0 * std::numbers::pi));
        w(bin(k0) * n_ + bin(k1), 0) = c;
        w(bin(-k0) * n_ + bin(-k1), 0) = std::conj(c);
      }
    }
  }
  const CMatrix x = fft(w, {n_, n_}, +1) / static_cast<double>(N);
  return x.real();
}

CMatrix KolmogorovSolver::nonlinear(const CMatrix& w) const {
  const int N = n_ * n_;
  const std::vector<int> shape{n_, n_};
  const Complex I(0.0, 1.0);
  CMatrix spec(N, 4);  // u, v, w_x, w_y
  for (int r = 0; r < N; ++r) {
    const Complex psi = k2_[r] > 0.0 ? w(r, 0) / k2_[r] : Complex(0.0);
    spec(r, 0) = I * ky_[r] * psi;
    spec(r, 1) = -I * kx_[r] * psi;
    spec(r, 2) = I * kx_[r] * w(r, 0);
    spec(r, 3) = I * ky_[r] * w(r, 0);
  }
  const Matrix phys = (fft(spec, shape, +1) / static_cast<double>(N)).real();
  const double h = 2.0 * std::numbers::pi / n_;
  const double speed = (phys.col(0).cwiseAbs() + phys.col(1).cwiseAbs()).maxCoeff();
  if (speed * spec_.dt / h > 1.0)
    throw NumericError("kolmogorov", "CFL number " + std::to_string(speed * spec_.dt / h) +
                                         " exceeds 1; reduce dt");
  CMatrix adv(N, 1);
  adv.col(0) = (-(phys.col(0).cwiseProduct(phys.col(2)) + phys.col(1).cwiseProduct(phys.col(3))))
                   .cast<Complex>();
  CMatrix out = fft(adv, shape, -1);
  for (int r = 0; r < N; ++r)
    if (!keep_[static_cast<std::size_t>(r)]) out(r, 0) = 0.0;
  out(0, 0) = 0.0;  // the advection term is a divergence and has no mean
  out += forcing_hat_;
  return out;
}

Matrix KolmogorovSolver::advance(const Matrix& omega, int steps) const {
  const int N = n_ * n_;
  if (omega.rows() != N || omega.cols() != 1)
    throw std::invalid_argument("kolmogorov: vorticity must be (n*n x 1)");
  const double h = spec_.dt;
  CMatrix w = fft(omega.cast<Complex>(), {n_, n_}, -1);
  Vector E(N), E2(N);
  for (int r = 0; r < N; ++r) {
    E[r] = std::exp(-spec_.nu * k2_[r] * h);
    E2[r] = std::exp(-spec_.nu * k2_[r] * h / 2.0);
  }
  const auto e = E.cast<Complex>().array();
  const auto e2 = E2.cast<Complex>().array();
  for (int s = 0; s < steps; ++s) {
    const CMatrix k1 = nonlinear(w);
    const CMatrix k2 = nonlinear((e2 * (w + 0.5 * h * k1).array()).matrix());
    const CMatrix k3 = nonlinear((e2 * w.array() + 0.5 * h * k2.array()).matrix());
    const CMatrix k4 = nonlinear((e * w.array() + h * e2 * k3.array()).matrix());
    w = (e * w.array() +
         h / 6.0 * (e * k1.array() + 2.0 * e2 * (k2.array() + k3.array()) + k4.array()))
            .matrix();
    if (!w.allFinite()) throw NumericError("kolmogorov", "non-finite vorticity");
  }
  return (fft(w, {n_, n_}, +1) / static_cast<double>(N)).real();
}

Dataset kolmogorov_dataset(std::size_t n_samples, const KolmogorovSpec& spec, std::uint64_t seed) {
  const KolmogorovSolver solver(spec);
  const int to_T = static_cast<int>(std::lround(spec.T / spec.dt));
  const int to_next = static_cast<int>(std::lround(spec.snapshot_dt / spec.dt));
  if (to_next < 1) throw ConfigError("kolmogorov: snapshot_dt must be at least one solver step");
  Dataset d;
  d.problem = "kolmogorov";
  const double two_pi = 2.0 * std::numbers::pi;
  d.domain = Domain({{0.0, two_pi}, {0.0, two_pi}});
  d.grid = GridSpec::uniform({spec.resolution, spec.resolution}, true);
  d.seed = seed;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Matrix w = solver.initial_condition(sample_seed(seed, i));
    w = solver.advance(w, to_T);
    Matrix next = solver.advance(w, to_next);
    d.inputs.push_back(std::move(w));
    d.outputs.push_back(std::move(next));
  }
  nlohmann::json g = {{"name", "kolmogorov"},
                      {"resolution", spec.resolution},
                      {"nu", spec.nu},
                      {"forcing_wavenumber", spec.forcing_wavenumber},
                      {"forcing", spec.forcing},
                      {"dt", spec.dt},
                      {"T", spec.T},
                      {"snapshot_dt", spec.snapshot_dt},
                      {"ic_amplitude", spec.ic_amplitude},
                      {"ic_shift", spec.ic_shift},
                      {"ic_exponent", spec.ic_exponent},
                      {"ic_modes", spec.ic_modes > 0 ? spec.ic_modes : spec.resolution / 3}};
  d.generator = g.dump();
  return d;
}

// --- Irregular time grids ----------------------------------------------------

GridSpec irregular_time_grid(int n, double dt, TimeGridKind kind) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("irregular_time_grid: N must be even");
  if (!(dt > 0.0)) throw std::invalid_argument("irregular_time_grid: dt must be positive");
  std::vector<double> t;
  if (kind == TimeGridKind::Train) {
    for (int i = 0; i <= n; ++i) t.push_back(i * dt);
  } else {
    for (int i = 0; i <= n / 2; ++i) t.push_back(i * dt);
    for (int i = n / 2 + 1; i <= 3 * n / 4; ++i) t.push_back(2.0 * i * dt);
  }
  return GridSpec::irregular(std::move(t));
}

}  // namespace tnop
