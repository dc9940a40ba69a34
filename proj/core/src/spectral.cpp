#include "tnop/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

namespace tnop {

namespace {

int product(const std::vector<int>& v) {
  int p = 1;
  for (int x : v) p *= x;
  return p;
}

// FFTW planning is not thread-safe; plans are created once per (shape, columns, sign)
// under a lock and executed through the thread-safe new-array interface.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const std::vector<int>& shape, int columns, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(shape, columns, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const int n = product(shape);
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n) * columns);
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n) * columns);
    fftw_plan plan = fftw_plan_many_dft(static_cast<int>(shape.size()), shape.data(), columns, in,
                                        nullptr, columns, 1, out, nullptr, columns, 1, sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) throw std::runtime_error("fft: FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::vector<int>, int, int>, fftw_plan> plans_;
};

// Applies T (K x n) along `axis` of a row-major (prod(shape) x r) array.
CMatrix apply_axis(const CMatrix& x, std::vector<int>& shape, int axis, const CMatrix& T) {
  const int n = shape[static_cast<std::size_t>(axis)];
  const auto K = static_cast<int>(T.rows());
  int outer = 1;
  int inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[static_cast<std::size_t>(a)];
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a) inner *= shape[a];
  const auto r = static_cast<int>(x.cols());
  const Eigen::Index width = static_cast<Eigen::Index>(inner) * r;
  CMatrix out(static_cast<Eigen::Index>(outer) * K * inner, r);
  for (int o = 0; o < outer; ++o) {
    Eigen::Map<const CMatrix> xin(x.data() + static_cast<Eigen::Index>(o) * n * width, n, width);
    Eigen::Map<CMatrix> yo(out.data() + static_cast<Eigen::Index>(o) * K * width, K, width);
    yo.noalias() = T * xin;
  }
  shape[static_cast<std::size_t>(axis)] = K;
  return out;
}

Complex twiddle(long k, long x, long n, int sign) {
  const long kx = ((k * x) % n + n) % n;
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(kx) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

int signed_bin(int b, int n) { return b <= n / 2 ? b : b - n; }

void check_cutoffs(const std::vector<int>& shape, const std::vector<int>& kmax) {
  if (shape.size() != kmax.size())
    throw std::invalid_argument("Fourier multiplier dimension does not match the grid");
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (kmax[a] < 0 || kmax[a] > max_cutoff(shape[a]))
      throw std::invalid_argument("Fourier multiplier: kmax " + std::to_string(kmax[a]) +
                                  " exceeds the Nyquist limit " +
                                  std::to_string(max_cutoff(shape[a])) + " of an axis with " +
                                  std::to_string(shape[a]) + " points");
  }
}

}  // namespace

FourierMultiplier FourierMultiplier::zeros(std::vector<int> kmax, int r_out, int r_in) {
  FourierMultiplier R;
  R.kmax = std::move(kmax);
  R.r_out = r_out;
  R.r_in = r_in;
  R.tensor.assign(static_cast<std::size_t>(R.mode_count()) * r_out * r_in, Complex{});
  return R;
}

int FourierMultiplier::mode_count() const {
  int m = 1;
  for (int k : kmax) m *= 2 * k + 1;
  return m;
}

int FourierMultiplier::mode_of(const std::vector<int>& k) const {
  if (k.size() != kmax.size()) throw std::invalid_argument("mode_of: dimension mismatch");
  int m = 0;
  for (std::size_t a = 0; a < k.size(); ++a) {
    if (std::abs(k[a]) > kmax[a]) throw std::out_of_range("mode_of: wavenumber not retained");
    m = m * (2 * kmax[a] + 1) + (k[a] + kmax[a]);
  }
  return m;
}

CMatrix fft(const CMatrix& x, const std::vector<int>& shape, int sign) {
  if (x.rows() != product(shape)) throw std::invalid_argument("fft: rows do not match shape");
  const auto columns = static_cast<int>(x.cols());
  fftw_plan plan = PlanCache::instance().get(shape, columns, sign);
  CMatrix in = x;
  CMatrix out(x.rows(), x.cols());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

CMatrix dft_forward(const SampledFunction& u) {
  if (!u.grid.is_uniform()) throw std::invalid_argument("dft_forward: uniform grid required");
  return fft(u.values.cast<Complex>(), u.grid.shape(), FFTW_FORWARD);
}

SampledFunction dft_inverse(const CMatrix& modes, const Domain& domain, const GridSpec& grid) {
  if (!grid.is_uniform()) throw std::invalid_argument("dft_inverse: uniform grid required");
  const CMatrix x = fft(modes, grid.shape(), FFTW_BACKWARD);
  Matrix v = x.real() / static_cast<double>(x.rows());
  return SampledFunction(domain, grid, std::move(v));
}

SpectralOperator::SpectralOperator(std::vector<int> shape, std::vector<int> kmax)
    : shape_(std::move(shape)), kmax_(std::move(kmax)) {
  check_cutoffs(shape_, kmax_);
  points_ = product(shape_);
  modes_ = 1;
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    const int n = shape_[a];
    const int k = kmax_[a];
    const int K = 2 * k + 1;
    modes_ *= K;
    CMatrix F(K, n);
    CMatrix B(n, K);
    for (int m = 0; m < K; ++m) {
      for (int x = 0; x < n; ++x) {
        F(m, x) = twiddle(m - k, x, n, -1);
        B(x, m) = twiddle(m - k, x, n, +1) / static_cast<double>(n);
      }
    }
    forward_.push_back(std::move(F));
    inverse_.push_back(std::move(B));
  }
}

CMatrix SpectralOperator::transform(const CMatrix& x, bool to_modes, bool transpose) const {
  std::vector<int> cur = to_modes ? shape_ : std::vector<int>{};
  if (!to_modes) {
    for (int k : kmax_) cur.push_back(2 * k + 1);
  }
  CMatrix y = x;
  for (int a = 0; a < static_cast<int>(shape_.size()); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (to_modes) {
      y = transpose ? apply_axis(y, cur, a, inverse_[ua].transpose())
                    : apply_axis(y, cur, a, forward_[ua]);
    } else {
      y = transpose ? apply_axis(y, cur, a, forward_[ua].transpose())
                    : apply_axis(y, cur, a, inverse_[ua]);
    }
  }
  return y;
}

CMatrix SpectralOperator::analyze(const Matrix& x) const {
  if (x.rows() != points_) throw std::invalid_argument("SpectralOperator: row count mismatch");
  return transform(x.cast<Complex>(), true, false);
}

Matrix SpectralOperator::apply(const FourierMultiplier& R, const Matrix& x,
                               CMatrix* coefficients) const {
  if (R.kmax != kmax_) throw std::invalid_argument("SpectralOperator: multiplier cutoffs differ");
  if (x.cols() != R.r_in)
    throw std::invalid_argument("SpectralOperator: input has " + std::to_string(x.cols()) +
                                " channels, multiplier expects " + std::to_string(R.r_in));
  CMatrix xh = analyze(x);
  CMatrix yh(modes_, R.r_out);
  for (int m = 0; m < modes_; ++m) {
    Eigen::Map<const CMatrix> Rm(R.tensor.data() + R.index(m, 0, 0), R.r_out, R.r_in);
    yh.row(m).noalias() = (Rm * xh.row(m).transpose()).transpose();
  }
  Matrix y = transform(yh, false, false).real();
  if (coefficients != nullptr) *coefficients = std::move(xh);
  return y;
}

Matrix SpectralOperator::backward(const FourierMultiplier& R, const CMatrix& coefficients,
                                  const Matrix& grad_y, FourierMultiplier* grad_R) const {
  const CMatrix gyh = transform(grad_y.cast<Complex>(), true, true);
  CMatrix gxh(modes_, R.r_in);
  for (int m = 0; m < modes_; ++m) {
    Eigen::Map<const CMatrix> Rm(R.tensor.data() + R.index(m, 0, 0), R.r_out, R.r_in);
    gxh.row(m).noalias() = (Rm.transpose() * gyh.row(m).transpose()).transpose();
    if (grad_R != nullptr) {
      Eigen::Map<CMatrix> Gm(grad_R->tensor.data() + grad_R->index(m, 0, 0), R.r_out, R.r_in);
      Gm += (gyh.row(m).transpose() * coefficients.row(m)).conjugate();
    }
  }
  return transform(gxh, false, true).real();
}

SampledFunction fourier_integral_apply(const FourierMultiplier& R, const SampledFunction& u) {
  if (!u.grid.is_uniform())
    throw std::invalid_argument("fourier_integral_apply: uniform grid required");
  SpectralOperator op(u.grid.shape(), R.kmax);
  return SampledFunction(u.domain, u.grid, op.apply(R, u.values));
}

SampledFunction fourier_integral_apply_fft(const FourierMultiplier& R, const SampledFunction& u) {
  if (!u.grid.is_uniform())
    throw std::invalid_argument("fourier_integral_apply_fft: uniform grid required");
  const auto shape = u.grid.shape();
  check_cutoffs(shape, R.kmax);
  if (u.channels() != R.r_in) throw std::invalid_argument("fourier_integral_apply_fft: channels");
  const CMatrix uh = dft_forward(u);
  CMatrix yh = CMatrix::Zero(uh.rows(), R.r_out);
  const int d = static_cast<int>(shape.size());
  std::vector<int> k(static_cast<std::size_t>(d));
  for (int m = 0; m < R.mode_count(); ++m) {
    int rem = m;
    for (int a = d - 1; a >= 0; --a) {
      const int K = 2 * R.kmax[static_cast<std::size_t>(a)] + 1;
      k[static_cast<std::size_t>(a)] = rem % K - R.kmax[static_cast<std::size_t>(a)];
      rem /= K;
    }
    int bin = 0;
    for (int a = 0; a < d; ++a) {
      const int n = shape[static_cast<std::size_t>(a)];
      bin = bin * n + ((k[static_cast<std::size_t>(a)] % n) + n) % n;
    }
    Eigen::Map<const CMatrix> Rm(R.tensor.data() + R.index(m, 0, 0), R.r_out, R.r_in);
    yh.row(bin) = (Rm * uh.row(bin).transpose()).transpose();
  }
  return dft_inverse(yh, u.domain, u.grid);
}

double smoothing_factor(const std::vector<int>& k, const std::vector<double>& periods,
                        const SmoothingParams& s) {
  double k2 = 0.0;
  for (std::size_t a = 0; a < k.size(); ++a) {
    const double w = 2.0 * std::numbers::pi * k[a] / periods[a];
    k2 += w * w;
  }
  return std::pow(1.0 + s.epsilon * k2, -s.alpha);
}

Matrix smoothing_apply(const Matrix& values, const std::vector<int>& shape,
                       const std::vector<double>& periods, const SmoothingParams& s) {
  if (!(s.epsilon > 0.0) || !(s.alpha > 1.0))
    throw std::invalid_argument("smoothing: requires epsilon > 0 and alpha > 1");
  CMatrix h = fft(values.cast<Complex>(), shape, FFTW_FORWARD);
  const int d = static_cast<int>(shape.size());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  std::vector<int> k(static_cast<std::size_t>(d));
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (int a = 0; a < d; ++a)
      k[static_cast<std::size_t>(a)] =
          signed_bin(idx[static_cast<std::size_t>(a)], shape[static_cast<std::size_t>(a)]);
    h.row(r) *= smoothing_factor(k, periods, s);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  const CMatrix x = fft(h, shape, FFTW_BACKWARD);
  return x.real() / static_cast<double>(x.rows());
}

SampledFunction smoothing_apply(const SampledFunction& z, const SmoothingParams& s) {
  if (!z.grid.is_uniform()) throw std::invalid_argument("smoothing_apply: uniform grid required");
  std::vector<double> periods;
  for (const auto& ax : z.domain.bounds()) periods.push_back(ax.length());
  return SampledFunction(z.domain, z.grid, smoothing_apply(z.values, z.grid.shape(), periods, s));
}

namespace {

// For each extended-grid row, the source row in the patch.
std::vector<int> extension_map(const std::vector<int>& shape, int pad) {
  const int d = static_cast<int>(shape.size());
  for (int m : shape) {
    if (pad < 0 || pad >= m)
      throw std::invalid_argument("periodic_patch_extend: pad must be smaller than the patch");
  }
  std::vector<int> ext(shape);
  for (int& e : ext) e += 2 * pad;
  const int total = product(ext);
  std::vector<int> map(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int r = 0; r < total; ++r) {
    int src = 0;
    for (int a = 0; a < d; ++a) {
      const int m = shape[static_cast<std::size_t>(a)];
      int j = idx[static_cast<std::size_t>(a)] - pad;
      if (j < 0) j = -j;
      if (j >= m) j = 2 * (m - 1) - j;
      src = src * m + j;
    }
    map[static_cast<std::size_t>(r)] = src;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < ext[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return map;
}

// For each patch row, its row in the extended grid.
std::vector<int> restriction_map(const std::vector<int>& shape, int pad) {
  const int d = static_cast<int>(shape.size());
  const int total = product(shape);
  std::vector<int> map(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int r = 0; r < total; ++r) {
    int dst = 0;
    for (int a = 0; a < d; ++a)
      dst = dst * (shape[static_cast<std::size_t>(a)] + 2 * pad) + idx[static_cast<std::size_t>(a)] + pad;
    map[static_cast<std::size_t>(r)] = dst;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return map;
}

}  // namespace

Matrix periodic_patch_extend(const Matrix& patch, const std::vector<int>& shape, int pad) {
  if (patch.rows() != product(shape)) throw std::invalid_argument("periodic_patch_extend: shape");
  const auto map = extension_map(shape, pad);
  Matrix out(static_cast<Eigen::Index>(map.size()), patch.cols());
  for (std::size_t r = 0; r < map.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = patch.row(map[r]);
  return out;
}

Matrix periodic_patch_restrict(const Matrix& extended, const std::vector<int>& shape, int pad) {
  const auto map = restriction_map(shape, pad);
  Matrix out(static_cast<Eigen::Index>(map.size()), extended.cols());
  for (std::size_t r = 0; r < map.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = extended.row(map[r]);
  return out;
}

Matrix periodic_patch_extend_adjoint(const Matrix& grad_ext, const std::vector<int>& shape,
                                     int pad) {
  const auto map = extension_map(shape, pad);
  Matrix out = Matrix::Zero(product(shape), grad_ext.cols());
  for (std::size_t r = 0; r < map.size(); ++r) out.row(map[r]) += grad_ext.row(static_cast<Eigen::Index>(r));
  return out;
}

Matrix periodic_patch_restrict_adjoint(const Matrix& grad_patch, const std::vector<int>& shape,
                                       int pad) {
  const auto map = restriction_map(shape, pad);
  int ext = 1;
  for (int m : shape) ext *= m + 2 * pad;
  Matrix out = Matrix::Zero(ext, grad_patch.cols());
  for (std::size_t r = 0; r < map.size(); ++r) out.row(map[r]) = grad_patch.row(static_cast<Eigen::Index>(r));
  return out;
}

}  // namespace tnop
