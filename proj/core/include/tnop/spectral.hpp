#pragma once

#include <vector>

#include "tnop/grid.hpp"

namespace tnop {

/// Truncated Fourier-space kernel R(k) in C^{r_out x r_in} for |k_j| <= kmax_j.
///
/// Retained modes are stored in signed order (-kmax..kmax) per axis, row-major over
/// axes; each mode holds a row-major (r_out x r_in) block. Hermitian symmetry is not
/// imposed; operator outputs are realified by taking the real part.
struct FourierMultiplier {
  std::vector<int> kmax;
  int r_out = 0;
  int r_in = 0;
  std::vector<Complex> tensor;

  static FourierMultiplier zeros(std::vector<int> kmax, int r_out, int r_in);

  int dim() const { return static_cast<int>(kmax.size()); }
  int mode_count() const;
  std::size_t index(int mode, int o, int i) const {
    return (static_cast<std::size_t>(mode) * r_out + o) * r_in + i;
  }
  Complex& at(int mode, int o, int i) { return tensor[index(mode, o, i)]; }
  Complex at(int mode, int o, int i) const { return tensor[index(mode, o, i)]; }

  /// Position of signed wavenumber `k` in the mode list.
  int mode_of(const std::vector<int>& k) const;
};

struct SmoothingParams {
  double epsilon = 1e-3;
  double alpha = 1.001;
};

/// Largest admissible cutoff on an axis with n points: 2 kmax + 1 <= n.
inline int max_cutoff(int n) { return (n - 1) / 2; }

/// Unnormalized n-d DFT over a row-major (prod(shape) x c) array, each column
/// transformed independently. sign = -1 forward, +1 backward (no 1/N scaling).
CMatrix fft(const CMatrix& x, const std::vector<int>& shape, int sign);

/// Forward DFT, sum_n u_n exp(-2 pi i k.n / n_axis), in standard bin order.
CMatrix dft_forward(const SampledFunction& u);

/// Inverse DFT with 1/N scaling; the real part is returned on `grid`.
SampledFunction dft_inverse(const CMatrix& modes, const Domain& domain, const GridSpec& grid);

/// Applies Fourier multipliers on a fixed uniform grid using truncated DFT matrices,
/// which equals FFT -> truncate -> multiply -> zero-pad -> inverse FFT -> real part.
class SpectralOperator {
 public:
  SpectralOperator(std::vector<int> shape, std::vector<int> kmax);

  const std::vector<int>& shape() const { return shape_; }
  const std::vector<int>& kmax() const { return kmax_; }
  int points() const { return points_; }
  int modes() const { return modes_; }

  /// Retained Fourier coefficients of x (points x r), (modes x r).
  CMatrix analyze(const Matrix& x) const;

  /// y = Re(F^{-1} R F x). If `coefficients` is given it receives analyze(x).
  Matrix apply(const FourierMultiplier& R, const Matrix& x, CMatrix* coefficients = nullptr) const;

  /// Adjoint of apply. Accumulates dL/dR into `grad_R` (complex entries hold
  /// (dL/dRe, dL/dIm)) and returns dL/dx.
  Matrix backward(const FourierMultiplier& R, const CMatrix& coefficients, const Matrix& grad_y,
                  FourierMultiplier* grad_R) const;

 private:
  CMatrix transform(const CMatrix& x, bool to_modes, bool transpose) const;

  std::vector<int> shape_;
  std::vector<int> kmax_;
  int points_ = 1;
  int modes_ = 1;
  std::vector<CMatrix> forward_;  // per axis (2k+1 x n)
  std::vector<CMatrix> inverse_;  // per axis (n x 2k+1), includes 1/n
};

/// Fourier integral operator on a uniform grid; output has r_out channels.
SampledFunction fourier_integral_apply(const FourierMultiplier& R, const SampledFunction& u);

/// Same operator evaluated through full FFTs; used as an independent check.
SampledFunction fourier_integral_apply_fft(const FourierMultiplier& R, const SampledFunction& u);

/// Multiplier (1 + eps |2 pi k / L|^2)^(-alpha) on the signed wavenumber k.
double smoothing_factor(const std::vector<int>& k, const std::vector<double>& periods,
                        const SmoothingParams& s);

/// (I - eps Laplacian)^(-alpha) on a periodic uniform grid. The operator is real
/// symmetric, so it is also its own adjoint.
Matrix smoothing_apply(const Matrix& values, const std::vector<int>& shape,
                       const std::vector<double>& periods, const SmoothingParams& s);
SampledFunction smoothing_apply(const SampledFunction& z, const SmoothingParams& s);

/// Even-reflection extension of a patch by `pad` points per side on every axis.
Matrix periodic_patch_extend(const Matrix& patch, const std::vector<int>& shape, int pad);
/// Crops the centre of an extended patch.
Matrix periodic_patch_restrict(const Matrix& extended, const std::vector<int>& shape, int pad);
/// Adjoints of extend / restrict (scatter-add and zero-fill).
Matrix periodic_patch_extend_adjoint(const Matrix& grad_ext, const std::vector<int>& shape,
                                     int pad);
Matrix periodic_patch_restrict_adjoint(const Matrix& grad_patch, const std::vector<int>& shape,
                                       int pad);

}  // namespace tnop
