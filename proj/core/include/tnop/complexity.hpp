#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnop/models.hpp"

namespace tnop {

enum class Architecture { FNO, AFNO, TNO, ViTNO, FANO };

std::string architecture_name(Architecture a);
/// Accepts "fno", "afno", "tno", "vitno", "fano"; throws ConfigError otherwise.
Architecture parse_architecture(const std::string& name);

/// Hyperparameters of one row of the complexity tables.
struct ComplexityConfig {
  int d_u = 1;
  int dim = 2;
  int d_z = 1;
  int d_model = 128;
  std::vector<int> cutoffs;  // per-axis Fourier cutoff; k_max is the retained mode count
  std::int64_t patches = 1;  // P
  int afno_block = 8;        // b
  int d_fno = 128;
  int layers = 0;            // 0 selects the tabulated depth (6, or 4 for FNO/AFNO)

  std::int64_t modes() const;
  int depth(Architecture a) const;
};

/// Closed-form parameter count, biases excluded. Only the AFNO row depends on the
/// grid size `n_points`.
std::int64_t formula_param_count(Architecture a, const ComplexityConfig& c,
                                 std::int64_t n_points = 0);

/// Closed-form evaluation cost at N grid points. A product Wu with W in R^{r x r'}
/// costs 2 r r'; an FFT of length r costs 5 r log2 r; the 2D real FFT costs
/// (15/2) N log2 sqrt(N). The result is rounded to the nearest integer.
std::int64_t estimate_flops(Architecture a, const ComplexityConfig& c, std::int64_t n);

/// Model configuration whose instantiated count_params equals the formula
/// (TNO, ViTNO and FANO rows only). Patches are split evenly over the axes.
ModelConfig model_config_for(Architecture a, const ComplexityConfig& c);

}  // namespace tnop
