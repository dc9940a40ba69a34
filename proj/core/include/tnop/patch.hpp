#pragma once

#include <vector>

#include "tnop/grid.hpp"

namespace tnop {

/// Uniform partition of a tensor-product grid into P congruent patches.
struct PatchLayout {
  std::vector<int> patches_per_axis;  // q_1 ... q_d
  std::vector<int> patch_shape;       // m_1 ... m_d

  static PatchLayout for_grid(const std::vector<int>& grid_shape,
                              const std::vector<int>& patches_per_axis);

  int dim() const { return static_cast<int>(patch_shape.size()); }
  int patch_count() const;   // P
  int patch_points() const;  // M
  std::vector<int> grid_shape() const;

  bool operator==(const PatchLayout&) const = default;
};

/// A sampled function re-indexed by patch. `values` is (P*M x c): patch-major rows,
/// row-major over patch indices, then row-major over local coordinates.
struct PatchedFunction {
  PatchLayout layout;
  Domain domain;        // the full domain D
  Domain patch_domain;  // D', anchored at the origin
  bool periodic = false;
  Matrix values;

  int channels() const { return static_cast<int>(values.cols()); }
  int patch_count() const { return layout.patch_count(); }
  int patch_points() const { return layout.patch_points(); }

  /// Rows belonging to patch p.
  auto patch(int p) const {
    return values.middleRows(static_cast<Eigen::Index>(p) * patch_points(), patch_points());
  }
};

/// Grid-order row index for every patch-order row: result[patched_row] = grid_row.
std::vector<int> patch_permutation(const PatchLayout& layout);

PatchedFunction patch_split(const SampledFunction& u, const PatchLayout& layout);
SampledFunction patch_merge(const PatchedFunction& p);

/// Matrix-level reorderings shared by the models.
Matrix to_patch_order(const Matrix& grid_rows, const std::vector<int>& perm);
Matrix to_grid_order(const Matrix& patch_rows, const std::vector<int>& perm);

}  // namespace tnop
