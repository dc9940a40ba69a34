#include "tnop/patch.hpp"

#include <string>

namespace tnop {

PatchLayout PatchLayout::for_grid(const std::vector<int>& grid_shape,
                                  const std::vector<int>& patches_per_axis) {
  if (grid_shape.size() != patches_per_axis.size())
    throw std::invalid_argument("PatchLayout: patch counts must match grid dimension");
  PatchLayout l;
  l.patches_per_axis = patches_per_axis;
  for (std::size_t a = 0; a < grid_shape.size(); ++a) {
    const int q = patches_per_axis[a];
    if (q < 1 || grid_shape[a] % q != 0)
      throw std::invalid_argument("PatchLayout: axis " + std::to_string(a) + " of size " +
                                  std::to_string(grid_shape[a]) + " is not divisible into " +
                                  std::to_string(q) + " patches");
    l.patch_shape.push_back(grid_shape[a] / q);
  }
  return l;
}

int PatchLayout::patch_count() const {
  int p = 1;
  for (int q : patches_per_axis) p *= q;
  return p;
}

int PatchLayout::patch_points() const {
  int m = 1;
  for (int s : patch_shape) m *= s;
  return m;
}

std::vector<int> PatchLayout::grid_shape() const {
  std::vector<int> n(patch_shape.size());
  for (std::size_t a = 0; a < n.size(); ++a) n[a] = patches_per_axis[a] * patch_shape[a];
  return n;
}

std::vector<int> patch_permutation(const PatchLayout& layout) {
  const int d = layout.dim();
  const auto shape = layout.grid_shape();
  const int P = layout.patch_count();
  const int M = layout.patch_points();
  std::vector<int> perm(static_cast<std::size_t>(P) * M);
  std::vector<int> pidx(d, 0), lidx(d, 0);
  std::size_t row = 0;
  for (int p = 0; p < P; ++p) {
    std::fill(lidx.begin(), lidx.end(), 0);
    for (int m = 0; m < M; ++m) {
      int g = 0;
      for (int a = 0; a < d; ++a) g = g * shape[a] + pidx[a] * layout.patch_shape[a] + lidx[a];
      perm[row++] = g;
      for (int a = d - 1; a >= 0; --a) {
        if (++lidx[a] < layout.patch_shape[a]) break;
        lidx[a] = 0;
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++pidx[a] < layout.patches_per_axis[a]) break;
      pidx[a] = 0;
    }
  }
  return perm;
}

Matrix to_patch_order(const Matrix& grid_rows, const std::vector<int>& perm) {
  Matrix out(grid_rows.rows(), grid_rows.cols());
  for (std::size_t r = 0; r < perm.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = grid_rows.row(perm[r]);
  return out;
}

Matrix to_grid_order(const Matrix& patch_rows, const std::vector<int>& perm) {
  Matrix out(patch_rows.rows(), patch_rows.cols());
  for (std::size_t r = 0; r < perm.size(); ++r)
    out.row(perm[r]) = patch_rows.row(static_cast<Eigen::Index>(r));
  return out;
}

PatchedFunction patch_split(const SampledFunction& u, const PatchLayout& layout) {
  if (!u.grid.is_uniform()) throw std::invalid_argument("patch_split: uniform grid required");
  if (u.grid.shape() != layout.grid_shape())
    throw std::invalid_argument("patch_split: layout does not tile the grid");
  PatchedFunction p;
  p.layout = layout;
  p.domain = u.domain;
  p.periodic = u.grid.is_periodic();
  std::vector<Interval> sub;
  for (int a = 0; a < layout.dim(); ++a)
    sub.push_back({0.0, u.domain.axis(a).length() / layout.patches_per_axis[a]});
  p.patch_domain = Domain(std::move(sub));
  p.values = to_patch_order(u.values, patch_permutation(layout));
  return p;
}

SampledFunction patch_merge(const PatchedFunction& p) {
  const auto shape = p.layout.grid_shape();
  if (p.values.rows() != static_cast<Eigen::Index>(p.patch_count()) * p.patch_points())
    throw std::invalid_argument("patch_merge: value rows inconsistent with the layout");
  if (p.domain.dim() != p.layout.dim())
    throw std::invalid_argument("patch_merge: domain dimension inconsistent with the layout");
  return SampledFunction(p.domain, GridSpec::uniform(shape, p.periodic),
                         to_grid_order(p.values, patch_permutation(p.layout)));
}

}  // namespace tnop
