#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "tnop/types.hpp"

namespace tnop {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Axis-aligned box D = [a_1,b_1] x ... x [a_d,b_d].
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Interval> bounds);

  static Domain unit(int dim);
  static Domain interval(double lo, double hi) { return Domain({{lo, hi}}); }

  int dim() const { return static_cast<int>(bounds_.size()); }
  const Interval& axis(int i) const { return bounds_.at(static_cast<std::size_t>(i)); }
  const std::vector<Interval>& bounds() const { return bounds_; }
  double volume() const;

  bool operator==(const Domain&) const = default;

 private:
  std::vector<Interval> bounds_;
};

/// Tensor-product grid. With `periodic` the right endpoint is excluded
/// (x_i = a + i L / n), otherwise both endpoints are nodes (x_i = a + i L / (n-1)).
struct UniformGrid {
  std::vector<int> shape;
  bool periodic = false;

  bool operator==(const UniformGrid&) const = default;
};

/// Strictly increasing sample locations on a 1D domain.
struct IrregularGrid1D {
  std::vector<double> coords;

  bool operator==(const IrregularGrid1D&) const = default;
};

class GridSpec {
 public:
  GridSpec() = default;

  static GridSpec uniform(std::vector<int> shape, bool periodic = false);
  static GridSpec irregular(std::vector<double> coords);

  bool is_uniform() const { return std::holds_alternative<UniformGrid>(kind_); }
  bool is_periodic() const;
  const UniformGrid& as_uniform() const;
  const IrregularGrid1D& as_irregular() const;

  int dim() const;
  std::size_t point_count() const;

  /// Per-axis point counts; an irregular grid reports {N}.
  std::vector<int> shape() const;

  /// Node coordinates, (N x d), row-major grid order (last axis fastest).
  Matrix coordinates(const Domain& domain) const;

  /// Throws std::invalid_argument when the grid does not fit `domain`.
  void validate(const Domain& domain) const;

  bool operator==(const GridSpec&) const = default;

 private:
  std::variant<UniformGrid, IrregularGrid1D> kind_{UniformGrid{{2}, false}};
};

/// Values of a vector-valued function at grid nodes.
struct SampledFunction {
  Domain domain;
  GridSpec grid;
  Matrix values;  // (N x channels)

  SampledFunction() = default;
  SampledFunction(Domain d, GridSpec g, Matrix v);

  int channels() const { return static_cast<int>(values.cols()); }
  std::size_t point_count() const { return static_cast<std::size_t>(values.rows()); }
};

struct QuadratureWeights {
  Vector weights;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  double sum() const;
};

/// Composite trapezoid weights on a 1D grid; they integrate over the hull of the
/// samples, so the sum equals x_N - x_1.
QuadratureWeights trapezoid_weights(const GridSpec& grid, const Domain& domain);

/// Equal cell volumes |D| / N on a uniform grid of any dimension.
QuadratureWeights uniform_cell_weights(const GridSpec& grid, const Domain& domain);

/// The weights attention uses by default for a grid: trapezoid for non-periodic 1D
/// grids, equal cell volumes otherwise.
QuadratureWeights default_weights(const GridSpec& grid, const Domain& domain);

enum class PositionMode { Normalized, Raw, None };

/// Appends the node coordinates as extra channels. `Normalized` maps each axis
/// affinely onto [0,1] using the domain bounds; `Raw` appends x itself.
SampledFunction concat_positions(const SampledFunction& u,
                                 PositionMode mode = PositionMode::Normalized);

/// Coordinate channels that concat_positions would append, (N x d) or (N x 0).
Matrix position_channels(const Domain& domain, const GridSpec& grid, PositionMode mode);

}  // namespace tnop
