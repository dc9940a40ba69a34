#include "tnop/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace tnop {

Domain::Domain(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw std::invalid_argument("Domain: dimension must be positive");
  for (const auto& b : bounds_) {
    if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw std::invalid_argument("Domain: every axis needs finite a < b");
  }
}

Domain Domain::unit(int dim) {
  return Domain(std::vector<Interval>(static_cast<std::size_t>(dim), Interval{0.0, 1.0}));
}

double Domain::volume() const {
  double v = 1.0;
  for (const auto& b : bounds_) v *= b.length();
  return v;
}

GridSpec GridSpec::uniform(std::vector<int> shape, bool periodic) {
  if (shape.empty()) throw std::invalid_argument("GridSpec: empty shape");
  for (int n : shape) {
    if (n < 2) throw std::invalid_argument("GridSpec: uniform axes need at least 2 points");
  }
  GridSpec g;
  g.kind_ = UniformGrid{std::move(shape), periodic};
  return g;
}

GridSpec GridSpec::irregular(std::vector<double> coords) {
  if (coords.size() < 2) throw std::invalid_argument("GridSpec: irregular grid needs >= 2 points");
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (!(coords[i] > coords[i - 1]))
      throw std::invalid_argument("GridSpec: irregular coordinates must be strictly increasing");
  }
  GridSpec g;
  g.kind_ = IrregularGrid1D{std::move(coords)};
  return g;
}

bool GridSpec::is_periodic() const { return is_uniform() && as_uniform().periodic; }

const UniformGrid& GridSpec::as_uniform() const {
  if (!is_uniform()) throw std::invalid_argument("GridSpec: uniform grid required");
  return std::get<UniformGrid>(kind_);
}

const IrregularGrid1D& GridSpec::as_irregular() const {
  if (is_uniform()) throw std::invalid_argument("GridSpec: irregular grid required");
  return std::get<IrregularGrid1D>(kind_);
}

int GridSpec::dim() const {
  return is_uniform() ? static_cast<int>(as_uniform().shape.size()) : 1;
}

std::size_t GridSpec::point_count() const {
  if (!is_uniform()) return as_irregular().coords.size();
  std::size_t n = 1;
  for (int s : as_uniform().shape) n *= static_cast<std::size_t>(s);
  return n;
}

std::vector<int> GridSpec::shape() const {
  if (is_uniform()) return as_uniform().shape;
  return {static_cast<int>(as_irregular().coords.size())};
}

void GridSpec::validate(const Domain& domain) const {
  if (domain.dim() != dim())
    throw std::invalid_argument("GridSpec: grid dimension " + std::to_string(dim()) +
                                " does not match domain dimension " +
                                std::to_string(domain.dim()));
  if (!is_uniform()) {
    const auto& c = as_irregular().coords;
    const auto& ax = domain.axis(0);
    const double tol = 1e-12 * std::max(1.0, ax.length());
    if (c.front() < ax.lo - tol || c.back() > ax.hi + tol)
      throw std::invalid_argument("GridSpec: irregular coordinates outside the domain");
  }
}

Matrix GridSpec::coordinates(const Domain& domain) const {
  validate(domain);
  const std::size_t n = point_count();
  Matrix x(static_cast<Eigen::Index>(n), dim());
  if (!is_uniform()) {
    const auto& c = as_irregular().coords;
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), 0) = c[i];
    return x;
  }
  const auto& g = as_uniform();
  const int d = dim();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t p = 0; p < n; ++p) {
    for (int a = 0; a < d; ++a) {
      const auto& ax = domain.axis(a);
      const int na = g.shape[static_cast<std::size_t>(a)];
      const double h = ax.length() / (g.periodic ? na : na - 1);
      x(static_cast<Eigen::Index>(p), a) = ax.lo + h * idx[static_cast<std::size_t>(a)];
    }
    for (int a = d - 1; a >= 0; --a) {
      auto& i = idx[static_cast<std::size_t>(a)];
      if (++i < g.shape[static_cast<std::size_t>(a)]) break;
      i = 0;
    }
  }
  return x;
}

SampledFunction::SampledFunction(Domain d, GridSpec g, Matrix v)
    : domain(std::move(d)), grid(std::move(g)), values(std::move(v)) {
  grid.validate(domain);
  if (static_cast<std::size_t>(values.rows()) != grid.point_count())
    throw std::invalid_argument("SampledFunction: " + std::to_string(values.rows()) +
                                " rows for a grid of " + std::to_string(grid.point_count()) +
                                " points");
  if (values.cols() < 1) throw std::invalid_argument("SampledFunction: no channels");
  if (!values.allFinite()) throw std::invalid_argument("SampledFunction: non-finite values");
}

double QuadratureWeights::sum() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) s += weights[i];
  return s;
}

QuadratureWeights trapezoid_weights(const GridSpec& grid, const Domain& domain) {
  if (grid.dim() != 1) throw std::invalid_argument("trapezoid_weights: 1D grid required");
  const Matrix x = grid.coordinates(domain);
  const Eigen::Index n = x.rows();
  if (n < 2) throw std::invalid_argument("trapezoid_weights: at least 2 points required");
  QuadratureWeights w;
  w.weights.resize(n);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x(i, 0) > x(i - 1, 0)))
      throw std::invalid_argument("trapezoid_weights: coordinates must increase");
  }
  w.weights[0] = 0.5 * (x(1, 0) - x(0, 0));
  for (Eigen::Index i = 1; i + 1 < n; ++i) w.weights[i] = 0.5 * (x(i + 1, 0) - x(i - 1, 0));
  w.weights[n - 1] = 0.5 * (x(n - 1, 0) - x(n - 2, 0));
  return w;
}

QuadratureWeights uniform_cell_weights(const GridSpec& grid, const Domain& domain) {
  grid.validate(domain);
  if (!grid.is_uniform()) throw std::invalid_argument("uniform_cell_weights: uniform grid required");
  const auto n = static_cast<Eigen::Index>(grid.point_count());
  QuadratureWeights w;
  w.weights = Vector::Constant(n, domain.volume() / static_cast<double>(n));
  return w;
}

QuadratureWeights default_weights(const GridSpec& grid, const Domain& domain) {
  if (grid.dim() == 1 && !grid.is_periodic()) return trapezoid_weights(grid, domain);
  return uniform_cell_weights(grid, domain);
}

Matrix position_channels(const Domain& domain, const GridSpec& grid, PositionMode mode) {
  if (mode == PositionMode::None) return Matrix(static_cast<Eigen::Index>(grid.point_count()), 0);
  Matrix x = grid.coordinates(domain);
  if (mode == PositionMode::Normalized) {
    for (int a = 0; a < domain.dim(); ++a) {
      const auto& ax = domain.axis(a);
      x.col(a) = ((x.col(a).array() - ax.lo) / ax.length()).matrix();
    }
  }
  return x;
}

SampledFunction concat_positions(const SampledFunction& u, PositionMode mode) {
  const Matrix pos = position_channels(u.domain, u.grid, mode);
  Matrix v(u.values.rows(), u.values.cols() + pos.cols());
  v.leftCols(u.values.cols()) = u.values;
  v.rightCols(pos.cols()) = pos;
  return SampledFunction(u.domain, u.grid, std::move(v));
}

}  // namespace tnop
