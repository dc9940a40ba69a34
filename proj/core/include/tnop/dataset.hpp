#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnop/grid.hpp"

namespace tnop {

/// Input/output function pairs sharing one domain and one grid.
struct Dataset {
  std::string problem;
  Domain domain;
  GridSpec grid;
  int channels_in = 1;
  int channels_out = 1;
  int d_ic = 0;                 // initial-condition features per sample, 0 if absent
  std::vector<Matrix> inputs;   // (N x channels_in) each
  std::vector<Matrix> outputs;  // (N x channels_out) each
  std::vector<Vector> ic;       // empty or one per sample
  std::string generator;        // generator spec as JSON text
  std::uint64_t seed = 0;

  std::size_t size() const { return inputs.size(); }
  std::size_t points() const { return grid.point_count(); }
  SampledFunction input(std::size_t i) const { return {domain, grid, inputs.at(i)}; }
  const Vector& ic_of(std::size_t i) const;

  /// Shape and finiteness checks; throws std::invalid_argument.
  void validate() const;

  /// Samples [first, first + count).
  Dataset slice(std::size_t first, std::size_t count) const;
};

}  // namespace tnop
