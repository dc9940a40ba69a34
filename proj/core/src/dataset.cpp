#include "tnop/dataset.hpp"

#include <string>

namespace tnop {

const Vector& Dataset::ic_of(std::size_t i) const {
  static const Vector empty;
  return ic.empty() ? empty : ic.at(i);
}

void Dataset::validate() const {
  grid.validate(domain);
  if (outputs.size() != inputs.size())
    throw std::invalid_argument("dataset: " + std::to_string(inputs.size()) + " inputs but " +
                                std::to_string(outputs.size()) + " outputs");
  if (!ic.empty() && ic.size() != inputs.size())
    throw std::invalid_argument("dataset: initial-condition count does not match samples");
  const auto n = static_cast<Eigen::Index>(points());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string at = " of sample " + std::to_string(i);
    if (inputs[i].rows() != n || inputs[i].cols() != channels_in)
      throw std::invalid_argument("dataset: bad input shape" + at);
    if (outputs[i].rows() != n || outputs[i].cols() != channels_out)
      throw std::invalid_argument("dataset: bad output shape" + at);
    if (!inputs[i].allFinite() || !outputs[i].allFinite())
      throw std::invalid_argument("dataset: non-finite values" + at);
    if (!ic.empty() && ic[i].size() != d_ic)
      throw std::invalid_argument("dataset: bad initial-condition size" + at);
  }
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw std::invalid_argument("dataset: slice out of range");
  Dataset d = *this;
  const auto b = static_cast<std::ptrdiff_t>(first);
  const auto e = static_cast<std::ptrdiff_t>(first + count);
  d.inputs.assign(inputs.begin() + b, inputs.begin() + e);
  d.outputs.assign(outputs.begin() + b, outputs.begin() + e);
  if (!ic.empty()) d.ic.assign(ic.begin() + b, ic.begin() + e);
  return d;
}

}  // namespace tnop
