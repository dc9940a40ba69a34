#include "tnop/complexity.hpp"

#include <cmath>

namespace tnop {

std::string architecture_name(Architecture a) {
  switch (a) {
    case Architecture::FNO: return "fno";
    case Architecture::AFNO: return "afno";
    case Architecture::TNO: return "tno";
    case Architecture::ViTNO: return "vitno";
    case Architecture::FANO: return "fano";
  }
  return "tno";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "fno") return Architecture::FNO;
  if (name == "afno") return Architecture::AFNO;
  if (name == "tno") return Architecture::TNO;
  if (name == "vitno") return Architecture::ViTNO;
  if (name == "fano") return Architecture::FANO;
  throw ConfigError("unknown architecture row '" + name +
                    "' (expected fno, afno, tno, vitno or fano)");
}

std::int64_t ComplexityConfig::modes() const {
  std::int64_t m = 1;
  for (int k : cutoffs) m *= 2 * k + 1;
  return m;
}

int ComplexityConfig::depth(Architecture a) const {
  if (layers > 0) return layers;
  return a == Architecture::FNO || a == Architecture::AFNO ? 4 : 6;
}

std::int64_t formula_param_count(Architecture a, const ComplexityConfig& c,
                                 std::int64_t n_points) {
  const double du = c.d_u, d = c.dim, dz = c.d_z, dm = c.d_model;
  const double k = static_cast<double>(c.modes());
  const double L = c.depth(a);
  double n = 0.0;
  switch (a) {
    case Architecture::FNO: {
      const double df = c.d_fno;
      n = (du + d) * df + 2.0 * df * dm + df * dz + L * (dm * dm * k + dm * dm);
      break;
    }
    case Architecture::AFNO:
      // The learnable positional encoding makes the count grid-dependent.
      if (n_points < 1) throw ConfigError("the afno parameter count needs the grid size N");
      n = (du + d) * dm + static_cast<double>(n_points) * dm + dm * dz +
          L * (8.0 + 4.0 / c.afno_block) * dm * dm;
      break;
    case Architecture::TNO:
      n = (du + d) * dm + dm * dz + L * (6.0 * dm * dm + 2.0 * dm);
      break;
    case Architecture::ViTNO:
      n = (du + d) * dm * k + dm * dz + L * (6.0 * dm * dm + 2.0 * dm);
      break;
    case Architecture::FANO:
      n = (du + d) * dm + dm * dz + L * (3.0 * dm * dm * k + 3.0 * dm * dm + 2.0 * dm);
      break;
  }
  return std::llround(n);
}

std::int64_t estimate_flops(Architecture a, const ComplexityConfig& c, std::int64_t n_points) {
  if (n_points < 1) throw std::invalid_argument("estimate_flops: N must be positive");
  const double du = c.d_u, d = c.dim, dz = c.d_z, dm = c.d_model;
  const double k = static_cast<double>(c.modes());
  const double L = c.depth(a);
  const double N = static_cast<double>(n_points);
  const double P = static_cast<double>(c.patches);
  const double log_sqrt_n = std::log2(std::sqrt(N));
  const double log_sqrt_np = std::log2(std::sqrt(N / P));
  double f = 0.0;
  switch (a) {
    case Architecture::FNO: {
      const double df = c.d_fno;
      f = 2.0 * N * (du + d + 2.0 * dm) * df + 2.0 * N * df * dz +
          L * (15.0 * dm * N * log_sqrt_n + k * (2.0 * dm * dm - dm) + 2.0 * N * dm * dm);
      break;
    }
    case Architecture::TNO:
      f = 2.0 * N * (du + d) * dm + 2.0 * N * dm * dz +
          L * (8.0 * dm * dm * N + 2.0 * N * N * dm + 4.0 * dm * dm * N);
      break;
    case Architecture::ViTNO:
      f = (du + d + dm) * 15.0 * N * log_sqrt_np / 2.0 + P * k * dm * (2.0 * (du + d) - 1.0) +
          2.0 * N * dm * dz + L * (8.0 * dm * dm * N + 2.0 * dm * N * P + 4.0 * dm * dm * N);
      break;
    case Architecture::FANO:
      f = 2.0 * N * (du + d) * dm + 2.0 * N * dm * dz +
          L * (45.0 * dm * N * log_sqrt_np + 3.0 * k * P * (2.0 * dm * dm - dm) +
               2.0 * N * dm * dm + 2.0 * dm * N * P + 4.0 * N * dm * dm);
      break;
    case Architecture::AFNO: {
      const double b = c.afno_block;
      f = 2.0 * N * (du + d) * dm + 2.0 * N * dm * dz +
          L * (16.0 * dm * dm + 15.0 * N * dm * log_sqrt_n + 6.0 * N * (2.0 * dm * dm / b - dm));
      break;
    }
  }
  return std::llround(f);
}

ModelConfig model_config_for(Architecture a, const ComplexityConfig& c) {
  if (a != Architecture::TNO && a != Architecture::ViTNO && a != Architecture::FANO)
    throw ConfigError("only tno, vitno and fano rows can be instantiated");
  ModelConfig m;
  m.variant = a == Architecture::TNO ? Variant::TNO
              : a == Architecture::ViTNO ? Variant::ViTNO
                                         : Variant::FANO;
  m.dim = c.dim;
  m.d_u = c.d_u;
  m.d_z = c.d_z;
  m.d_model = c.d_model;
  m.heads = 1;
  m.layers = c.depth(a);
  if (a != Architecture::TNO) {
    if (static_cast<int>(c.cutoffs.size()) != c.dim)
      throw ConfigError("cutoffs needs one entry per axis");
    const int per_axis =
        static_cast<int>(std::llround(std::pow(static_cast<double>(c.patches), 1.0 / c.dim)));
    std::int64_t check = 1;
    for (int i = 0; i < c.dim; ++i) check *= per_axis;
    if (check != c.patches)
      throw ConfigError("patch count " + std::to_string(c.patches) +
                        " is not a perfect power of the dimension");
    m.patches.assign(static_cast<std::size_t>(c.dim), per_axis);
    if (a == Architecture::ViTNO) m.lift_modes = c.cutoffs;
    else m.head_modes = c.cutoffs;
  }
  return m;
}

}  // namespace tnop
