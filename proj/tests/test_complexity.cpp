#include <gtest/gtest.h>

#include "tnop/complexity.hpp"

using namespace tnop;

namespace {

// d_u = 1, d = 2, d_z = 1, d_model = 128, 4x4 cutoffs (81 modes), 16 patches, b = 8.
ComplexityConfig table_row() {
  ComplexityConfig c;
  c.cutoffs = {4, 4};
  c.patches = 16;
  return c;
}

}  // namespace

TEST(Complexity, TransformerReferenceRow) {
  EXPECT_EQ(formula_param_count(Architecture::TNO, table_row()), 591872);
}

TEST(Complexity, ParameterRows) {
  const ComplexityConfig c = table_row();
  EXPECT_EQ(formula_param_count(Architecture::FNO, c), 5407232);
  EXPECT_EQ(formula_param_count(Architecture::AFNO, c, 4096), 1081856);
  EXPECT_EQ(formula_param_count(Architecture::ViTNO, c), 622592);
  EXPECT_EQ(formula_param_count(Architecture::FANO, c), 24184832);
  EXPECT_THROW(formula_param_count(Architecture::AFNO, c), ConfigError);
}

TEST(Complexity, FlopRows) {
  const ComplexityConfig c = table_row();
  EXPECT_EQ(estimate_flops(Architecture::TNO, c, 4096), 30605836288LL);
  EXPECT_EQ(estimate_flops(Architecture::FNO, c, 4096), 1008819712LL);
  EXPECT_EQ(estimate_flops(Architecture::ViTNO, c, 4096), 4950476800LL);
  EXPECT_EQ(estimate_flops(Architecture::FANO, c, 4096), 3848433664LL);
  EXPECT_EQ(estimate_flops(Architecture::AFNO, c, 4096), 584056832LL);
}

TEST(Complexity, TnoCostQuadrupleInLargeN) {
  const ComplexityConfig c = table_row();
  const double n = 1 << 22;
  const double r = static_cast<double>(estimate_flops(Architecture::TNO, c, 2 * static_cast<std::int64_t>(n))) /
                   static_cast<double>(estimate_flops(Architecture::TNO, c, static_cast<std::int64_t>(n)));
  EXPECT_NEAR(r, 4.0, 1e-3);
}

TEST(Complexity, FnoLogTermScaling) {
  // Only the FFT term depends on N log sqrt(N); going from N to N^2 doubles log sqrt(N).
  const ComplexityConfig c = table_row();
  auto fft_part = [&](std::int64_t n) {
    const auto full = estimate_flops(Architecture::FNO, c, n);
    // Strip the terms linear in N and the constant term by hand.
    const double N = static_cast<double>(n), dm = 128, df = 128, k = 81;
    return static_cast<double>(full) - (2 * N * (1 + 2 + 2 * dm) * df + 2 * N * df + 4 * (k * (2 * dm * dm - dm) + 2 * N * dm * dm));
  };
  const double a = fft_part(256), b = fft_part(256 * 256);
  EXPECT_NEAR(b / a, 256.0 * 2.0, 1e-6);
}

TEST(Complexity, DepthOverride) {
  ComplexityConfig c = table_row();
  c.layers = 1;
  EXPECT_EQ(formula_param_count(Architecture::TNO, c), 3 * 128 + 128 + 6 * 128 * 128 + 2 * 128);
}

TEST(Complexity, ConstructedCountsMatch) {
  ComplexityConfig c = table_row();
  EXPECT_EQ(count_params(init_parameters(model_config_for(Architecture::TNO, c), 1)), 591872);
  EXPECT_EQ(count_params(init_parameters(model_config_for(Architecture::ViTNO, c), 1)), 622592);
  c.d_model = 8;
  c.cutoffs = {1, 2};
  c.patches = 4;
  for (Architecture a : {Architecture::TNO, Architecture::ViTNO, Architecture::FANO})
    EXPECT_EQ(count_params(init_parameters(model_config_for(a, c), 2)), formula_param_count(a, c))
        << architecture_name(a);
}

TEST(Complexity, RowNames) {
  for (Architecture a : {Architecture::FNO, Architecture::AFNO, Architecture::TNO, Architecture::ViTNO, Architecture::FANO})
    EXPECT_EQ(parse_architecture(architecture_name(a)), a);
  EXPECT_THROW(parse_architecture("gpt"), ConfigError);
  EXPECT_THROW(model_config_for(Architecture::FNO, table_row()), ConfigError);
  ComplexityConfig c = table_row();
  c.patches = 8;
  EXPECT_THROW(model_config_for(Architecture::FANO, c), ConfigError);
}
