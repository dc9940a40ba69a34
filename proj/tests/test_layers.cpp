#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tnop/layers.hpp"

using namespace tnop;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N;
  return Matrix::NullaryExpr(r, c, [&] { return N(g); });
}

LayerNormParams plain_ln(int d) { return {Vector::Ones(d), Vector::Zero(d), 1e-5, true}; }

}  // namespace

TEST(Activation, Values) {
  EXPECT_NEAR(activation_value(Activation::GELU, 1.0), 0.5 * (1 + std::erf(1 / std::sqrt(2.0))), 1e-15);
  EXPECT_NEAR(activation_value(Activation::GELU, 1.0), 0.8413447460685429, 1e-15);
  EXPECT_EQ(activation_value(Activation::ReLU, -2.0), 0.0);
  EXPECT_EQ(activation_value(Activation::ReLU, 2.0), 2.0);
  EXPECT_NEAR(activation_value(Activation::Tanh, 0.5), std::tanh(0.5), 1e-16);
  EXPECT_EQ(activation_value(Activation::Identity, -3.25), -3.25);
}

TEST(Activation, DerivativesMatchFiniteDifferences) {
  for (Activation a : {Activation::GELU, Activation::Tanh, Activation::Identity, Activation::ReLU})
    for (double x : {-2.3, -0.4, 0.7, 1.9}) {
      const double h = 1e-6;
      const double fd = (activation_value(a, x + h) - activation_value(a, x - h)) / (2 * h);
      EXPECT_NEAR(activation_derivative(a, x), fd, 1e-8) << activation_name(a) << " " << x;
    }
}

TEST(Activation, NamesRoundTrip) {
  for (Activation a : {Activation::GELU, Activation::ReLU, Activation::Tanh, Activation::Identity})
    EXPECT_EQ(parse_activation(activation_name(a)), a);
  EXPECT_THROW(parse_activation("swish"), ConfigError);
}

TEST(LayerNorm, ConstantRowsGoToZero) {
  const Matrix v = Matrix::Constant(3, 4, 2.5);
  EXPECT_EQ(layer_norm_apply(v, plain_ln(4)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LayerNorm, AlreadyNormalized) {
  Matrix v(1, 2);
  v << 1, -1;
  const Matrix out = layer_norm_apply(v, Vector::Ones(2), Vector::Zero(2), 1e-14);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(out(0, 1), -1.0, 1e-12);
}

TEST(LayerNorm, ZeroGammaGivesBeta) {
  Vector beta(3);
  beta << 0.1, -0.2, 0.3;
  const Matrix out = layer_norm_apply(randn(5, 3, 1), Vector::Zero(3), beta, 1e-5);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(out.row(i), beta.transpose());
}

TEST(LayerNorm, BiasedVarianceFormula) {
  const Matrix v = randn(4, 5, 2);
  Vector g = randn(5, 1, 3).col(0), b = randn(5, 1, 4).col(0);
  const Matrix out = layer_norm_apply(v, g, b, 1e-5);
  for (int i = 0; i < 4; ++i) {
    const double m = v.row(i).mean();
    const double var = (v.row(i).array() - m).square().sum() / 5.0;
    for (int c = 0; c < 5; ++c)
      EXPECT_NEAR(out(i, c), g[c] * (v(i, c) - m) / std::sqrt(var + 1e-5) + b[c], 1e-13);
  }
}

TEST(LayerNorm, DisabledIsIdentity) {
  LayerNormParams ln = plain_ln(3);
  ln.enabled = false;
  const Matrix v = randn(2, 3, 5);
  EXPECT_EQ(layer_norm_apply(v, ln), v);
}

TEST(LayerNorm, BackwardMatchesFiniteDifferences) {
  const int d = 4;
  LayerNormParams ln{randn(d, 1, 6).col(0), randn(d, 1, 7).col(0), 1e-5, true};
  const Matrix v = randn(3, d, 8), g = randn(3, d, 9);
  LayerNormCache cache;
  layer_norm_apply(v, ln, &cache);
  LayerNormParams grad{Vector::Zero(d), Vector::Zero(d), 1e-5, true};
  const Matrix gv = layer_norm_backward(ln, cache, g, &grad);
  auto loss = [&](const Matrix& vv, const LayerNormParams& p) { return (layer_norm_apply(vv, p).array() * g.array()).sum(); };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    Matrix p = v, m = v;
    p.data()[i] += h;
    m.data()[i] -= h;
    EXPECT_NEAR(gv.data()[i], (loss(p, ln) - loss(m, ln)) / (2 * h), 1e-7);
  }
  for (int c = 0; c < d; ++c) {
    LayerNormParams p = ln, m = ln;
    p.gamma[c] += h;
    m.gamma[c] -= h;
    EXPECT_NEAR(grad.gamma[c], (loss(v, p) - loss(v, m)) / (2 * h), 1e-7);
    p = ln;
    m = ln;
    p.beta[c] += h;
    m.beta[c] -= h;
    EXPECT_NEAR(grad.beta[c], (loss(v, p) - loss(v, m)) / (2 * h), 1e-7);
  }
}

TEST(FFN, ZeroOutputWeights) {
  FFNParams p{Matrix::Zero(3, 3), randn(3, 3, 1), randn(3, 1, 2).col(0), randn(3, 1, 3).col(0)};
  const Matrix out = ffn_apply(randn(4, 3, 4), p, Activation::GELU);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out.row(i), p.b2.transpose());
}

TEST(FFN, IdentityConfiguration) {
  FFNParams p{Matrix::Identity(3, 3), Matrix::Identity(3, 3), Vector::Zero(3), Vector::Zero(3)};
  const Matrix v = randn(5, 3, 5);
  EXPECT_EQ(ffn_apply(v, p, Activation::Identity), v);
}

TEST(FFN, HandEvaluatedPoint) {
  FFNParams p;
  p.w4.resize(2, 2);
  p.w4 << 1.0, -0.5, 0.25, 2.0;
  p.w3.resize(2, 2);
  p.w3 << 0.5, 1.0, -1.0, 0.75;
  p.b1 = Vector(2);
  p.b1 << 0.1, -0.2;
  p.b2 = Vector(2);
  p.b2 << 0.05, 0.0;
  Matrix v(1, 2);
  v << 0.3, -0.7;
  auto gelu = [](double x) { return 0.5 * x * (1 + std::erf(x / std::sqrt(2.0))); };
  const double h0 = gelu(1.0 * 0.3 - 0.5 * -0.7 + 0.1);
  const double h1 = gelu(0.25 * 0.3 + 2.0 * -0.7 - 0.2);
  const Matrix out = ffn_apply(v, p, Activation::GELU);
  EXPECT_NEAR(out(0, 0), 0.5 * h0 + 1.0 * h1 + 0.05, 1e-15);
  EXPECT_NEAR(out(0, 1), -1.0 * h0 + 0.75 * h1, 1e-15);
}

TEST(FFN, BackwardMatchesFiniteDifferences) {
  FFNParams p{randn(3, 4, 10), randn(4, 3, 11), randn(4, 1, 12).col(0), randn(3, 1, 13).col(0)};
  const Matrix v = randn(5, 3, 14), g = randn(5, 3, 15);
  FFNCache cache;
  ffn_apply(v, p, Activation::Tanh, &cache);
  FFNParams grad{Matrix::Zero(3, 4), Matrix::Zero(4, 3), Vector::Zero(4), Vector::Zero(3)};
  const Matrix gv = ffn_backward(p, Activation::Tanh, cache, g, &grad);
  auto loss = [&](const Matrix& vv, const FFNParams& q) { return (ffn_apply(vv, q, Activation::Tanh).array() * g.array()).sum(); };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    Matrix a = v, b = v;
    a.data()[i] += h;
    b.data()[i] -= h;
    EXPECT_NEAR(gv.data()[i], (loss(a, p) - loss(b, p)) / (2 * h), 1e-7);
  }
  for (Eigen::Index i = 0; i < p.w4.size(); ++i) {
    FFNParams a = p, b = p;
    a.w4.data()[i] += h;
    b.w4.data()[i] -= h;
    EXPECT_NEAR(grad.w4.data()[i], (loss(v, a) - loss(v, b)) / (2 * h), 1e-7);
  }
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) {
    FFNParams a = p, b = p;
    a.b1[i] += h;
    b.b1[i] -= h;
    EXPECT_NEAR(grad.b1[i], (loss(v, a) - loss(v, b)) / (2 * h), 1e-7);
  }
  EXPECT_NEAR(grad.b2.sum(), g.sum(), 1e-12);
}
