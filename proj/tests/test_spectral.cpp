#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tnop/spectral.hpp"

using namespace tnop;

namespace {

constexpr double kPi = std::numbers::pi;

SampledFunction periodic_fn(std::vector<int> shape, int channels,
                            const std::function<double(const Eigen::RowVectorXd&, int)>& f) {
  const Domain dom = Domain::unit(static_cast<int>(shape.size()));
  const GridSpec g = GridSpec::uniform(shape, true);
  const Matrix x = g.coordinates(dom);
  Matrix v(x.rows(), channels);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int c = 0; c < channels; ++c) v(i, c) = f(x.row(i), c);
  return {dom, g, v};
}

FourierMultiplier random_multiplier(std::vector<int> kmax, int r_out, int r_in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  auto R = FourierMultiplier::zeros(std::move(kmax), r_out, r_in);
  for (auto& z : R.tensor) z = {N(rng), N(rng)};
  return R;
}

// A smooth function with modes |k| <= 2 on each axis.
double band_limited(const Eigen::RowVectorXd& x, int c) {
  double s = 0.3 + 0.1 * c;
  for (Eigen::Index a = 0; a < x.size(); ++a)
    s += std::cos(2 * kPi * x[a] + 0.4 * (a + c)) + 0.5 * std::sin(4 * kPi * x[a] - 0.2 * c);
  if (x.size() == 2) s += 0.7 * std::cos(2 * kPi * (x[0] - 2 * x[1]));
  return s;
}

}  // namespace

TEST(Dft, ConstantHasOnlyModeZero) {
  const auto u = periodic_fn({12}, 1, [](auto&, int) { return 2.5; });
  const CMatrix F = dft_forward(u);
  EXPECT_NEAR(std::abs(F(0, 0) - Complex(30.0, 0.0)), 0.0, 1e-12);
  for (int k = 1; k < 12; ++k) EXPECT_LT(std::abs(F(k, 0)), 1e-12);
}

TEST(Dft, CosineModes) {
  const auto u = periodic_fn({16}, 1, [](auto& x, int) { return std::cos(2 * kPi * x[0]); });
  const CMatrix F = dft_forward(u);
  for (int k = 0; k < 16; ++k) {
    const double expect = (k == 1 || k == 15) ? 8.0 : 0.0;
    EXPECT_NEAR(std::abs(F(k, 0) - Complex(expect, 0)), 0.0, 1e-12) << k;
  }
}

TEST(Dft, RoundTrip) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  for (std::vector<int> shape : {std::vector<int>{8}, {16}, {32}, {8, 8}, {16, 32}, {32, 16}}) {
    const GridSpec g = GridSpec::uniform(shape, true);
    const Domain d = Domain::unit(static_cast<int>(shape.size()));
    SampledFunction u(d, g, Matrix::NullaryExpr(static_cast<Eigen::Index>(g.point_count()), 2, [&] { return N(rng); }));
    const auto back = dft_inverse(dft_forward(u), d, g);
    EXPECT_LE((back.values - u.values).norm() / u.values.norm(), 1e-12);
  }
}

TEST(Dft, MatchesNaiveSum) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  const GridSpec g = GridSpec::uniform({6, 5}, true);
  SampledFunction u(Domain::unit(2), g, Matrix::NullaryExpr(30, 1, [&] { return N(rng); }));
  const CMatrix F = dft_forward(u);
  for (int k1 = 0; k1 < 6; ++k1)
    for (int k2 = 0; k2 < 5; ++k2) {
      Complex s = 0;
      for (int n1 = 0; n1 < 6; ++n1)
        for (int n2 = 0; n2 < 5; ++n2)
          s += u.values(n1 * 5 + n2, 0) * std::polar(1.0, -2 * kPi * (k1 * n1 / 6.0 + k2 * n2 / 5.0));
      EXPECT_LT(std::abs(F(k1 * 5 + k2, 0) - s), 1e-12);
    }
}

TEST(FourierIntegral, IdentityOnBandLimited) {
  const auto u = periodic_fn({16, 16}, 1, band_limited);
  auto R = FourierMultiplier::zeros({3, 3}, 1, 1);
  for (int m = 0; m < R.mode_count(); ++m) R.at(m, 0, 0) = 1.0;
  const auto y = fourier_integral_apply(R, u);
  EXPECT_LT((y.values - u.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FourierIntegral, SingleModeDoubling) {
  const auto u = periodic_fn({16}, 1, [](auto& x, int) { return std::cos(2 * kPi * x[0]); });
  auto R = FourierMultiplier::zeros({2}, 1, 1);
  R.at(R.mode_of({1}), 0, 0) = 2.0;
  R.at(R.mode_of({-1}), 0, 0) = 2.0;
  const auto y = fourier_integral_apply(R, u);
  EXPECT_LT((y.values - 2.0 * u.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierIntegral, ModeZeroMixesMeans) {
  const auto u = periodic_fn({8}, 2, [](auto& x, int c) { return (c == 0 ? 1.5 : -0.5) + std::sin(2 * kPi * x[0] * (c + 1)); });
  auto R = FourierMultiplier::zeros({1}, 1, 2);
  R.at(R.mode_of({0}), 0, 0) = 2.0;
  R.at(R.mode_of({0}), 0, 1) = 3.0;
  const auto y = fourier_integral_apply(R, u);
  const double expect = 2.0 * 1.5 + 3.0 * -0.5;
  EXPECT_LT((y.values.array() - expect).abs().maxCoeff(), 1e-12);
}

TEST(FourierIntegral, MatchesFftRoute) {
  for (std::vector<int> shape : {std::vector<int>{9}, {16}, {8, 10}}) {
    std::vector<int> kmax;
    for (int n : shape) kmax.push_back(max_cutoff(n));
    const auto R = random_multiplier(kmax, 3, 2, 5);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N;
    const GridSpec g = GridSpec::uniform(shape, true);
    SampledFunction u(Domain::unit(static_cast<int>(shape.size())), g,
                      Matrix::NullaryExpr(static_cast<Eigen::Index>(g.point_count()), 2, [&] { return N(rng); }));
    const auto a = fourier_integral_apply(R, u);
    const auto b = fourier_integral_apply_fft(R, u);
    EXPECT_LT((a.values - b.values).norm() / b.values.norm(), 1e-12);
  }
}

TEST(FourierIntegral, Linear) {
  const auto R = random_multiplier({3, 2}, 2, 2, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  const GridSpec g = GridSpec::uniform({12, 10}, true);
  auto rnd = [&] { return SampledFunction(Domain::unit(2), g, Matrix::NullaryExpr(120, 2, [&] { return N(rng); })); };
  const auto u = rnd(), v = rnd();
  SampledFunction w = u;
  w.values = 1.7 * u.values - 0.3 * v.values;
  const Matrix lhs = fourier_integral_apply(R, w).values;
  const Matrix rhs = 1.7 * fourier_integral_apply(R, u).values - 0.3 * fourier_integral_apply(R, v).values;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(FourierIntegral, ResolutionConsistent) {
  const auto R = random_multiplier({3, 3}, 2, 1, 11);
  const auto coarse = fourier_integral_apply(R, periodic_fn({16, 16}, 1, band_limited));
  const auto fine = fourier_integral_apply(R, periodic_fn({32, 32}, 1, band_limited));
  double worst = 0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      worst = std::max(worst, (coarse.values.row(i * 16 + j) - fine.values.row(2 * i * 32 + 2 * j)).cwiseAbs().maxCoeff());
  EXPECT_LT(worst, 1e-8);
}

TEST(FourierIntegral, RejectsCutoffAboveNyquist) {
  const auto u = periodic_fn({8}, 1, band_limited);
  EXPECT_THROW(fourier_integral_apply(FourierMultiplier::zeros({4}, 1, 1), u), std::invalid_argument);
  EXPECT_THROW(fourier_integral_apply(FourierMultiplier::zeros({3}, 1, 2), u), std::invalid_argument);
}

TEST(SpectralOperator, BackwardIsAdjoint) {
  const std::vector<int> shape{6, 7};
  const SpectralOperator op(shape, {2, 3});
  const auto R = random_multiplier({2, 3}, 2, 3, 8);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  const Matrix x = Matrix::NullaryExpr(42, 3, [&] { return N(rng); });
  const Matrix gy = Matrix::NullaryExpr(42, 2, [&] { return N(rng); });
  CMatrix coeffs;
  const Matrix y = op.apply(R, x, &coeffs);
  auto gR = FourierMultiplier::zeros({2, 3}, 2, 3);
  const Matrix gx = op.backward(R, coeffs, gy, &gR);
  // <gy, A x> = <A^T gy, x>
  EXPECT_NEAR((gy.array() * y.array()).sum(), (gx.array() * x.array()).sum(), 1e-10);
  // y is linear in R too: <gy, y(R)> = <gR, R> with re/im pairing.
  double pair = 0;
  for (std::size_t i = 0; i < R.tensor.size(); ++i)
    pair += gR.tensor[i].real() * R.tensor[i].real() + gR.tensor[i].imag() * R.tensor[i].imag();
  EXPECT_NEAR((gy.array() * y.array()).sum(), pair, 1e-10);
}

// --- smoothing ---------------------------------------------------------------

TEST(Smoothing, ConstantUnchanged) {
  const auto z = periodic_fn({16, 16}, 2, [](auto&, int c) { return 3.0 - c; });
  const auto s = smoothing_apply(z, SmoothingParams{});
  EXPECT_LT((s.values - z.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Smoothing, CosineFactor) {
  const auto z = periodic_fn({32}, 1, [](auto& x, int) { return std::cos(2 * kPi * x[0]); });
  const SmoothingParams p{1e-3, 1.001};
  const auto s = smoothing_apply(z, p);
  const double factor = std::pow(1.0 + 1e-3 * 4 * kPi * kPi, -1.001);
  EXPECT_LT((s.values - factor * z.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Smoothing, MeanPreservedAndNoModeAmplified) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> N;
  const GridSpec g = GridSpec::uniform({16, 12}, true);
  SampledFunction z(Domain({{0, 2}, {0, 1}}), g, Matrix::NullaryExpr(192, 1, [&] { return N(rng); }));
  const auto s = smoothing_apply(z, SmoothingParams{0.05, 1.5});
  EXPECT_NEAR(s.values.mean(), z.values.mean(), 1e-12);
  const CMatrix a = dft_forward(z), b = dft_forward(s);
  for (Eigen::Index k = 0; k < a.rows(); ++k) EXPECT_LE(std::abs(b(k, 0)), std::abs(a(k, 0)) * (1 + 1e-12) + 1e-13);
}

TEST(Smoothing, ReducesH1Seminorm) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  SampledFunction z(Domain::unit(1), GridSpec::uniform({64}, true), Matrix::NullaryExpr(64, 1, [&] { return N(rng); }));
  const auto s = smoothing_apply(z, SmoothingParams{1e-3, 1.001});
  auto h1 = [](const Matrix& v) {
    double t = 0;
    for (int i = 0; i < 64; ++i) t += std::pow(v((i + 1) % 64, 0) - v(i, 0), 2);
    return t;
  };
  EXPECT_LT(h1(s.values), h1(z.values));
}

TEST(Smoothing, FactorFormula) {
  const SmoothingParams p{0.01, 2.0};
  EXPECT_DOUBLE_EQ(smoothing_factor({0, 0}, {1, 1}, p), 1.0);
  const double k2 = std::pow(2 * kPi * 3 / 2.0, 2) + std::pow(2 * kPi * 1 / 1.0, 2);
  EXPECT_NEAR(smoothing_factor({3, -1}, {2, 1}, p), std::pow(1 + 0.01 * k2, -2.0), 1e-15);
}

// --- patch extension ---------------------------------------------------------

TEST(PatchExtend, EvenReflection) {
  Matrix p(3, 1);
  p << 1, 2, 3;
  const Matrix e = periodic_patch_extend(p, {3}, 1);
  ASSERT_EQ(e.rows(), 5);
  const double expect[] = {2, 1, 2, 3, 2};
  for (int i = 0; i < 5; ++i) EXPECT_EQ(e(i, 0), expect[i]);
}

TEST(PatchExtend, PadZeroIsIdentity) {
  Matrix p = Matrix::Random(12, 2);
  EXPECT_EQ(periodic_patch_extend(p, {3, 4}, 0), p);
  EXPECT_EQ(periodic_patch_restrict(p, {3, 4}, 0), p);
}

TEST(PatchExtend, RestrictInvertsExtend) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> N;
  for (int pad = 1; pad <= 3; ++pad) {
    const Matrix p = Matrix::NullaryExpr(20, 3, [&] { return N(rng); });
    EXPECT_EQ(periodic_patch_restrict(periodic_patch_extend(p, {4, 5}, pad), {4, 5}, pad), p);
  }
}

TEST(PatchExtend, AdjointsPairWithOperators) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N;
  const std::vector<int> shape{4, 3};
  const int pad = 2;
  const Matrix x = Matrix::NullaryExpr(12, 2, [&] { return N(rng); });
  const Matrix e = periodic_patch_extend(x, shape, pad);
  const Matrix g = Matrix::NullaryExpr(e.rows(), 2, [&] { return N(rng); });
  EXPECT_NEAR((g.array() * e.array()).sum(),
              (periodic_patch_extend_adjoint(g, shape, pad).array() * x.array()).sum(), 1e-12);
  const Matrix r = periodic_patch_restrict(g, shape, pad);
  EXPECT_NEAR((r.array() * x.array()).sum(),
              (periodic_patch_restrict_adjoint(x, shape, pad).array() * g.array()).sum(), 1e-12);
}

TEST(PatchExtend, RejectsLargePad) {
  EXPECT_THROW(periodic_patch_extend(Matrix::Zero(3, 1), {3}, 3), std::invalid_argument);
}
