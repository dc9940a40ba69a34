#include "tnop/layers.hpp"

#include <cmath>
#include <numbers>

namespace tnop {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::GELU: return "gelu";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "gelu";
}

Activation parse_activation(const std::string& name) {
  if (name == "gelu") return Activation::GELU;
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "' (expected gelu, relu, tanh or identity)");
}

double activation_value(Activation a, double x) {
  switch (a) {
    case Activation::GELU: return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: return x;
  }
  return x;
}

double activation_derivative(Activation a, double x) {
  switch (a) {
    case Activation::GELU: {
      const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
      return cdf + x * pdf;
    }
    case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

Matrix activation_apply(Activation a, const Matrix& x) {
  if (a == Activation::Identity) return x;
  return x.unaryExpr([a](double v) { return activation_value(a, v); });
}

Matrix layer_norm_apply(const Matrix& v, const LayerNormParams& ln, LayerNormCache* cache) {
  if (!ln.enabled) return v;
  const Eigen::Index d = v.cols();
  if (ln.gamma.size() != d || ln.beta.size() != d)
    throw std::invalid_argument("layer_norm: gamma/beta size does not match the channel count");
  Matrix xhat(v.rows(), d);
  Vector inv_std(v.rows());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).mean();
    const auto centered = (v.row(r).array() - m).eval();
    const double var = centered.square().sum() / static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + ln.eps);
    xhat.row(r) = (centered * inv_std[r]).matrix();
  }
  Matrix y = (xhat.array().rowwise() * ln.gamma.transpose().array()).matrix();
  y.rowwise() += ln.beta.transpose();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_apply(const Matrix& v, const Vector& gamma, const Vector& beta, double eps) {
  LayerNormParams ln{gamma, beta, eps, true};
  return layer_norm_apply(v, ln);
}

Matrix layer_norm_backward(const LayerNormParams& ln, const LayerNormCache& cache,
                           const Matrix& grad_out, LayerNormParams* grad) {
  if (!ln.enabled) return grad_out;
  const Eigen::Index d = grad_out.cols();
  if (grad != nullptr) {
    grad->gamma += (grad_out.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
    grad->beta += grad_out.colwise().sum().transpose();
  }
  Matrix dx(grad_out.rows(), d);
  for (Eigen::Index r = 0; r < grad_out.rows(); ++r) {
    const auto dxhat = (grad_out.row(r).array() * ln.gamma.transpose().array()).eval();
    const double mean_d = dxhat.sum() / static_cast<double>(d);
    const double mean_dx = (dxhat * cache.xhat.row(r).array()).sum() / static_cast<double>(d);
    dx.row(r) =
        ((dxhat - mean_d - cache.xhat.row(r).array() * mean_dx) * cache.inv_std[r]).matrix();
  }
  return dx;
}

Matrix ffn_apply(const Matrix& v, const FFNParams& p, Activation f, FFNCache* cache) {
  if (p.w4.cols() != v.cols() || p.w3.cols() != p.w4.rows())
    throw std::invalid_argument("ffn: weight shapes do not match the input channels");
  Matrix pre = v * p.w4.transpose();
  pre.rowwise() += p.b1.transpose();
  Matrix post = activation_apply(f, pre);
  Matrix out = post * p.w3.transpose();
  out.rowwise() += p.b2.transpose();
  if (cache != nullptr) {
    cache->input = v;
    cache->pre = std::move(pre);
    cache->post = std::move(post);
  }
  return out;
}

Matrix ffn_backward(const FFNParams& p, Activation f, const FFNCache& cache,
                    const Matrix& grad_out, FFNParams* grad) {
  Matrix dpost = grad_out * p.w3;
  Matrix dpre = dpost;
  if (f != Activation::Identity)
    dpre.array() *= cache.pre.unaryExpr([f](double x) { return activation_derivative(f, x); }).array();
  if (grad != nullptr) {
    grad->w3.noalias() += grad_out.transpose() * cache.post;
    grad->b2 += grad_out.colwise().sum().transpose();
    grad->w4.noalias() += dpre.transpose() * cache.input;
    grad->b1 += dpre.colwise().sum().transpose();
  }
  return dpre * p.w4;
}

}  // namespace tnop
