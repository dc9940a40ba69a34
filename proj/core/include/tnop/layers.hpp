#pragma once

#include <string>

#include "tnop/types.hpp"

namespace tnop {

enum class Activation { GELU, ReLU, Tanh, Identity };

std::string activation_name(Activation a);
/// Accepts "gelu", "relu", "tanh" and "identity"; throws ConfigError otherwise.
Activation parse_activation(const std::string& name);

double activation_value(Activation a, double x);
double activation_derivative(Activation a, double x);
Matrix activation_apply(Activation a, const Matrix& x);

struct LayerNormParams {
  Vector gamma;
  Vector beta;
  double eps = 1e-5;
  bool enabled = true;
};

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;  // per row
};

/// Normalizes every row over its channels with the biased variance, then applies
/// gamma and beta. A disabled layer norm is the identity.
Matrix layer_norm_apply(const Matrix& v, const LayerNormParams& ln, LayerNormCache* cache = nullptr);
Matrix layer_norm_apply(const Matrix& v, const Vector& gamma, const Vector& beta, double eps);

/// Returns dL/dv and accumulates dL/dgamma, dL/dbeta.
Matrix layer_norm_backward(const LayerNormParams& ln, const LayerNormCache& cache,
                           const Matrix& grad_out, LayerNormParams* grad);

struct FFNParams {
  Matrix w3;
  Matrix w4;
  Vector b1;
  Vector b2;
};

struct FFNCache {
  Matrix input;
  Matrix pre;   // W4 v + b1
  Matrix post;  // f(pre)
};

/// W3 f(W4 v + b1) + b2, row by row.
Matrix ffn_apply(const Matrix& v, const FFNParams& p, Activation f, FFNCache* cache = nullptr);

Matrix ffn_backward(const FFNParams& p, Activation f, const FFNCache& cache,
                    const Matrix& grad_out, FFNParams* grad);

}  // namespace tnop
