#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "tnop/attention.hpp"
#include "tnop/layers.hpp"

namespace tnop {

enum class Variant { TNO, ViTNO, FANO, MinimalUniversal };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// How the residual maps W1, W2 of an encoder layer act.
enum class SkipMode { Identity, Zero, Learned };

std::string skip_mode_name(SkipMode s);
SkipMode parse_skip_mode(const std::string& name);
std::string position_mode_name(PositionMode m);
PositionMode parse_position_mode(const std::string& name);

/// Architecture hyperparameters. Everything here is fixed at construction; the
/// trainable state lives in ModelParameters.
struct ModelConfig {
  Variant variant = Variant::TNO;
  int dim = 1;        // spatial dimension d
  int d_u = 1;        // input channels
  int d_z = 1;        // output channels
  int d_model = 64;
  int heads = 1;
  int layers = 4;
  Activation activation = Activation::GELU;
  PositionMode positions = PositionMode::Normalized;
  bool layer_norm = true;
  SkipMode skip1 = SkipMode::Identity;
  SkipMode skip2 = SkipMode::Identity;
  int d_ic = 0;                    // initial-condition token features (TNO), 0 disables
  std::vector<int> patches;        // patches per axis (ViTNO, FANO)
  std::vector<int> lift_modes;     // ViTNO lift cutoff per axis
  std::vector<int> head_modes;     // FANO head cutoff per axis
  int extension_pad = 0;           // FANO even-reflection padding per side
  bool smoothing = false;
  SmoothingParams smoothing_params;
  double logit_scale = 1.0;

  int position_channels() const { return positions == PositionMode::None ? 0 : dim; }
  int lift_inputs() const { return d_u + position_channels(); }
  int key_dim() const { return d_model / heads; }
  bool patched() const { return variant == Variant::ViTNO || variant == Variant::FANO; }

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  /// Defaults for the MinimalUniversal variant: no layer norms, learned W1 and W2.
  static ModelConfig minimal_universal(int dim, int d_u, int d_z, int d_model, int layers);
};

struct EncoderLayerParams {
  std::vector<AttentionHeadParams> heads;
  Matrix w_multihead;  // d_model x (H d_K)
  SkipMode skip1 = SkipMode::Identity;
  SkipMode skip2 = SkipMode::Identity;
  Matrix w1;  // only used when the skip is Learned
  Matrix w2;
  LayerNormParams ln1;
  LayerNormParams ln2;
  FFNParams ffn;
};

struct LiftParams {
  Matrix w_in;   // d_model x lift_inputs (TNO, FANO, MinimalUniversal)
  // d_model x (lift_inputs + d_ic): lifts the first lift-input row followed by the IC
  // features. Empty unless an IC token is used.
  Matrix w_in0;
  std::optional<FourierMultiplier> multiplier;  // ViTNO
};

struct ModelParameters {
  ModelConfig config;
  LiftParams t_in;
  std::vector<EncoderLayerParams> layers;
  Matrix w_out;  // d_z x d_model
};

/// Fixed affine maps applied around the network: inputs, IC features and outputs
/// are standardized per channel. Empty vectors mean the identity.
struct Normalizer {
  Vector in_mean, in_std;
  Vector ic_mean, ic_std;
  Vector out_mean, out_std;
};

struct Model {
  ModelParameters params;
  Normalizer normalizer;
};

/// Draws a parameter set for `config` from a seeded generator.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

/// Same tree with every array zeroed; used for gradients.
ModelParameters zeros_like(const ModelParameters& p);

/// Describes one array in the depth-first parameter order.
struct ParamGroup {
  std::string name;
  bool complex = false;  // stored as interleaved (re, im) doubles
  bool bias = false;     // b1, b2 and layer-norm shifts
};

/// Visits every trainable array in the documented depth-first order:
/// t_in (w_in, w_in0, lift multiplier), then per layer heads (q, k, v), w_multihead,
/// w1, w2, ln1 (gamma, beta), ln2 (gamma, beta), w3, w4, b1, b2, then w_out.
/// `f(const ParamGroup&, double* data, std::size_t count)`.
template <class Params, class F>
void visit_parameters(Params& p, F&& f);

std::size_t parameter_size(const ModelParameters& p);
Vector flatten(const ModelParameters& p);
void unflatten(const Vector& theta, ModelParameters& p);

/// Trainable scalars excluding bias terms (b1, b2, beta); a complex entry counts once.
std::int64_t count_params(const ModelParameters& p);

/// Attention setting for one forward pass.
struct AttentionContext {
  bool patched = false;
  Vector weights;  // key quadrature weights, or per-point patch weights when patched
  int patch_points = 0;
  int patch_count = 0;
  std::vector<int> patch_shape;
  int pad = 0;
  const SpectralOperator* head_operator = nullptr;  // operator-valued heads
  double scale = 1.0;
};

struct HeadCache {
  Matrix q, k, v, probs;
  std::vector<CMatrix> cq, ck, cv;  // per-patch Fourier coefficients (operator heads)
};

struct LayerCache {
  Matrix input;
  std::vector<HeadCache> heads;
  Matrix concat;
  LayerNormCache ln1, ln2;
  Matrix b;
  FFNCache ffn;
};

/// Concatenates head outputs and applies W_MultiHead.
Matrix multihead_apply(const Matrix& v, const EncoderLayerParams& layer,
                       const AttentionContext& ctx, LayerCache* cache = nullptr);

/// One encoder step: v <- LN1(W1 v + MH(v)); v <- LN2(W2 v + FFN(v)).
Matrix encoder_layer_apply(const Matrix& v, const EncoderLayerParams& layer,
                           const AttentionContext& ctx, Activation f,
                           LayerCache* cache = nullptr);

/// Returns dL/dv and accumulates parameter gradients into `grad`.
Matrix encoder_layer_backward(const EncoderLayerParams& layer, const AttentionContext& ctx,
                              Activation f, const LayerCache& cache, const Matrix& grad_out,
                              EncoderLayerParams* grad);

/// f(W1 v + b1 + |D|^{-1} sum_k w_k v_k), row by row.
Matrix minimal_universal_layer(const Matrix& v, const Matrix& w1, const Vector& b1, Activation f,
                               const QuadratureWeights& w, double domain_volume);

/// Everything the backward pass needs from a forward evaluation.
struct ForwardCache {
  Domain domain;
  GridSpec grid;
  Matrix lift_input;  // work order (grid order, or patch order when patched)
  Vector ic;
  std::vector<CMatrix> lift_coefficients;
  std::vector<LayerCache> layers;
  Matrix hidden;  // encoder output in grid order
  std::vector<int> perm;
  PatchLayout layout;
  AttentionContext ctx;
  std::optional<SpectralOperator> lift_operator;
  std::optional<SpectralOperator> head_operator;
};

/// Raw network evaluation (no normalizer). `ic` is used when the config has an IC
/// token; `weights` defaults to default_weights for the grid. Returns (N x d_z).
Matrix model_forward(const ModelParameters& p, const SampledFunction& u, const Vector& ic = {},
                     const QuadratureWeights* weights = nullptr, ForwardCache* cache = nullptr);

/// Accumulates dL/dtheta for dL/d(output) into `grad`.
void model_backward(const ModelParameters& p, const ForwardCache& cache, const Matrix& grad_out,
                    ModelParameters& grad);

SampledFunction tno_forward(const ModelParameters& p, const SampledFunction& u,
                            const QuadratureWeights& w, const Vector& ic = {});
SampledFunction vitno_forward(const ModelParameters& p, const SampledFunction& u);
SampledFunction fano_forward(const ModelParameters& p, const SampledFunction& u);

/// Normalized evaluation in physical units: standardize inputs, run, de-standardize.
Matrix predict(const Model& m, const SampledFunction& u, const Vector& ic = {},
               const QuadratureWeights* weights = nullptr, ForwardCache* cache = nullptr);

/// Scale applied to dL/d(prediction) before model_backward.
Matrix output_grad_to_raw(const Model& m, const Matrix& grad_prediction);

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
auto* complex_doubles(T& tensor) {
  using Base = std::conditional_t<std::is_const_v<std::remove_reference_t<decltype(tensor[0])>>,
                                  const double, double>;
  return reinterpret_cast<Base*>(tensor.data());
}

}  // namespace detail

template <class Params, class F>
void visit_parameters(Params& p, F&& f) {
  auto mat = [&](const std::string& name, auto& m, bool bias = false) {
    if (m.size() == 0) return;
    f(ParamGroup{name, false, bias}, m.data(), static_cast<std::size_t>(m.size()));
  };
  auto mult = [&](const std::string& name, auto& r) {
    f(ParamGroup{name, true, false}, detail::complex_doubles(r.tensor), 2 * r.tensor.size());
  };
  mat("t_in.w_in", p.t_in.w_in);
  mat("t_in.w_in0", p.t_in.w_in0);
  if (p.t_in.multiplier) mult("t_in.multiplier", *p.t_in.multiplier);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const std::string hp = pre + "head" + std::to_string(h) + ".";
      auto& head = layer.heads[h];
      if (auto* pw = std::get_if<PointwiseHead>(&head)) {
        mat(hp + "q", pw->q);
        mat(hp + "k", pw->k);
        mat(hp + "v", pw->v);
      } else {
        auto& oh = std::get<OperatorHead>(head);
        mult(hp + "q", oh.q);
        mult(hp + "k", oh.k);
        mult(hp + "v", oh.v);
      }
    }
    mat(pre + "w_multihead", layer.w_multihead);
    mat(pre + "w1", layer.w1);
    mat(pre + "w2", layer.w2);
    mat(pre + "ln1.gamma", layer.ln1.gamma);
    mat(pre + "ln1.beta", layer.ln1.beta, true);
    mat(pre + "ln2.gamma", layer.ln2.gamma);
    mat(pre + "ln2.beta", layer.ln2.beta, true);
    mat(pre + "w3", layer.ffn.w3);
    mat(pre + "w4", layer.ffn.w4);
    mat(pre + "b1", layer.ffn.b1, true);
    mat(pre + "b2", layer.ffn.b2, true);
  }
  mat("t_out.w_out", p.w_out);
}

}  // namespace tnop
