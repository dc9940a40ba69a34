#include "tnop/models.hpp"

#include <random>

namespace tnop {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::TNO: return "tno";
    case Variant::ViTNO: return "vitno";
    case Variant::FANO: return "fano";
    case Variant::MinimalUniversal: return "minimal_universal";
  }
  return "tno";
}

Variant parse_variant(const std::string& name) {
  if (name == "tno") return Variant::TNO;
  if (name == "vitno") return Variant::ViTNO;
  if (name == "fano") return Variant::FANO;
  if (name == "minimal_universal") return Variant::MinimalUniversal;
  throw ConfigError("unknown model variant '" + name +
                    "' (expected tno, vitno, fano or minimal_universal)");
}

std::string skip_mode_name(SkipMode s) {
  switch (s) {
    case SkipMode::Identity: return "identity";
    case SkipMode::Zero: return "zero";
    case SkipMode::Learned: return "learned";
  }
  return "identity";
}

SkipMode parse_skip_mode(const std::string& name) {
  if (name == "identity") return SkipMode::Identity;
  if (name == "zero") return SkipMode::Zero;
  if (name == "learned") return SkipMode::Learned;
  throw ConfigError("unknown skip mode '" + name + "' (expected identity, zero or learned)");
}

std::string position_mode_name(PositionMode m) {
  switch (m) {
    case PositionMode::Normalized: return "normalized";
    case PositionMode::Raw: return "raw";
    case PositionMode::None: return "none";
  }
  return "normalized";
}

PositionMode parse_position_mode(const std::string& name) {
  if (name == "normalized") return PositionMode::Normalized;
  if (name == "raw") return PositionMode::Raw;
  if (name == "none") return PositionMode::None;
  throw ConfigError("unknown position mode '" + name + "' (expected normalized, raw or none)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
  if (dim < 1) fail("dim must be at least 1");
  if (d_u < 1 || d_z < 1) fail("d_u and d_z must be at least 1");
  if (d_model < 1 || heads < 1) fail("d_model and heads must be at least 1");
  if (d_model % heads != 0)
    fail("heads (" + std::to_string(heads) + ") must divide d_model (" + std::to_string(d_model) +
         ")");
  if (layers < 0) fail("layers must be non-negative");
  if (d_ic < 0) fail("d_ic must be non-negative");
  if (patched()) {
    if (static_cast<int>(patches.size()) != dim) fail("patches needs one count per axis");
    for (int q : patches)
      if (q < 1) fail("patch counts must be positive");
    if (d_ic > 0) fail("the initial-condition token is only available for tno");
  } else if (!patches.empty()) {
    fail("patches are only valid for vitno and fano");
  }
  if (variant == Variant::ViTNO && static_cast<int>(lift_modes.size()) != dim)
    fail("vitno needs lift_modes with one cutoff per axis");
  if (variant == Variant::FANO && static_cast<int>(head_modes.size()) != dim)
    fail("fano needs head_modes with one cutoff per axis");
  for (int k : lift_modes)
    if (k < 0) fail("lift_modes must be non-negative");
  for (int k : head_modes)
    if (k < 0) fail("head_modes must be non-negative");
  if (extension_pad < 0) fail("extension_pad must be non-negative");
  if (extension_pad > 0 && variant != Variant::FANO) fail("extension_pad is only valid for fano");
  if (smoothing && (smoothing_params.epsilon <= 0.0 || smoothing_params.alpha <= 1.0))
    fail("smoothing needs epsilon > 0 and alpha > 1");
  if (!(logit_scale > 0.0)) fail("logit_scale must be positive");
}

ModelConfig ModelConfig::minimal_universal(int dim, int d_u, int d_z, int d_model, int layers) {
  ModelConfig c;
  c.variant = Variant::MinimalUniversal;
  c.dim = dim;
  c.d_u = d_u;
  c.d_z = d_z;
  c.d_model = d_model;
  c.layers = layers;
  c.layer_norm = false;
  c.skip1 = SkipMode::Learned;
  c.skip2 = SkipMode::Learned;
  return c;
}

namespace {

Matrix uniform_matrix(std::mt19937_64& rng, int rows, int cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

FourierMultiplier gaussian_multiplier(std::mt19937_64& rng, const std::vector<int>& kmax,
                                      int r_out, int r_in) {
  FourierMultiplier r = FourierMultiplier::zeros(kmax, r_out, r_in);
  const double scale = 1.0 / (static_cast<double>(r_in) * r.mode_count());
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& c : r.tensor) {
    const double re = dist(rng);
    const double im = dist(rng);
    c = Complex(re * scale, im * scale);
  }
  return r;
}

LayerNormParams make_layer_norm(bool enabled, int d) {
  LayerNormParams ln;
  ln.enabled = enabled;
  if (enabled) {
    ln.gamma = Vector::Ones(d);
    ln.beta = Vector::Zero(d);
  }
  return ln;
}

}  // namespace

ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const int dm = config.d_model;
  const int dk = config.key_dim();
  ModelParameters p;
  p.config = config;
  if (config.variant == Variant::ViTNO)
    p.t_in.multiplier = gaussian_multiplier(rng, config.lift_modes, dm, config.lift_inputs());
  else
    p.t_in.w_in = uniform_matrix(rng, dm, config.lift_inputs());
  if (config.d_ic > 0) p.t_in.w_in0 = uniform_matrix(rng, dm, config.lift_inputs() + config.d_ic);

  p.layers.resize(static_cast<std::size_t>(config.layers));
  for (auto& layer : p.layers) {
    for (int h = 0; h < config.heads; ++h) {
      if (config.variant == Variant::FANO) {
        OperatorHead oh;
        oh.q = gaussian_multiplier(rng, config.head_modes, dk, dm);
        oh.k = gaussian_multiplier(rng, config.head_modes, dk, dm);
        oh.v = gaussian_multiplier(rng, config.head_modes, dk, dm);
        layer.heads.emplace_back(std::move(oh));
      } else {
        PointwiseHead ph;
        ph.q = uniform_matrix(rng, dk, dm);
        ph.k = uniform_matrix(rng, dk, dm);
        ph.v = uniform_matrix(rng, dk, dm);
        layer.heads.emplace_back(std::move(ph));
      }
    }
    layer.w_multihead = uniform_matrix(rng, dm, config.heads * dk);
    layer.skip1 = config.skip1;
    layer.skip2 = config.skip2;
    if (config.skip1 == SkipMode::Learned) layer.w1 = uniform_matrix(rng, dm, dm);
    if (config.skip2 == SkipMode::Learned) layer.w2 = uniform_matrix(rng, dm, dm);
    layer.ln1 = make_layer_norm(config.layer_norm, dm);
    layer.ln2 = make_layer_norm(config.layer_norm, dm);
    layer.ffn.w3 = uniform_matrix(rng, dm, dm);
    layer.ffn.w4 = uniform_matrix(rng, dm, dm);
    layer.ffn.b1 = Vector::Zero(dm);
    layer.ffn.b2 = Vector::Zero(dm);
  }
  p.w_out = uniform_matrix(rng, config.d_z, dm);
  return p;
}

ModelParameters zeros_like(const ModelParameters& p) {
  ModelParameters z = p;
  visit_parameters(z, [](const ParamGroup&, double* data, std::size_t n) {
    std::fill(data, data + n, 0.0);
  });
  return z;
}

std::size_t parameter_size(const ModelParameters& p) {
  std::size_t n = 0;
  visit_parameters(p, [&](const ParamGroup&, const double*, std::size_t c) { n += c; });
  return n;
}

Vector flatten(const ModelParameters& p) {
  Vector theta(static_cast<Eigen::Index>(parameter_size(p)));
  std::size_t off = 0;
  visit_parameters(p, [&](const ParamGroup&, const double* data, std::size_t n) {
    std::copy(data, data + n, theta.data() + off);
    off += n;
  });
  return theta;
}

void unflatten(const Vector& theta, ModelParameters& p) {
  const std::size_t n = parameter_size(p);
  if (static_cast<std::size_t>(theta.size()) != n)
    throw std::invalid_argument("unflatten: expected " + std::to_string(n) + " values, got " +
                                std::to_string(theta.size()));
  std::size_t off = 0;
  visit_parameters(p, [&](const ParamGroup&, double* data, std::size_t c) {
    std::copy(theta.data() + off, theta.data() + off + c, data);
    off += c;
  });
}

std::int64_t count_params(const ModelParameters& p) {
  std::int64_t n = 0;
  visit_parameters(p, [&](const ParamGroup& g, const double*, std::size_t c) {
    if (g.bias) return;
    n += static_cast<std::int64_t>(g.complex ? c / 2 : c);
  });
  return n;
}

// ---------------------------------------------------------------------------
// Attention blocks

namespace {

Matrix operator_map(const FourierMultiplier& R, const Matrix& x, const AttentionContext& ctx,
                    std::vector<CMatrix>* coefficients) {
  if (ctx.head_operator == nullptr)
    throw std::invalid_argument("operator-valued heads need a patched context");
  if (R.r_in != x.cols())
    throw std::invalid_argument("operator head expects " + std::to_string(R.r_in) +
                                " channels, got " + std::to_string(x.cols()));
  const int M = ctx.patch_points;
  const Eigen::Index P = x.rows() / M;
  Matrix out(x.rows(), R.r_out);
  if (coefficients != nullptr) coefficients->resize(static_cast<std::size_t>(P));
  for (Eigen::Index p = 0; p < P; ++p) {
    Matrix xp = x.middleRows(p * M, M);
    if (ctx.pad > 0) xp = periodic_patch_extend(xp, ctx.patch_shape, ctx.pad);
    CMatrix* c = coefficients != nullptr ? &(*coefficients)[static_cast<std::size_t>(p)] : nullptr;
    Matrix y = ctx.head_operator->apply(R, xp, c);
    if (ctx.pad > 0) y = periodic_patch_restrict(y, ctx.patch_shape, ctx.pad);
    out.middleRows(p * M, M) = y;
  }
  return out;
}

Matrix operator_map_backward(const FourierMultiplier& R, const Matrix& grad_y,
                             const AttentionContext& ctx,
                             const std::vector<CMatrix>& coefficients, FourierMultiplier* grad_R) {
  const int M = ctx.patch_points;
  const Eigen::Index P = grad_y.rows() / M;
  Matrix dx(grad_y.rows(), R.r_in);
  for (Eigen::Index p = 0; p < P; ++p) {
    Matrix g = grad_y.middleRows(p * M, M);
    if (ctx.pad > 0) g = periodic_patch_restrict_adjoint(g, ctx.patch_shape, ctx.pad);
    Matrix gx =
        ctx.head_operator->backward(R, coefficients[static_cast<std::size_t>(p)], g, grad_R);
    if (ctx.pad > 0) gx = periodic_patch_extend_adjoint(gx, ctx.patch_shape, ctx.pad);
    dx.middleRows(p * M, M) = gx;
  }
  return dx;
}

Matrix attend(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionContext& ctx,
              Matrix* probs) {
  if (ctx.patched)
    return patched_attention_kernel(q, k, v, ctx.patch_points, ctx.weights, ctx.scale, probs);
  return attention_kernel(q, k, v, ctx.weights, ctx.scale, probs);
}

AttentionGrads attend_backward(const HeadCache& hc, const Matrix& grad_out,
                               const AttentionContext& ctx) {
  if (ctx.patched)
    return patched_attention_kernel_backward(hc.q, hc.k, hc.v, ctx.patch_points, ctx.weights,
                                             hc.probs, grad_out, ctx.scale);
  return attention_kernel_backward(hc.q, hc.k, hc.v, hc.probs, grad_out, ctx.scale);
}

Matrix skip_apply(const Matrix& x, SkipMode mode, const Matrix& w) {
  switch (mode) {
    case SkipMode::Identity: return x;
    case SkipMode::Zero: return Matrix::Zero(x.rows(), x.cols());
    case SkipMode::Learned: return x * w.transpose();
  }
  return x;
}

Matrix skip_backward(const Matrix& grad, SkipMode mode, const Matrix& w, const Matrix& x,
                     Matrix* grad_w) {
  switch (mode) {
    case SkipMode::Identity: return grad;
    case SkipMode::Zero: return Matrix::Zero(grad.rows(), grad.cols());
    case SkipMode::Learned:
      if (grad_w != nullptr) grad_w->noalias() += grad.transpose() * x;
      return grad * w;
  }
  return grad;
}

void check_finite(const Matrix& m, const std::string& stage) {
  if (!m.allFinite()) throw NumericError(stage, "non-finite values");
}

}  // namespace

Matrix multihead_apply(const Matrix& v, const EncoderLayerParams& layer,
                       const AttentionContext& ctx, LayerCache* cache) {
  if (layer.heads.empty()) throw std::invalid_argument("multihead: no heads");
  std::vector<Matrix> outs;
  Eigen::Index total = 0;
  if (cache != nullptr) cache->heads.assign(layer.heads.size(), HeadCache{});
  for (std::size_t h = 0; h < layer.heads.size(); ++h) {
    HeadCache local;
    HeadCache& hc = cache != nullptr ? cache->heads[h] : local;
    const bool keep = cache != nullptr;
    if (const auto* pw = std::get_if<PointwiseHead>(&layer.heads[h])) {
      if (pw->q.cols() != v.cols() || pw->k.cols() != v.cols() || pw->v.cols() != v.cols() ||
          pw->q.rows() != pw->k.rows())
        throw std::invalid_argument("multihead: head " + std::to_string(h) +
                                    " has inconsistent dimensions");
      hc.q = v * pw->q.transpose();
      hc.k = v * pw->k.transpose();
      hc.v = v * pw->v.transpose();
    } else {
      const auto& oh = std::get<OperatorHead>(layer.heads[h]);
      if (oh.q.r_out != oh.k.r_out)
        throw std::invalid_argument("multihead: head " + std::to_string(h) +
                                    " has inconsistent dimensions");
      hc.q = operator_map(oh.q, v, ctx, keep ? &hc.cq : nullptr);
      hc.k = operator_map(oh.k, v, ctx, keep ? &hc.ck : nullptr);
      hc.v = operator_map(oh.v, v, ctx, keep ? &hc.cv : nullptr);
    }
    outs.push_back(attend(hc.q, hc.k, hc.v, ctx, keep ? &hc.probs : nullptr));
    total += outs.back().cols();
  }
  if (layer.w_multihead.cols() != total || layer.w_multihead.rows() != v.cols())
    throw std::invalid_argument("multihead: W_MultiHead is " +
                                std::to_string(layer.w_multihead.rows()) + "x" +
                                std::to_string(layer.w_multihead.cols()) + ", expected " +
                                std::to_string(v.cols()) + "x" + std::to_string(total));
  Matrix concat(v.rows(), total);
  Eigen::Index off = 0;
  for (const auto& o : outs) {
    concat.middleCols(off, o.cols()) = o;
    off += o.cols();
  }
  Matrix out = concat * layer.w_multihead.transpose();
  if (cache != nullptr) cache->concat = std::move(concat);
  return out;
}

Matrix encoder_layer_apply(const Matrix& v, const EncoderLayerParams& layer,
                           const AttentionContext& ctx, Activation f, LayerCache* cache) {
  Matrix a = skip_apply(v, layer.skip1, layer.w1) + multihead_apply(v, layer, ctx, cache);
  Matrix b = layer_norm_apply(a, layer.ln1, cache != nullptr ? &cache->ln1 : nullptr);
  Matrix c = skip_apply(b, layer.skip2, layer.w2) +
             ffn_apply(b, layer.ffn, f, cache != nullptr ? &cache->ffn : nullptr);
  Matrix out = layer_norm_apply(c, layer.ln2, cache != nullptr ? &cache->ln2 : nullptr);
  if (cache != nullptr) {
    cache->input = v;
    cache->b = std::move(b);
  }
  return out;
}

Matrix encoder_layer_backward(const EncoderLayerParams& layer, const AttentionContext& ctx,
                              Activation f, const LayerCache& cache, const Matrix& grad_out,
                              EncoderLayerParams* grad) {
  const Matrix dc = layer_norm_backward(layer.ln2, cache.ln2, grad_out, &grad->ln2);
  Matrix db = skip_backward(dc, layer.skip2, layer.w2, cache.b, &grad->w2);
  db += ffn_backward(layer.ffn, f, cache.ffn, dc, &grad->ffn);
  const Matrix da = layer_norm_backward(layer.ln1, cache.ln1, db, &grad->ln1);
  Matrix dx = skip_backward(da, layer.skip1, layer.w1, cache.input, &grad->w1);

  grad->w_multihead.noalias() += da.transpose() * cache.concat;
  const Matrix dconcat = da * layer.w_multihead;
  const Matrix& x = cache.input;
  Eigen::Index off = 0;
  for (std::size_t h = 0; h < layer.heads.size(); ++h) {
    const HeadCache& hc = cache.heads[h];
    const Eigen::Index dv = hc.v.cols();
    const AttentionGrads g = attend_backward(hc, dconcat.middleCols(off, dv), ctx);
    off += dv;
    if (const auto* pw = std::get_if<PointwiseHead>(&layer.heads[h])) {
      auto& gh = std::get<PointwiseHead>(grad->heads[h]);
      gh.q.noalias() += g.q.transpose() * x;
      gh.k.noalias() += g.k.transpose() * x;
      gh.v.noalias() += g.v.transpose() * x;
      dx.noalias() += g.q * pw->q;
      dx.noalias() += g.k * pw->k;
      dx.noalias() += g.v * pw->v;
    } else {
      const auto& oh = std::get<OperatorHead>(layer.heads[h]);
      auto& gh = std::get<OperatorHead>(grad->heads[h]);
      dx += operator_map_backward(oh.q, g.q, ctx, hc.cq, &gh.q);
      dx += operator_map_backward(oh.k, g.k, ctx, hc.ck, &gh.k);
      dx += operator_map_backward(oh.v, g.v, ctx, hc.cv, &gh.v);
    }
  }
  return dx;
}

Matrix minimal_universal_layer(const Matrix& v, const Matrix& w1, const Vector& b1, Activation f,
                               const QuadratureWeights& w, double domain_volume) {
  if (w.size() != static_cast<std::size_t>(v.rows()))
    throw std::invalid_argument("minimal_universal_layer: weights do not match the grid");
  if (!(domain_volume > 0.0))
    throw std::invalid_argument("minimal_universal_layer: domain volume must be positive");
  const Vector mean = (v.transpose() * w.weights) / domain_volume;
  Matrix pre = v * w1.transpose();
  pre.rowwise() += (b1 + mean).transpose();
  return activation_apply(f, pre);
}

// ---------------------------------------------------------------------------
// Full models

namespace {

double patch_volume(const Domain& domain, const std::vector<int>& patches) {
  double vol = 1.0;
  for (int a = 0; a < domain.dim(); ++a) vol *= domain.axis(a).length() / patches[a];
  return vol;
}

std::vector<double> periods_of(const Domain& domain) {
  std::vector<double> p;
  for (const auto& ax : domain.bounds()) p.push_back(ax.length());
  return p;
}

AttentionContext rebind(const ForwardCache& cache) {
  AttentionContext ctx = cache.ctx;
  ctx.head_operator = cache.head_operator ? &*cache.head_operator : nullptr;
  return ctx;
}

}  // namespace

Matrix model_forward(const ModelParameters& p, const SampledFunction& u, const Vector& ic,
                     const QuadratureWeights* weights, ForwardCache* cache) {
  const ModelConfig& cfg = p.config;
  ForwardCache local;
  ForwardCache& fc = cache != nullptr ? *cache : local;
  if (u.channels() != cfg.d_u)
    throw std::invalid_argument("model: expected " + std::to_string(cfg.d_u) +
                                " input channels, got " + std::to_string(u.channels()));
  if (u.domain.dim() != cfg.dim)
    throw std::invalid_argument("model: expected a " + std::to_string(cfg.dim) +
                                "-dimensional domain");
  if (cfg.d_ic > 0 && ic.size() != cfg.d_ic)
    throw std::invalid_argument("model: expected " + std::to_string(cfg.d_ic) +
                                " initial-condition features, got " + std::to_string(ic.size()));
  if ((cfg.patched() || cfg.smoothing) && !u.grid.is_uniform())
    throw std::invalid_argument("model: patched models and smoothing need a uniform grid");

  fc.domain = u.domain;
  fc.grid = u.grid;
  fc.ic = ic;
  fc.layers.assign(p.layers.size(), LayerCache{});
  fc.lift_operator.reset();
  fc.head_operator.reset();
  fc.lift_coefficients.clear();

  Matrix x(u.values.rows(), cfg.lift_inputs());
  x.leftCols(cfg.d_u) = u.values;
  if (cfg.position_channels() > 0)
    x.rightCols(cfg.position_channels()) = position_channels(u.domain, u.grid, cfg.positions);

  AttentionContext ctx;
  ctx.scale = cfg.logit_scale;
  Matrix h;
  if (!cfg.patched()) {
    const QuadratureWeights w = weights != nullptr ? *weights : default_weights(u.grid, u.domain);
    if (w.size() != u.point_count())
      throw std::invalid_argument("model: quadrature weights do not match the grid");
    ctx.weights = w.weights;
    h = x * p.t_in.w_in.transpose();
    if (cfg.d_ic > 0) {
      Vector first(x.cols() + ic.size());
      first << x.row(0).transpose(), ic;
      h.row(0) = (p.t_in.w_in0 * first).transpose();
    }
    fc.perm.clear();
  } else {
    fc.layout = PatchLayout::for_grid(u.grid.shape(), cfg.patches);
    fc.perm = patch_permutation(fc.layout);
    x = to_patch_order(x, fc.perm);
    const int M = fc.layout.patch_points();
    ctx.patched = true;
    ctx.patch_points = M;
    ctx.patch_count = fc.layout.patch_count();
    ctx.patch_shape = fc.layout.patch_shape;
    ctx.weights = Vector::Constant(M, patch_volume(u.domain, cfg.patches) / M);
    if (cfg.variant == Variant::ViTNO) {
      fc.lift_operator.emplace(fc.layout.patch_shape, cfg.lift_modes);
      const FourierMultiplier& R = *p.t_in.multiplier;
      h.resize(x.rows(), R.r_out);
      fc.lift_coefficients.resize(static_cast<std::size_t>(ctx.patch_count));
      for (int q = 0; q < ctx.patch_count; ++q)
        h.middleRows(static_cast<Eigen::Index>(q) * M, M) = fc.lift_operator->apply(
            R, x.middleRows(static_cast<Eigen::Index>(q) * M, M), &fc.lift_coefficients[q]);
    } else {
      h = x * p.t_in.w_in.transpose();
      ctx.pad = cfg.extension_pad;
      std::vector<int> ext = fc.layout.patch_shape;
      for (int& m : ext) m += 2 * cfg.extension_pad;
      fc.head_operator.emplace(ext, cfg.head_modes);
    }
  }
  fc.lift_input = std::move(x);
  fc.ctx = ctx;
  ctx = rebind(fc);
  check_finite(h, "lift");

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    h = encoder_layer_apply(h, p.layers[l], ctx, cfg.activation, &fc.layers[l]);
    check_finite(h, "encoder layer " + std::to_string(l));
  }
  if (cfg.patched()) h = to_grid_order(h, fc.perm);
  Matrix out = h * p.w_out.transpose();
  fc.hidden = std::move(h);
  if (cfg.smoothing)
    out = smoothing_apply(out, u.grid.shape(), periods_of(u.domain), cfg.smoothing_params);
  check_finite(out, "projection");
  return out;
}

void model_backward(const ModelParameters& p, const ForwardCache& cache, const Matrix& grad_out,
                    ModelParameters& grad) {
  const ModelConfig& cfg = p.config;
  check_finite(grad_out, "loss gradient");
  Matrix g = grad_out;
  if (cfg.smoothing)
    g = smoothing_apply(g, cache.grid.shape(), periods_of(cache.domain), cfg.smoothing_params);
  grad.w_out.noalias() += g.transpose() * cache.hidden;
  Matrix dh = g * p.w_out;
  if (cfg.patched()) dh = to_patch_order(dh, cache.perm);

  const AttentionContext ctx = rebind(cache);
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    dh = encoder_layer_backward(p.layers[l], ctx, cfg.activation, cache.layers[l], dh,
                                &grad.layers[l]);
    check_finite(dh, "backward through encoder layer " + std::to_string(l));
  }

  const Matrix& x = cache.lift_input;
  if (cfg.variant == Variant::ViTNO) {
    const int M = ctx.patch_points;
    for (int q = 0; q < ctx.patch_count; ++q)
      cache.lift_operator->backward(*p.t_in.multiplier, cache.lift_coefficients[q],
                                    dh.middleRows(static_cast<Eigen::Index>(q) * M, M),
                                    &*grad.t_in.multiplier);
  } else if (cfg.d_ic > 0) {
    const Eigen::Index n = x.rows() - 1;
    grad.t_in.w_in.noalias() += dh.bottomRows(n).transpose() * x.bottomRows(n);
    Vector first(x.cols() + cache.ic.size());
    first << x.row(0).transpose(), cache.ic;
    grad.t_in.w_in0.noalias() += dh.row(0).transpose() * first.transpose();
  } else {
    grad.t_in.w_in.noalias() += dh.transpose() * x;
  }
}

SampledFunction tno_forward(const ModelParameters& p, const SampledFunction& u,
                            const QuadratureWeights& w, const Vector& ic) {
  if (p.config.variant != Variant::TNO && p.config.variant != Variant::MinimalUniversal)
    throw std::invalid_argument("tno_forward: parameters are for " +
                                variant_name(p.config.variant));
  return SampledFunction(u.domain, u.grid, model_forward(p, u, ic, &w));
}

SampledFunction vitno_forward(const ModelParameters& p, const SampledFunction& u) {
  if (p.config.variant != Variant::ViTNO)
    throw std::invalid_argument("vitno_forward: parameters are for " +
                                variant_name(p.config.variant));
  return SampledFunction(u.domain, u.grid, model_forward(p, u));
}

SampledFunction fano_forward(const ModelParameters& p, const SampledFunction& u) {
  if (p.config.variant != Variant::FANO)
    throw std::invalid_argument("fano_forward: parameters are for " +
                                variant_name(p.config.variant));
  return SampledFunction(u.domain, u.grid, model_forward(p, u));
}

namespace {

Matrix standardize(const Matrix& x, const Vector& mean, const Vector& stdev) {
  if (mean.size() == 0) return x;
  return ((x.rowwise() - mean.transpose()).array().rowwise() / stdev.transpose().array()).matrix();
}

}  // namespace

Matrix predict(const Model& m, const SampledFunction& u, const Vector& ic,
               const QuadratureWeights* weights, ForwardCache* cache) {
  const Normalizer& n = m.normalizer;
  SampledFunction un = u;
  un.values = standardize(u.values, n.in_mean, n.in_std);
  Vector icn = ic;
  if (n.ic_mean.size() > 0 && ic.size() > 0)
    icn = (ic - n.ic_mean).array() / n.ic_std.array();
  Matrix out = model_forward(m.params, un, icn, weights, cache);
  if (n.out_mean.size() > 0) {
    out.array().rowwise() *= n.out_std.transpose().array();
    out.rowwise() += n.out_mean.transpose();
  }
  return out;
}

Matrix output_grad_to_raw(const Model& m, const Matrix& grad_prediction) {
  if (m.normalizer.out_std.size() == 0) return grad_prediction;
  return (grad_prediction.array().rowwise() * m.normalizer.out_std.transpose().array()).matrix();
}

}  // namespace tnop
