#pragma once

#include <variant>

#include "tnop/grid.hpp"
#include "tnop/patch.hpp"
#include "tnop/spectral.hpp"

namespace tnop {

/// Pointwise query/key/value maps: q, k are (d_K x d_in), v is (d_V x d_in).
struct PointwiseHead {
  Matrix q;
  Matrix k;
  Matrix v;

  int key_dim() const { return static_cast<int>(q.rows()); }
  int value_dim() const { return static_cast<int>(v.rows()); }
  int input_dim() const { return static_cast<int>(q.cols()); }
};

/// Operator-valued query/key/value maps acting on whole patch functions.
struct OperatorHead {
  FourierMultiplier q;
  FourierMultiplier k;
  FourierMultiplier v;
};

using AttentionHeadParams = std::variant<PointwiseHead, OperatorHead>;

/// Row-wise softmax against a positive key measure:
///   P_jk = w_k exp(l_jk - m_j) / sum_l w_l exp(l_jl - m_j),  m_j = max_k l_jk.
/// An empty weight vector means unit weights.
Matrix softmax_rows(const Matrix& logits, const Vector& key_weights = {});

/// Softmax adjoint: dL/dlogits given P and dL/dP.
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& grad_probs);

/// Attention over pre-projected queries (Nq x d_K), keys (Nk x d_K) and values
/// (Nk x d_V): out = softmax_w(scale q k^T) v. `probs` receives the probability matrix.
Matrix attention_kernel(const Matrix& q, const Matrix& k, const Matrix& v,
                        const Vector& key_weights, double scale, Matrix* probs = nullptr);

struct AttentionGrads {
  Matrix q;
  Matrix k;
  Matrix v;
};

AttentionGrads attention_kernel_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         const Matrix& probs, const Matrix& grad_out,
                                         double scale);

/// Patch-indexed attention. q is (P*M x d_K), k is (O*M x d_K), v is (O*M x d_V); the
/// logit between patches j and k is scale * sum_i w_i q_j(x_i) . k_k(x_i), and the
/// probability over key patches is uniform-weighted.
Matrix patched_attention_kernel(const Matrix& q, const Matrix& k, const Matrix& v, int patch_points,
                                const Vector& point_weights, double scale,
                                Matrix* probs = nullptr);

AttentionGrads patched_attention_kernel_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                                 int patch_points, const Vector& point_weights,
                                                 const Matrix& probs, const Matrix& grad_out,
                                                 double scale);

/// softmax(u Q^T K u^T) u V^T with unit key weights.
Matrix discrete_self_attention(const Matrix& u, const PointwiseHead& head, double scale = 1.0);

/// Quadrature-weighted continuum self-attention; output lives on u's grid.
SampledFunction quadrature_self_attention(const SampledFunction& u, const PointwiseHead& head,
                                          const QuadratureWeights& w, double scale = 1.0);

/// Cross-attention: queries from u (on D), keys and values from v (on E).
SampledFunction quadrature_cross_attention(const SampledFunction& u, const SampledFunction& v,
                                           const PointwiseHead& head,
                                           const QuadratureWeights& w_e, double scale = 1.0);

/// Monte-Carlo estimator of continuum self-attention from values at i.i.d. uniform
/// samples; each row of the result corresponds to a row of `u_at_queries`.
Matrix mc_attention_estimate(const Matrix& u_at_queries, const Matrix& u_at_samples,
                             const PointwiseHead& head, double scale = 1.0);

/// Monte-Carlo estimator of cross-attention, with v sampled i.i.d. on E.
Matrix mc_cross_attention_estimate(const Matrix& u_at_queries, const Matrix& v_at_samples,
                                   const PointwiseHead& head, double scale = 1.0);

/// Equal cell weights |D'|/M on the patch grid.
QuadratureWeights patch_cell_weights(const PatchedFunction& p);

/// Applies the head's query/key/value maps patch by patch; returns (rows x out_dim).
Matrix apply_patch_map(const AttentionHeadParams& head, int which, const Matrix& values,
                       const PatchLayout& layout);

PatchedFunction patched_self_attention(const PatchedFunction& u, const AttentionHeadParams& head,
                                       const QuadratureWeights& patch_weights,
                                       double scale = 1.0);

PatchedFunction patched_cross_attention(const PatchedFunction& u, const PatchedFunction& v,
                                        const AttentionHeadParams& head,
                                        const QuadratureWeights& patch_weights,
                                        double scale = 1.0);

}  // namespace tnop
