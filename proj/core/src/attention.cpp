#include "tnop/attention.hpp"

#include <cmath>
#include <string>

namespace tnop {

namespace {

void check_head(const PointwiseHead& h, Eigen::Index query_dim, Eigen::Index key_dim) {
  if (h.q.rows() != h.k.rows())
    throw std::invalid_argument("attention: Q and K must share the key dimension");
  if (h.q.cols() != query_dim)
    throw std::invalid_argument("attention: Q expects " + std::to_string(h.q.cols()) +
                                " input channels, got " + std::to_string(query_dim));
  if (h.k.cols() != key_dim || h.v.cols() != key_dim)
    throw std::invalid_argument("attention: K/V expect " + std::to_string(h.k.cols()) +
                                " input channels, got " + std::to_string(key_dim));
}

}  // namespace

Matrix softmax_rows(const Matrix& logits, const Vector& key_weights) {
  const bool weighted = key_weights.size() > 0;
  if (weighted && key_weights.size() != logits.cols())
    throw std::invalid_argument("softmax_rows: weight count does not match key count");
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const double m = logits.row(j).maxCoeff();
    p.row(j) = (logits.row(j).array() - m).exp().matrix();
    if (weighted) p.row(j).array() *= key_weights.transpose().array();
    double s = 0.0;
    for (Eigen::Index k = 0; k < p.cols(); ++k) s += p(j, k);
    p.row(j) /= s;
  }
  return p;
}

Matrix softmax_rows_backward(const Matrix& probs, const Matrix& grad_probs) {
  Matrix g(probs.rows(), probs.cols());
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) dot += probs(j, k) * grad_probs(j, k);
    g.row(j) = (probs.row(j).array() * (grad_probs.row(j).array() - dot)).matrix();
  }
  return g;
}

Matrix attention_kernel(const Matrix& q, const Matrix& k, const Matrix& v,
                        const Vector& key_weights, double scale, Matrix* probs) {
  if (q.cols() != k.cols()) throw std::invalid_argument("attention_kernel: key dimensions differ");
  if (k.rows() != v.rows()) throw std::invalid_argument("attention_kernel: key/value count differ");
  if (k.rows() == 0) throw std::invalid_argument("attention_kernel: empty key set");
  Matrix logits = q * k.transpose();
  if (scale != 1.0) logits *= scale;
  Matrix p = softmax_rows(logits, key_weights);
  Matrix out = p * v;
  if (probs != nullptr) *probs = std::move(p);
  return out;
}

AttentionGrads attention_kernel_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         const Matrix& probs, const Matrix& grad_out,
                                         double scale) {
  AttentionGrads g;
  g.v.noalias() = probs.transpose() * grad_out;
  const Matrix grad_probs = grad_out * v.transpose();
  Matrix dlogits = softmax_rows_backward(probs, grad_probs);
  if (scale != 1.0) dlogits *= scale;
  g.q.noalias() = dlogits * k;
  g.k.noalias() = dlogits.transpose() * q;
  return g;
}

namespace {

Matrix weight_rows(const Matrix& x, int patch_points, const Vector& w) {
  if (w.size() != patch_points)
    throw std::invalid_argument("patched attention: " + std::to_string(w.size()) +
                                " patch weights for patches of " + std::to_string(patch_points) +
                                " points");
  Matrix y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) *= w[r % patch_points];
  return y;
}

using ConstFlat = Eigen::Map<const Matrix>;

}  // namespace

Matrix patched_attention_kernel(const Matrix& q, const Matrix& k, const Matrix& v, int patch_points,
                                const Vector& point_weights, double scale, Matrix* probs) {
  const int M = patch_points;
  if (q.rows() % M != 0 || k.rows() % M != 0 || k.rows() != v.rows())
    throw std::invalid_argument("patched attention: rows are not whole patches");
  if (q.cols() != k.cols()) throw std::invalid_argument("patched attention: key dims differ");
  const Eigen::Index P = q.rows() / M;
  const Eigen::Index O = k.rows() / M;
  const Matrix kw = weight_rows(k, M, point_weights);
  ConstFlat qf(q.data(), P, M * q.cols());
  ConstFlat kf(kw.data(), O, M * k.cols());
  ConstFlat vf(v.data(), O, M * v.cols());
  Matrix logits = qf * kf.transpose();
  if (scale != 1.0) logits *= scale;
  Matrix p = softmax_rows(logits);
  Matrix outf = p * vf;
  Matrix out = Eigen::Map<Matrix>(outf.data(), P * M, v.cols());
  if (probs != nullptr) *probs = std::move(p);
  return out;
}

AttentionGrads patched_attention_kernel_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                                 int patch_points, const Vector& point_weights,
                                                 const Matrix& probs, const Matrix& grad_out,
                                                 double scale) {
  const int M = patch_points;
  const Eigen::Index P = q.rows() / M;
  const Eigen::Index O = k.rows() / M;
  const Matrix kw = weight_rows(k, M, point_weights);
  ConstFlat qf(q.data(), P, M * q.cols());
  ConstFlat kf(kw.data(), O, M * k.cols());
  ConstFlat vf(v.data(), O, M * v.cols());
  ConstFlat gof(grad_out.data(), P, M * grad_out.cols());

  Matrix gvf = probs.transpose() * gof;
  Matrix dlogits = softmax_rows_backward(probs, gof * vf.transpose());
  if (scale != 1.0) dlogits *= scale;
  Matrix gqf = dlogits * kf;
  Matrix gkf = dlogits.transpose() * qf;

  AttentionGrads g;
  g.q = Eigen::Map<Matrix>(gqf.data(), P * M, q.cols());
  g.k = weight_rows(Eigen::Map<Matrix>(gkf.data(), O * M, k.cols()), M, point_weights);
  g.v = Eigen::Map<Matrix>(gvf.data(), O * M, v.cols());
  return g;
}

Matrix discrete_self_attention(const Matrix& u, const PointwiseHead& head, double scale) {
  check_head(head, u.cols(), u.cols());
  return attention_kernel(u * head.q.transpose(), u * head.k.transpose(), u * head.v.transpose(),
                          Vector(), scale);
}

SampledFunction quadrature_self_attention(const SampledFunction& u, const PointwiseHead& head,
                                          const QuadratureWeights& w, double scale) {
  if (w.size() != u.point_count())
    throw std::invalid_argument("quadrature_self_attention: weights do not match the grid");
  check_head(head, u.channels(), u.channels());
  const Matrix& x = u.values;
  Matrix out = attention_kernel(x * head.q.transpose(), x * head.k.transpose(),
                                x * head.v.transpose(), w.weights, scale);
  return SampledFunction(u.domain, u.grid, std::move(out));
}

SampledFunction quadrature_cross_attention(const SampledFunction& u, const SampledFunction& v,
                                           const PointwiseHead& head,
                                           const QuadratureWeights& w_e, double scale) {
  if (w_e.size() != v.point_count())
    throw std::invalid_argument("quadrature_cross_attention: weights do not match E's grid");
  check_head(head, u.channels(), v.channels());
  Matrix out = attention_kernel(u.values * head.q.transpose(), v.values * head.k.transpose(),
                                v.values * head.v.transpose(), w_e.weights, scale);
  return SampledFunction(u.domain, u.grid, std::move(out));
}

Matrix mc_attention_estimate(const Matrix& u_at_queries, const Matrix& u_at_samples,
                             const PointwiseHead& head, double scale) {
  return mc_cross_attention_estimate(u_at_queries, u_at_samples, head, scale);
}

Matrix mc_cross_attention_estimate(const Matrix& u_at_queries, const Matrix& v_at_samples,
                                   const PointwiseHead& head, double scale) {
  if (v_at_samples.rows() == 0) throw std::invalid_argument("mc_attention_estimate: no samples");
  check_head(head, u_at_queries.cols(), v_at_samples.cols());
  return attention_kernel(u_at_queries * head.q.transpose(), v_at_samples * head.k.transpose(),
                          v_at_samples * head.v.transpose(), Vector(), scale);
}

QuadratureWeights patch_cell_weights(const PatchedFunction& p) {
  QuadratureWeights w;
  w.weights = Vector::Constant(p.patch_points(), p.patch_domain.volume() / p.patch_points());
  return w;
}

Matrix apply_patch_map(const AttentionHeadParams& head, int which, const Matrix& values,
                       const PatchLayout& layout) {
  if (const auto* pw = std::get_if<PointwiseHead>(&head)) {
    const Matrix& W = which == 0 ? pw->q : which == 1 ? pw->k : pw->v;
    if (W.cols() != values.cols())
      throw std::invalid_argument("patched attention: head expects " + std::to_string(W.cols()) +
                                  " channels, got " + std::to_string(values.cols()));
    return values * W.transpose();
  }
  const auto& oh = std::get<OperatorHead>(head);
  const FourierMultiplier& R = which == 0 ? oh.q : which == 1 ? oh.k : oh.v;
  SpectralOperator op(layout.patch_shape, R.kmax);
  const int M = layout.patch_points();
  const Eigen::Index P = values.rows() / M;
  Matrix out(values.rows(), R.r_out);
  for (Eigen::Index p = 0; p < P; ++p)
    out.middleRows(p * M, M) = op.apply(R, values.middleRows(p * M, M));
  return out;
}

PatchedFunction patched_self_attention(const PatchedFunction& u, const AttentionHeadParams& head,
                                       const QuadratureWeights& patch_weights, double scale) {
  return patched_cross_attention(u, u, head, patch_weights, scale);
}

PatchedFunction patched_cross_attention(const PatchedFunction& u, const PatchedFunction& v,
                                        const AttentionHeadParams& head,
                                        const QuadratureWeights& patch_weights, double scale) {
  if (u.layout.patch_shape != v.layout.patch_shape)
    throw std::invalid_argument("patched_cross_attention: patch grids differ");
  const double tol = 1e-12 * u.patch_domain.volume();
  if (u.patch_domain.dim() != v.patch_domain.dim() ||
      std::abs(u.patch_domain.volume() - v.patch_domain.volume()) > tol)
    throw std::invalid_argument("patched_cross_attention: patch domains are not congruent");
  const Matrix q = apply_patch_map(head, 0, u.values, u.layout);
  const Matrix k = apply_patch_map(head, 1, v.values, v.layout);
  const Matrix vv = apply_patch_map(head, 2, v.values, v.layout);
  PatchedFunction out = u;
  out.values =
      patched_attention_kernel(q, k, vv, u.patch_points(), patch_weights.weights, scale);
  return out;
}

}  // namespace tnop
