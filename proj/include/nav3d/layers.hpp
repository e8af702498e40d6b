#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nav3d/rng.hpp"
#include "nav3d/tensor.hpp"

namespace nav3d::nn {

// ---------------------------------------------------------------------------
// Fully connected: y = W x + b, W shaped [out, in].

template <typename S>
void fc_forward(const Tensor<S>& W, const Tensor<S>& b, const S* x, S* y) {
  const int out = W.shape[0], in = W.shape[1];
  for (int o = 0; o < out; ++o) {
    S acc = b[o];
    const S* row = W.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// Accumulates into dW/db/dx (callers zero them once per batch).
template <typename S>
void fc_backward(const Tensor<S>& W, const S* x, const S* dy, Tensor<S>& dW, Tensor<S>& db,
                 S* dx) {
  const int out = W.shape[0], in = W.shape[1];
  for (int o = 0; o < out; ++o) {
    const S g = dy[o];
    db[o] += g;
    S* drow = dW.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) drow[i] += g * x[i];
  }
  if (dx != nullptr) {
    for (int o = 0; o < out; ++o) {
      const S g = dy[o];
      const S* row = W.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) dx[i] += g * row[i];
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU.

template <typename S>
void relu_inplace(S* x, int n) {
  for (int i = 0; i < n; ++i) {
    if (x[i] < S(0)) x[i] = S(0);
  }
}

// pre holds pre-activation values; masks the incoming gradient in place.
template <typename S>
void relu_backward(const S* pre, S* grad, int n) {
  for (int i = 0; i < n; ++i) {
    if (pre[i] <= S(0)) grad[i] = S(0);
  }
}

// ---------------------------------------------------------------------------
// Valid (no padding) 2D cross-correlation via im2col.
// input [Cin, H, W]; kernel [Cout, Cin, K, K]; output [Cout, Ho, Wo].

struct ConvDims {
  int cin = 0, h = 0, w = 0;
  int cout = 0, k = 0, stride = 1;
  int ho = 0, wo = 0;

  ConvDims() = default;
  ConvDims(int cin_, int h_, int w_, int cout_, int k_, int stride_)
      : cin(cin_), h(h_), w(w_), cout(cout_), k(k_), stride(stride_) {
    if ((h - k) % stride != 0 || (w - k) % stride != 0 || h < k || w < k) {
      throw std::invalid_argument("conv2d: incompatible geometry");
    }
    ho = (h - k) / stride + 1;
    wo = (w - k) / stride + 1;
  }
  int patch() const { return cin * k * k; }
  int positions() const { return ho * wo; }
};

// col is [patch, positions], row-major.
template <typename S>
void im2col(const S* input, const ConvDims& d, S* col) {
  const int P = d.positions();
  for (int c = 0; c < d.cin; ++c) {
    const S* plane = input + static_cast<std::size_t>(c) * d.h * d.w;
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        S* row = col + (static_cast<std::size_t>(c) * d.k * d.k + ky * d.k + kx) * P;
        for (int oy = 0; oy < d.ho; ++oy) {
          const S* src = plane + (oy * d.stride + ky) * d.w + kx;
          for (int ox = 0; ox < d.wo; ++ox) {
            row[oy * d.wo + ox] = src[ox * d.stride];
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const S* col, const ConvDims& d, S* dinput) {
  const int P = d.positions();
  for (int c = 0; c < d.cin; ++c) {
    S* plane = dinput + static_cast<std::size_t>(c) * d.h * d.w;
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        const S* row = col + (static_cast<std::size_t>(c) * d.k * d.k + ky * d.k + kx) * P;
        for (int oy = 0; oy < d.ho; ++oy) {
          S* dst = plane + (oy * d.stride + ky) * d.w + kx;
          for (int ox = 0; ox < d.wo; ++ox) {
            dst[ox * d.stride] += row[oy * d.wo + ox];
          }
        }
      }
    }
  }
}

// out[co][p] = sum_r kernel[co][r] * col[r][p] + bias[co]
template <typename S>
void conv2d_forward_col(const Tensor<S>& kernel, const Tensor<S>& bias, const S* col,
                        const ConvDims& d, S* out) {
  const int R = d.patch(), P = d.positions();
  for (int co = 0; co < d.cout; ++co) {
    S* orow = out + static_cast<std::size_t>(co) * P;
    for (int p = 0; p < P; ++p) orow[p] = bias[co];
    const S* krow = kernel.data() + static_cast<std::size_t>(co) * R;
    for (int r = 0; r < R; ++r) {
      const S kv = krow[r];
      if (kv == S(0)) continue;
      const S* crow = col + static_cast<std::size_t>(r) * P;
      for (int p = 0; p < P; ++p) orow[p] += kv * crow[p];
    }
  }
}

template <typename S>
void conv2d_forward(const S* input, const Tensor<S>& kernel, const Tensor<S>& bias,
                    const ConvDims& d, S* out, std::vector<S>* col_cache = nullptr) {
  std::vector<S> local;
  std::vector<S>& col = col_cache != nullptr ? *col_cache : local;
  col.resize(static_cast<std::size_t>(d.patch()) * d.positions());
  im2col(input, d, col.data());
  conv2d_forward_col(kernel, bias, col.data(), d, out);
}

// dout [Cout, Ho, Wo]; col is the cached im2col of the forward input.
// Accumulates into dkernel/dbias; writes dinput if non-null (accumulates).
template <typename S>
void conv2d_backward(const Tensor<S>& kernel, const S* col, const S* dout, const ConvDims& d,
                     Tensor<S>& dkernel, Tensor<S>& dbias, S* dinput,
                     std::vector<S>& dcol_scratch) {
  const int R = d.patch(), P = d.positions();
  for (int co = 0; co < d.cout; ++co) {
    const S* grow = dout + static_cast<std::size_t>(co) * P;
    S acc = S(0);
    for (int p = 0; p < P; ++p) acc += grow[p];
    dbias[co] += acc;
    S* dkrow = dkernel.data() + static_cast<std::size_t>(co) * R;
    for (int r = 0; r < R; ++r) {
      const S* crow = col + static_cast<std::size_t>(r) * P;
      S s = S(0);
      for (int p = 0; p < P; ++p) s += grow[p] * crow[p];
      dkrow[r] += s;
    }
  }
  if (dinput != nullptr) {
    dcol_scratch.assign(static_cast<std::size_t>(R) * P, S(0));
    for (int co = 0; co < d.cout; ++co) {
      const S* grow = dout + static_cast<std::size_t>(co) * P;
      const S* krow = kernel.data() + static_cast<std::size_t>(co) * R;
      for (int r = 0; r < R; ++r) {
        const S kv = krow[r];
        if (kv == S(0)) continue;
        S* drow = dcol_scratch.data() + static_cast<std::size_t>(r) * P;
        for (int p = 0; p < P; ++p) drow[p] += kv * grow[p];
      }
    }
    col2im_add(dcol_scratch.data(), d, dinput);
  }
}

// ---------------------------------------------------------------------------
// LSTM cell. Weights [4H, D+H] and bias [4H], gate row blocks ordered
// i, f, g, o. Input to the matmul is [x; h_prev].

template <typename S>
struct LstmCache {
  std::vector<S> zcat;      // [D+H]
  std::vector<S> gates;     // [4H] post-nonlinearity: i, f, g, o
  std::vector<S> c_prev;    // [H]
  std::vector<S> c;         // [H]
  std::vector<S> tanh_c;    // [H]
};

template <typename S>
inline S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <typename S>
void lstm_forward(const Tensor<S>& W, const Tensor<S>& b, const S* x, int dim_x,
                  const S* h_prev, const S* c_prev, int H, S* h_out, S* c_out,
                  LstmCache<S>* cache) {
  const int D = dim_x;
  std::vector<S> zcat(D + H);
  for (int i = 0; i < D; ++i) zcat[i] = x[i];
  for (int i = 0; i < H; ++i) zcat[D + i] = h_prev[i];

  std::vector<S> pre(4 * H);
  fc_forward(W, b, zcat.data(), pre.data());

  std::vector<S> gates(4 * H);
  for (int j = 0; j < H; ++j) {
    const S gi = sigmoid(pre[j]);
    const S gf = sigmoid(pre[H + j]);
    const S gg = std::tanh(pre[2 * H + j]);
    const S go = sigmoid(pre[3 * H + j]);
    gates[j] = gi;
    gates[H + j] = gf;
    gates[2 * H + j] = gg;
    gates[3 * H + j] = go;
    c_out[j] = gf * c_prev[j] + gi * gg;
    h_out[j] = go * std::tanh(c_out[j]);
  }
  if (cache != nullptr) {
    cache->zcat = std::move(zcat);
    cache->gates = std::move(gates);
    cache->c_prev.assign(c_prev, c_prev + H);
    cache->c.assign(c_out, c_out + H);
    cache->tanh_c.resize(H);
    for (int j = 0; j < H; ++j) cache->tanh_c[j] = std::tanh(cache->c[j]);
  }
}

// dh/dc are gradients flowing into this step's outputs; on return dh_prev and
// dc_prev receive gradients for the previous state, dx for the input.
// dW/db accumulate.
template <typename S>
void lstm_backward(const Tensor<S>& W, const LstmCache<S>& cache, int dim_x, int H, const S* dh,
                   const S* dc_in, Tensor<S>& dW, Tensor<S>& db, S* dx, S* dh_prev, S* dc_prev) {
  const int D = dim_x;
  std::vector<S> dpre(4 * H);
  for (int j = 0; j < H; ++j) {
    const S gi = cache.gates[j];
    const S gf = cache.gates[H + j];
    const S gg = cache.gates[2 * H + j];
    const S go = cache.gates[3 * H + j];
    const S tc = cache.tanh_c[j];
    const S dc = dc_in[j] + dh[j] * go * (S(1) - tc * tc);
    const S d_o = dh[j] * tc;
    const S d_i = dc * gg;
    const S d_g = dc * gi;
    const S d_f = dc * cache.c_prev[j];
    dc_prev[j] = dc * gf;
    dpre[j] = d_i * gi * (S(1) - gi);
    dpre[H + j] = d_f * gf * (S(1) - gf);
    dpre[2 * H + j] = d_g * (S(1) - gg * gg);
    dpre[3 * H + j] = d_o * go * (S(1) - go);
  }
  std::vector<S> dzcat(D + H, S(0));
  fc_backward(W, cache.zcat.data(), dpre.data(), dW, db, dzcat.data());
  for (int i = 0; i < D; ++i) dx[i] += dzcat[i];
  for (int i = 0; i < H; ++i) dh_prev[i] = dzcat[D + i];
}

// ---------------------------------------------------------------------------
// Dueling head combination: Q_a = V + A_a - mean(A).

template <typename S>
void dueling_combine(S V, const S* A, int n, S* Q) {
  S mean = S(0);
  for (int i = 0; i < n; ++i) mean += A[i];
  mean /= S(n);
  for (int i = 0; i < n; ++i) Q[i] = V + A[i] - mean;
}

template <typename S>
void dueling_backward(const S* dQ, int n, S* dV, S* dA) {
  S sum = S(0);
  for (int i = 0; i < n; ++i) sum += dQ[i];
  *dV += sum;
  const S m = sum / S(n);
  for (int i = 0; i < n; ++i) dA[i] += dQ[i] - m;
}

// ---------------------------------------------------------------------------
// Orthogonal (semi-orthogonal for non-square) initialization via Householder
// QR of a Gaussian matrix; the smaller-dimension Gram matrix is the identity.

template <typename S>
Tensor<S> orthogonal_init(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("orthogonal_init: dims must be >= 1");
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);

  Rng rng(seed);
  // Column-major n x m Gaussian.
  std::vector<double> A(static_cast<std::size_t>(n) * m);
  for (auto& a : A) a = rng.normal();

  auto at = [&](int i, int j) -> double& { return A[static_cast<std::size_t>(j) * n + i]; };

  std::vector<double> betas(m, 0.0);
  std::vector<double> diag_sign(m, 1.0);
  for (int j = 0; j < m; ++j) {
    // Householder vector for column j below the diagonal.
    double norm = 0.0;
    for (int i = j; i < n; ++i) norm += at(i, j) * at(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      betas[j] = 0.0;
      diag_sign[j] = 1.0;
      continue;
    }
    const double alpha = at(j, j) >= 0.0 ? -norm : norm;
    diag_sign[j] = alpha < 0.0 ? -1.0 : 1.0;
    const double v0 = at(j, j) - alpha;
    at(j, j) = alpha;
    // Store the (unnormalized) tail of v in the column; v = [1, tail].
    for (int i = j + 1; i < n; ++i) at(i, j) /= v0;
    betas[j] = -v0 / alpha;
    // Apply H = I - beta v v^T to the remaining columns.
    for (int k = j + 1; k < m; ++k) {
      double s = at(j, k);
      for (int i = j + 1; i < n; ++i) s += at(i, j) * at(i, k);
      s *= betas[j];
      at(j, k) -= s;
      for (int i = j + 1; i < n; ++i) at(i, k) -= s * at(i, j);
    }
  }

  // Form the thin Q by applying H_0..H_{m-1} to the first m identity columns.
  std::vector<double> Q(static_cast<std::size_t>(n) * m, 0.0);
  auto qt = [&](int i, int j) -> double& { return Q[static_cast<std::size_t>(j) * n + i]; };
  for (int j = 0; j < m; ++j) qt(j, j) = 1.0;
  for (int j = m - 1; j >= 0; --j) {
    if (betas[j] == 0.0) continue;
    for (int k = 0; k < m; ++k) {
      double s = qt(j, k);
      for (int i = j + 1; i < n; ++i) s += at(i, j) * qt(i, k);
      s *= betas[j];
      qt(j, k) -= s;
      for (int i = j + 1; i < n; ++i) qt(i, k) -= s * at(i, j);
    }
  }
  // Make the factorization unique: force positive R diagonal.
  for (int j = 0; j < m; ++j) {
    if (diag_sign[j] < 0.0) {
      for (int i = 0; i < n; ++i) qt(i, j) = -qt(i, j);
    }
  }

  Tensor<S> out({rows, cols});
  if (rows >= cols) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(i) * cols + j] =
          static_cast<S>(qt(i, j));
    }
  } else {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(i) * cols + j] =
          static_cast<S>(qt(j, i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam with bias correction; moments live alongside the parameters.

template <typename S>
struct AdamState {
  Params<S> m;
  Params<S> v;
  std::int64_t t = 0;

  static AdamState like(const Params<S>& params) {
    AdamState st;
    for (const auto& [name, p] : params) {
      st.m.emplace(name, Tensor<S>(p.shape));
      st.v.emplace(name, Tensor<S>(p.shape));
    }
    return st;
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
double global_norm(const Params<S>& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
    }
  }
  return std::sqrt(sq);
}

// Scales the whole gradient set so its global L2 norm is at most max_norm.
template <typename S>
void clip_by_global_norm(Params<S>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const S scale = static_cast<S>(max_norm / norm);
  for (auto& [name, g] : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
  }
}

template <typename S>
void adam_step(Params<S>& params, const Params<S>& grads, AdamState<S>& state,
               const AdamConfig& cfg = {}) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : params) {
    const Tensor<S>& g = grads.at(name);
    Tensor<S>& m = state.m.at(name);
    Tensor<S>& v = state.v.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<S>(mi);
      v[i] = static_cast<S>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p[i] = static_cast<S>(static_cast<double>(p[i]) -
                            cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace nav3d::nn
