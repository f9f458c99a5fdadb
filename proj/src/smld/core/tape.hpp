#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>
#include <utility>
#include <vector>

#include "smld/core/error.hpp"
#include "smld/core/fft.hpp"
#include "smld/core/tensor.hpp"

namespace smld {

template <typename T>
struct Val {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over a fixed set of primitives. Nodes are appended in
// execution order, which is already a topological order, so the backward
// sweep is a single reverse pass. A tape is confined to one thread and is
// rebuilt per batch; parameters enter as leaves each time.
template <typename T>
class Tape {
 public:
  using V = Val<T>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  V leaf(Tensor<T> t, bool requires_grad = false) {
    return push(std::move(t), requires_grad, nullptr);
  }

  V constant(Tensor<T> t) { return leaf(std::move(t), false); }

  const Tensor<T>& value(V v) const { return node(v).out; }

  bool has_grad(V v) const {
    return v.id >= 0 && static_cast<size_t>(v.id) < grads_.size() &&
           !grads_[static_cast<size_t>(v.id)].v.empty();
  }

  // Gradient of the last backward() target w.r.t. v; zeros when v was not
  // reached (e.g. constants or unused parameters).
  Tensor<T> grad(V v) const {
    if (has_grad(v)) return grads_[static_cast<size_t>(v.id)];
    return Tensor<T>(node(v).out.shape);
  }

  void backward(V loss) {
    if (node(loss).out.numel() != 1) {
      fail_numeric("backward: loss must be a scalar node");
    }
    grads_.assign(nodes_.size(), Tensor<T>{});
    grads_[static_cast<size_t>(loss.id)] = scalar_tensor<T>(T(1));
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!grads_[static_cast<size_t>(i)].v.empty() && n.back) n.back(*this);
    }
  }

  size_t size() const { return nodes_.size(); }

  void set_check_finite(bool on) { check_finite_ = on; }

  // ---- primitives ----

  V add(V a, V b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor<T> out = ta;
    for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] += tb.v[static_cast<size_t>(i)];
    return push_op(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<T>& g) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  V sub(V a, V b) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor<T> out = ta;
    for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] -= tb.v[static_cast<size_t>(i)];
    return push_op(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<T>& g) {
      t.accumulate(a, g);
      Tensor<T> neg = g;
      for (auto& x : neg.v) x = -x;
      t.accumulate(b, neg);
    });
  }

  V scale(V a, double c) {
    Tensor<T> out = value(a);
    for (auto& x : out.v) x = static_cast<T>(x * c);
    return push_op(std::move(out), {a}, [a, c](Tape& t, const Tensor<T>& g) {
      Tensor<T> ga = g;
      for (auto& x : ga.v) x = static_cast<T>(x * c);
      t.accumulate(a, ga);
    });
  }

  // out = a * s[index], s a vector node (head-importance weighting)
  V mul_scalar_at(V a, V s, int index) {
    const Tensor<T>& ts = value(s);
    if (index < 0 || index >= ts.numel()) fail_data("mul_scalar_at: index out of range");
    T sv = ts.v[static_cast<size_t>(index)];
    Tensor<T> out = value(a);
    for (auto& x : out.v) x *= sv;
    return push_op(std::move(out), {a, s}, [a, s, index, sv](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& ta = t.value(a);
      Tensor<T> ga = g;
      for (auto& x : ga.v) x *= sv;
      t.accumulate(a, ga);
      T dot = T(0);
      for (int64_t i = 0; i < g.numel(); ++i) dot += g.v[static_cast<size_t>(i)] * ta.v[static_cast<size_t>(i)];
      Tensor<T> gs(t.value(s).shape);
      gs.v[static_cast<size_t>(index)] = dot;
      t.accumulate(s, gs);
    });
  }

  V reshape(V a, std::vector<int> new_shape) {
    const Tensor<T>& ta = value(a);
    Tensor<T> out = Tensor<T>::from(std::move(new_shape), ta.v);
    std::vector<int> old_shape = ta.shape;
    return push_op(std::move(out), {a}, [a, old_shape](Tape& t, const Tensor<T>& g) {
      t.accumulate(a, Tensor<T>::from(old_shape, g.v));
    });
  }

  // 2-D matmul; trans_b selects a [n x k] B used as B^T.
  V matmul(V a, V b, bool trans_b = false) {
    const Tensor<T>& ta = value(a);
    const Tensor<T>& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2) fail_data("matmul: expected 2-D operands");
    int m = ta.dim(0), k = ta.dim(1);
    int bk = trans_b ? tb.dim(1) : tb.dim(0);
    int n = trans_b ? tb.dim(0) : tb.dim(1);
    if (bk != k) {
      fail_data("matmul: inner dimensions " + std::to_string(k) + " vs " +
                std::to_string(bk) + " do not match");
    }
    Tensor<T> out({m, n});
    gemm(ta.data(), tb.data(), out.data(), m, n, k, trans_b);
    return push_op(std::move(out), {a, b}, [a, b, m, n, k, trans_b](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& av = t.value(a);
      const Tensor<T>& bv = t.value(b);
      // dA = g @ B (or g @ B when B given transposed: dA = g @ B_asstored)
      Tensor<T> ga({m, k});
      if (!trans_b) {
        // dA[m,k] = g[m,n] * B^T[n,k]
        gemm(g.data(), bv.data(), ga.data(), m, k, n, /*trans_b=*/true);
      } else {
        // B stored [n,k]; dA[m,k] = g[m,n] * B[n,k]
        gemm(g.data(), bv.data(), ga.data(), m, k, n, /*trans_b=*/false);
      }
      t.accumulate(a, ga);
      if (!trans_b) {
        // dB[k,n] = A^T[k,m] * g[m,n]
        Tensor<T> gb({k, n});
        gemm_at(av.data(), g.data(), gb.data(), k, n, m);
        t.accumulate(b, gb);
      } else {
        // B stored [n,k]; dB[n,k] = g^T[n,m] * A[m,k]
        Tensor<T> gb({n, k});
        gemm_at(g.data(), av.data(), gb.data(), n, k, m);
        t.accumulate(b, gb);
      }
    });
  }

  // y = x @ w + bias, x [B,I], w [I,O], bias [O]
  V dense(V x, V w, V bias) {
    const Tensor<T>& tx = value(x);
    const Tensor<T>& tw = value(w);
    const Tensor<T>& tb = value(bias);
    if (tx.ndim() != 2 || tw.ndim() != 2 || tb.ndim() != 1) {
      fail_data("dense: expected x [B,I], w [I,O], bias [O]");
    }
    int batch = tx.dim(0), in = tx.dim(1), out_dim = tw.dim(1);
    if (tw.dim(0) != in) {
      fail_data("dense: x inner dim " + std::to_string(in) + " does not match w rows " +
                std::to_string(tw.dim(0)));
    }
    if (tb.dim(0) != out_dim) fail_data("dense: bias length does not match w cols");
    Tensor<T> out({batch, out_dim});
    gemm(tx.data(), tw.data(), out.data(), batch, out_dim, in, false);
    for (int i = 0; i < batch; ++i)
      for (int j = 0; j < out_dim; ++j) out.at(i, j) += tb.v[static_cast<size_t>(j)];
    return push_op(std::move(out), {x, w, bias},
                   [x, w, bias, batch, in, out_dim](Tape& t, const Tensor<T>& g) {
                     const Tensor<T>& xv = t.value(x);
                     const Tensor<T>& wv = t.value(w);
                     Tensor<T> gx({batch, in});
                     gemm(g.data(), wv.data(), gx.data(), batch, in, out_dim, /*trans_b=*/true);
                     t.accumulate(x, gx);
                     Tensor<T> gw({in, out_dim});
                     gemm_at(xv.data(), g.data(), gw.data(), in, out_dim, batch);
                     t.accumulate(w, gw);
                     Tensor<T> gb({out_dim});
                     for (int i = 0; i < batch; ++i)
                       for (int j = 0; j < out_dim; ++j) gb.v[static_cast<size_t>(j)] += g.at(i, j);
                     t.accumulate(bias, gb);
                   });
  }

  // Cross-correlation (no kernel flip), zero padding.
  // x [B,Cin,L], w [Cout,Cin,K], bias [Cout] -> [B,Cout,Lout]
  V conv1d(V x, V w, V bias, int stride, int pad) {
    const Tensor<T>& tx = value(x);
    const Tensor<T>& tw = value(w);
    const Tensor<T>& tb = value(bias);
    if (tx.ndim() != 3 || tw.ndim() != 3 || tb.ndim() != 1) {
      fail_data("conv1d: expected x [B,Cin,L], w [Cout,Cin,K], bias [Cout]");
    }
    if (stride < 1) fail_data("conv1d: stride must be >= 1");
    if (pad < 0) fail_data("conv1d: negative padding");
    const int batch = tx.dim(0), cin = tx.dim(1), len = tx.dim(2);
    const int cout = tw.dim(0), ker = tw.dim(2);
    if (tw.dim(1) != cin) fail_data("conv1d: kernel channel count does not match input");
    if (tb.dim(0) != cout) fail_data("conv1d: bias length does not match output channels");
    const int lout = (len + 2 * pad - ker) / stride + 1;
    if (ker > len + 2 * pad || lout < 1) {
      fail_data("conv1d: kernel " + std::to_string(ker) + " does not fit input length " +
                std::to_string(len) + " with pad " + std::to_string(pad));
    }
    Tensor<T> out({batch, cout, lout});
    for (int b = 0; b < batch; ++b) {
      for (int co = 0; co < cout; ++co) {
        T* y = &out.at(b, co, 0);
        T bv = tb.v[static_cast<size_t>(co)];
        for (int lo = 0; lo < lout; ++lo) y[lo] = bv;
        for (int ci = 0; ci < cin; ++ci) {
          const T* xs = &tx.at(b, ci, 0);
          const T* ws = &tw.at(co, ci, 0);
          for (int k = 0; k < ker; ++k) {
            T wk = ws[k];
            if (wk == T(0)) continue;
            int off = k - pad;
            // valid lo range: 0 <= lo*stride + off < len
            int lo_begin = off < 0 ? (-off + stride - 1) / stride : 0;
            int lo_end = off > len - 1 ? 0 : std::min(lout, (len - 1 - off) / stride + 1);
            const T* xk = xs + off;
            for (int lo = lo_begin; lo < lo_end; ++lo) y[lo] += wk * xk[static_cast<int64_t>(lo) * stride];
          }
        }
      }
    }
    return push_op(std::move(out), {x, w, bias},
                   [x, w, bias, stride, pad, batch, cin, len, cout, ker, lout](
                       Tape& t, const Tensor<T>& g) {
                     const Tensor<T>& xv = t.value(x);
                     const Tensor<T>& wv = t.value(w);
                     if (t.wants_grad(x)) {
                       Tensor<T> gx({batch, cin, len});
                       for (int b = 0; b < batch; ++b)
                         for (int co = 0; co < cout; ++co) {
                           const T* gy = &g.at(b, co, 0);
                           for (int ci = 0; ci < cin; ++ci) {
                             T* gxs = &gx.at(b, ci, 0);
                             const T* ws = &wv.at(co, ci, 0);
                             for (int k = 0; k < ker; ++k) {
                               T wk = ws[k];
                               if (wk == T(0)) continue;
                               int off = k - pad;
                               for (int lo = 0; lo < lout; ++lo) {
                                 int i = lo * stride + off;
                                 if (i >= 0 && i < len) gxs[i] += wk * gy[lo];
                               }
                             }
                           }
                         }
                       t.accumulate(x, gx);
                     }
                     if (t.wants_grad(w)) {
                       Tensor<T> gw({cout, cin, ker});
                       for (int b = 0; b < batch; ++b)
                         for (int co = 0; co < cout; ++co) {
                           const T* gy = &g.at(b, co, 0);
                           for (int ci = 0; ci < cin; ++ci) {
                             const T* xs = &xv.at(b, ci, 0);
                             T* gws = &gw.at(co, ci, 0);
                             for (int k = 0; k < ker; ++k) {
                               int off = k - pad;
                               T acc = T(0);
                               for (int lo = 0; lo < lout; ++lo) {
                                 int i = lo * stride + off;
                                 if (i >= 0 && i < len) acc += xs[i] * gy[lo];
                               }
                               gws[k] += acc;
                             }
                           }
                         }
                       t.accumulate(w, gw);
                     }
                     if (t.wants_grad(bias)) {
                       Tensor<T> gb({cout});
                       for (int b = 0; b < batch; ++b)
                         for (int co = 0; co < cout; ++co) {
                           const T* gy = &g.at(b, co, 0);
                           T acc = T(0);
                           for (int lo = 0; lo < lout; ++lo) acc += gy[lo];
                           gb.v[static_cast<size_t>(co)] += acc;
                         }
                       t.accumulate(bias, gb);
                     }
                   });
  }

  V relu(V a) {
    Tensor<T> out = value(a);
    for (auto& x : out.v) x = x > T(0) ? x : T(0);
    return push_op(std::move(out), {a}, [a](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga = g;
      for (int64_t i = 0; i < ga.numel(); ++i)
        if (xv.v[static_cast<size_t>(i)] <= T(0)) ga.v[static_cast<size_t>(i)] = T(0);
      t.accumulate(a, ga);
    });
  }

  // x * sigmoid(x): smooth hard-swish-shaped activation
  V silu(V a) {
    const Tensor<T>& ta = value(a);
    Tensor<T> out = ta;
    for (auto& x : out.v) {
      double s = sigmoid(static_cast<double>(x));
      x = static_cast<T>(static_cast<double>(x) * s);
    }
    return push_op(std::move(out), {a}, [a](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga = g;
      for (int64_t i = 0; i < ga.numel(); ++i) {
        double x = static_cast<double>(xv.v[static_cast<size_t>(i)]);
        double s = sigmoid(x);
        ga.v[static_cast<size_t>(i)] =
            static_cast<T>(static_cast<double>(ga.v[static_cast<size_t>(i)]) * (s * (1.0 + x * (1.0 - s))));
      }
      t.accumulate(a, ga);
    });
  }

  // Max-subtracted softmax along `axis`.
  V softmax(V a, int axis) {
    const Tensor<T>& ta = value(a);
    if (axis < 0 || axis >= ta.ndim()) fail_data("softmax: axis out of range");
    auto [outer, n, inner] = axis_split(ta.shape, axis);
    Tensor<T> out = ta;
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        T* base = out.data() + o * n * inner + in;
        T mx = base[0];
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, base[j * inner]);
        double denom = 0;
        for (int64_t j = 0; j < n; ++j) {
          double e = std::exp(static_cast<double>(base[j * inner] - mx));
          base[j * inner] = static_cast<T>(e);
          denom += e;
        }
        for (int64_t j = 0; j < n; ++j)
          base[j * inner] = static_cast<T>(static_cast<double>(base[j * inner]) / denom);
      }
    }
    return push_op(std::move(out), {a}, [a, axis, self = next_id()](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& p = t.nodes_[static_cast<size_t>(self)].out;
      auto [outer, n, inner] = axis_split(p.shape, axis);
      Tensor<T> ga(p.shape);
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
          const int64_t base = o * n * inner + in;
          double dot = 0;
          for (int64_t j = 0; j < n; ++j)
            dot += static_cast<double>(g.v[static_cast<size_t>(base + j * inner)]) *
                   static_cast<double>(p.v[static_cast<size_t>(base + j * inner)]);
          for (int64_t j = 0; j < n; ++j) {
            size_t idx = static_cast<size_t>(base + j * inner);
            ga.v[idx] = static_cast<T>(static_cast<double>(p.v[idx]) *
                                       (static_cast<double>(g.v[idx]) - dot));
          }
        }
      }
      t.accumulate(a, ga);
    });
  }

  // One-sided real DFT along the last axis: [..., L] -> [..., 2, bins]
  V rfft(V a) {
    const Tensor<T>& ta = value(a);
    if (ta.ndim() < 1) fail_data("rfft: needs at least one axis");
    const int len = ta.dim(ta.ndim() - 1);
    const int nb = fft::one_sided_bins(len);
    const int64_t rows = ta.numel() / len;
    std::vector<int> out_shape(ta.shape.begin(), ta.shape.end() - 1);
    out_shape.push_back(2);
    out_shape.push_back(nb);
    Tensor<T> out(out_shape);
    fft::rfft_rows(ta.data(), out.data(), rows, len);
    return push_op(std::move(out), {a}, [a, rows, len](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga(xv.shape);
      fft::rfft_adjoint_rows(g.data(), ga.data(), rows, len);
      t.accumulate(a, ga);
    });
  }

  V sum(V a) {
    const Tensor<T>& ta = value(a);
    double acc = 0;
    for (const T& x : ta.v) acc += static_cast<double>(x);
    return push_op(scalar_tensor<T>(static_cast<T>(acc)), {a}, [a](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga(xv.shape, g.v[0]);
      t.accumulate(a, ga);
    });
  }

  V mean(V a) {
    const Tensor<T>& ta = value(a);
    const int64_t n = ta.numel();
    double acc = 0;
    for (const T& x : ta.v) acc += static_cast<double>(x);
    return push_op(scalar_tensor<T>(static_cast<T>(acc / n)), {a}, [a, n](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga(xv.shape, static_cast<T>(static_cast<double>(g.v[0]) / n));
      t.accumulate(a, ga);
    });
  }

  // sqrt(sum of squares) over the whole tensor. For a spectrum laid out as
  // [..., 2, bins] this covers real and imaginary parts.
  V frobenius_norm(V a) {
    const Tensor<T>& ta = value(a);
    double acc = 0;
    for (const T& x : ta.v) acc += static_cast<double>(x) * static_cast<double>(x);
    double nrm = std::sqrt(acc);
    return push_op(scalar_tensor<T>(static_cast<T>(nrm)), {a}, [a, nrm](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga(xv.shape);
      if (nrm > 0) {
        double s = static_cast<double>(g.v[0]) / nrm;
        for (int64_t i = 0; i < ga.numel(); ++i)
          ga.v[static_cast<size_t>(i)] = static_cast<T>(s * static_cast<double>(xv.v[static_cast<size_t>(i)]));
      }
      t.accumulate(a, ga);
    });
  }

  // Per-slice Frobenius norm over axis 0: [B, ...] -> [B]
  V frobenius_norm_per_sample(V a) {
    const Tensor<T>& ta = value(a);
    if (ta.ndim() < 1) fail_data("frobenius_norm_per_sample: needs a batch axis");
    const int b = ta.dim(0);
    const int64_t stride = ta.numel() / b;
    Tensor<T> out({b});
    std::vector<double> norms(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
      const T* s = ta.data() + static_cast<int64_t>(i) * stride;
      double acc = 0;
      for (int64_t j = 0; j < stride; ++j) acc += static_cast<double>(s[j]) * static_cast<double>(s[j]);
      norms[static_cast<size_t>(i)] = std::sqrt(acc);
      out.v[static_cast<size_t>(i)] = static_cast<T>(norms[static_cast<size_t>(i)]);
    }
    return push_op(std::move(out), {a}, [a, b, stride, norms](Tape& t, const Tensor<T>& g) {
      const Tensor<T>& xv = t.value(a);
      Tensor<T> ga(xv.shape);
      for (int i = 0; i < b; ++i) {
        double nrm = norms[static_cast<size_t>(i)];
        if (nrm <= 0) continue;
        double s = static_cast<double>(g.v[static_cast<size_t>(i)]) / nrm;
        const T* xs = xv.data() + static_cast<int64_t>(i) * stride;
        T* gs = ga.data() + static_cast<int64_t>(i) * stride;
        for (int64_t j = 0; j < stride; ++j) gs[j] = static_cast<T>(s * static_cast<double>(xs[j]));
      }
      t.accumulate(a, ga);
    });
  }

  // [B,C,L] -> [B,C], mean over the time axis
  V global_avg_pool(V a) {
    const Tensor<T>& ta = value(a);
    if (ta.ndim() != 3) fail_data("global_avg_pool: expected [B,C,L]");
    const int b = ta.dim(0), c = ta.dim(1), len = ta.dim(2);
    Tensor<T> out({b, c});
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < c; ++j) {
        const T* s = &ta.at(i, j, 0);
        double acc = 0;
        for (int k = 0; k < len; ++k) acc += static_cast<double>(s[k]);
        out.at(i, j) = static_cast<T>(acc / len);
      }
    return push_op(std::move(out), {a}, [a, b, c, len](Tape& t, const Tensor<T>& g) {
      Tensor<T> ga({b, c, len});
      for (int i = 0; i < b; ++i)
        for (int j = 0; j < c; ++j) {
          T gv = static_cast<T>(static_cast<double>(g.at(i, j)) / len);
          T* gs = &ga.at(i, j, 0);
          for (int k = 0; k < len; ++k) gs[k] = gv;
        }
      t.accumulate(a, ga);
    });
  }

  // Mean over the batch of -sum_c q_c log softmax(logits)_c. Targets are a
  // constant distribution per row (rows must sum to 1 within 1e-5).
  V soft_cross_entropy(V logits, Tensor<T> target_probs) {
    const Tensor<T>& tl = value(logits);
    if (tl.ndim() != 2) fail_data("soft_cross_entropy: logits must be [B,C]");
    if (!target_probs.same_shape(tl)) fail_data("soft_cross_entropy: target shape mismatch");
    const int b = tl.dim(0), c = tl.dim(1);
    for (int i = 0; i < b; ++i) {
      double s = 0;
      for (int j = 0; j < c; ++j) s += static_cast<double>(target_probs.at(i, j));
      if (std::abs(s - 1.0) > 1e-5) {
        fail_data("soft_cross_entropy: target row " + std::to_string(i) +
                  " is not a distribution (sum " + std::to_string(s) + ")");
      }
    }
    // log-softmax in double, keep softmax for the backward pass
    Tensor<T> probs({b, c});
    double loss = 0;
    for (int i = 0; i < b; ++i) {
      const T* row = &tl.at(i, 0);
      double mx = static_cast<double>(row[0]);
      for (int j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double denom = 0;
      for (int j = 0; j < c; ++j) denom += std::exp(static_cast<double>(row[j]) - mx);
      double log_denom = std::log(denom);
      for (int j = 0; j < c; ++j) {
        double ls = static_cast<double>(row[j]) - mx - log_denom;
        probs.at(i, j) = static_cast<T>(std::exp(ls));
        loss -= static_cast<double>(target_probs.at(i, j)) * ls;
      }
    }
    loss /= b;
    return push_op(scalar_tensor<T>(static_cast<T>(loss)), {logits},
                   [logits, b, c, probs = std::move(probs), q = std::move(target_probs)](
                       Tape& t, const Tensor<T>& g) {
                     double s = static_cast<double>(g.v[0]) / b;
                     Tensor<T> gl({b, c});
                     for (int i = 0; i < b; ++i) {
                       double qs = 0;
                       for (int j = 0; j < c; ++j) qs += static_cast<double>(q.at(i, j));
                       for (int j = 0; j < c; ++j) {
                         gl.at(i, j) = static_cast<T>(
                             s * (static_cast<double>(probs.at(i, j)) * qs -
                                  static_cast<double>(q.at(i, j))));
                       }
                     }
                     t.accumulate(logits, gl);
                   });
  }

 private:
  struct Node {
    Tensor<T> out;
    bool needs_grad = false;
    std::function<void(Tape&)> back;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  bool check_finite_ = true;

  const Node& node(V v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) {
      fail_data("tape: invalid value handle");
    }
    return nodes_[static_cast<size_t>(v.id)];
  }

  int next_id() const { return static_cast<int>(nodes_.size()); }

  bool wants_grad(V v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }

  V push(Tensor<T> out, bool needs_grad, std::function<void(Tape&)> back) {
    if (check_finite_ && !out.all_finite()) {
      fail_numeric("tape: non-finite values produced by a forward op");
    }
    nodes_.push_back(Node{std::move(out), needs_grad, std::move(back)});
    return V{static_cast<int>(nodes_.size()) - 1};
  }

  // Wraps an adjoint f(tape, upstream-grad) and ties it to the new node id.
  template <typename F>
  V push_op(Tensor<T> out, std::initializer_list<V> parents, F&& adjoint) {
    bool needs = false;
    for (V p : parents) needs = needs || node(p).needs_grad;
    int id = next_id();
    std::function<void(Tape&)> back;
    if (needs) {
      back = [id, fn = std::forward<F>(adjoint)](Tape& t) {
        fn(t, t.grads_[static_cast<size_t>(id)]);
      };
    }
    return push(std::move(out), needs, std::move(back));
  }

  void accumulate(V v, const Tensor<T>& g) {
    if (!wants_grad(v)) return;
    Tensor<T>& slot = grads_[static_cast<size_t>(v.id)];
    if (slot.v.empty()) {
      slot = g;
      return;
    }
    for (int64_t i = 0; i < g.numel(); ++i) slot.v[static_cast<size_t>(i)] += g.v[static_cast<size_t>(i)];
  }

  static double sigmoid(double x) {
    if (x >= 0) {
      double e = std::exp(-x);
      return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
  }

  static std::tuple<int64_t, int64_t, int64_t> axis_split(const std::vector<int>& shape, int axis) {
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
    return {outer, shape[static_cast<size_t>(axis)], inner};
  }

  static void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b)) {
      fail_data(std::string(op) + ": shape " + a.shape_str() + " vs " + b.shape_str());
    }
  }

  // C[m,n] (+)= A[m,k] * B, where B is [k,n] or, when trans_b, stored [n,k].
  static void gemm(const T* a, const T* b, T* c, int m, int n, int k, bool trans_b) {
    if (!trans_b) {
      for (int i = 0; i < m; ++i) {
        T* cr = c + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) cr[j] = T(0);
        const T* ar = a + static_cast<int64_t>(i) * k;
        for (int p = 0; p < k; ++p) {
          T av = ar[p];
          if (av == T(0)) continue;
          const T* br = b + static_cast<int64_t>(p) * n;
          for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
      }
    } else {
      for (int i = 0; i < m; ++i) {
        const T* ar = a + static_cast<int64_t>(i) * k;
        T* cr = c + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          const T* br = b + static_cast<int64_t>(j) * k;
          double acc = 0;
          for (int p = 0; p < k; ++p) acc += static_cast<double>(ar[p]) * static_cast<double>(br[p]);
          cr[j] = static_cast<T>(acc);
        }
      }
    }
  }

  // C[m,n] = A^T * B with A stored [k,m], B stored [k,n]
  static void gemm_at(const T* a, const T* b, T* c, int m, int n, int k) {
    for (int64_t i = 0; i < static_cast<int64_t>(m) * n; ++i) c[i] = T(0);
    for (int p = 0; p < k; ++p) {
      const T* ar = a + static_cast<int64_t>(p) * m;
      const T* br = b + static_cast<int64_t>(p) * n;
      for (int i = 0; i < m; ++i) {
        T av = ar[i];
        if (av == T(0)) continue;
        T* cr = c + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) cr[j] += av * br[j];
      }
    }
  }
};

}  // namespace smld
