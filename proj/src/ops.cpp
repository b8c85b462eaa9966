#include "lira/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "lira/simd/kernels.hpp"

namespace lira::nn {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

void require_rank(const Var& x, std::size_t rank, const char* op) {
  require(x.shape().size() == rank, std::string(op) + ": expected rank " + std::to_string(rank) +
                                        ", got " + shape_str(x.shape()));
}

void require_same(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
  Tensor out({m, n});
  simd::kernels().gemm_nn(m, n, k, a.value().data().data(), b.value().data().data(),
                          out.data().data());
  return make_result(std::move(out), {a, b}, [pa = a.node(), pb = b.node(), m, n, k](Node& self) {
    const double* g = self.grad.data();
    if (pa->requires_grad)
      simd::kernels().gemm_nt(m, k, n, g, pb->value.data().data(), pa->grad_buffer().data());
    if (pb->requires_grad)
      simd::gemm_tn(k, n, m, pa->value.data().data(), g, pb->grad_buffer().data());
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  Tensor out({c, r});
  const auto& x = a.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_result(std::move(out), {a}, [pa = a.node(), r, c](Node& self) {
    auto ga = pa->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return make_result(std::move(out), {a, b}, [pa = a.node(), pb = b.node()](Node& self) {
    for (Node* p : {pa, pb}) {
      if (!p->requires_grad) continue;
      auto gp = p->grad_buffer();
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return make_result(std::move(out), {a, b}, [pa = a.node(), pb = b.node()](Node& self) {
    if (pa->requires_grad) {
      auto g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      auto g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return make_result(std::move(out), {a, b}, [pa = a.node(), pb = b.node()](Node& self) {
    if (pa->requires_grad) {
      auto g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      auto g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  return make_result(std::move(out), {a}, [pa = a.node(), factor](Node& self) {
    auto g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Var add_row(const Var& x, const Var& row) {
  require_rank(x, 2, "add_row");
  const std::size_t m = x.dim(0), n = x.dim(1);
  require(row.value().size() == n,
          "add_row: row " + shape_str(row.shape()) + " vs matrix " + shape_str(x.shape()));
  Tensor out = x.value();
  const auto& r = row.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
  return make_result(std::move(out), {x, row}, [px = x.node(), pr = row.node(), m, n](Node& self) {
    if (px->requires_grad) {
      auto g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pr->requires_grad) {
      auto g = pr->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Var mul_row(const Var& x, const Var& row) {
  require_rank(x, 2, "mul_row");
  const std::size_t m = x.dim(0), n = x.dim(1);
  require(row.value().size() == n,
          "mul_row: row " + shape_str(row.shape()) + " vs matrix " + shape_str(x.shape()));
  Tensor out = x.value();
  const auto& r = row.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= r[j];
  return make_result(std::move(out), {x, row}, [px = x.node(), pr = row.node(), m, n](Node& self) {
    if (px->requires_grad) {
      auto g = px->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] * pr->value[j];
    }
    if (pr->requires_grad) {
      auto g = pr->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j] * px->value[i * n + j];
    }
  });
}

Var softmax(const Var& x, std::size_t axis) {
  require(axis < x.shape().size(), "softmax: axis out of range for " + shape_str(x.shape()));
  const AxisSplit s = split_axis(x.shape(), axis);
  Tensor out = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.n; ++j) mx = std::max(mx, out[base + j * s.inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        double& v = out[base + j * s.inner];
        v = std::exp(v - mx);
        z += v;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= z;
    }
  auto y = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [px = x.node(), y, s](Node& self) {
    auto g = px->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double dotgy = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t i = base + j * s.inner;
          dotgy += self.grad[i] * (*y)[i];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t i = base + j * s.inner;
          g[i] += (*y)[i] * (self.grad[i] - dotgy);
        }
      }
  });
}

Var layer_norm(const Var& x, double eps) {
  require(!x.shape().empty(), "layer_norm: scalar input");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.value().size() / n;
  Tensor out = x.value();
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double* v = out.data().data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += v[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (v[j] - mu) * (v[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) v[j] = (v[j] - mu) * is;
  }
  auto xhat = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [px = x.node(), xhat, inv_std, n, rows](Node& self) {
    auto g = px->grad_buffer();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gy = self.grad.data() + r * n;
      const double* xh = xhat->data().data() + r * n;
      double mg = 0.0, mgx = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mg += gy[j];
        mgx += gy[j] * xh[j];
      }
      mg *= inv_n;
      mgx *= inv_n;
      for (std::size_t j = 0; j < n; ++j)
        g[r * n + j] += (*inv_std)[r] * (gy[j] - mg - xh[j] * mgx);
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  return add_row(mul_row(layer_norm(x, eps), gamma), beta);
}

Var gelu(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return make_result(std::move(out), {x}, [px = x.node()](Node& self) {
    auto g = px->grad_buffer();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = px->value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      g[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data())
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  auto y = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [px = x.node(), y](Node& self) {
    auto g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*y)[i] * (1.0 - (*y)[i]);
  });
}

Var embedding_lookup(const Var& table, std::span<const std::size_t> ids) {
  require_rank(table, 2, "embedding_lookup");
  require(!ids.empty(), "embedding_lookup: no ids");
  const std::size_t v = table.dim(0), d = table.dim(1);
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] < v, "embedding_lookup: id " + std::to_string(ids[i]) + " outside table " +
                            shape_str(table.shape()));
    std::copy_n(table.value().data().data() + ids[i] * d, d, out.data().data() + i * d);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return make_result(std::move(out), {table}, [pt = table.node(), idv, d](Node& self) {
    auto g = pt->grad_buffer();
    for (std::size_t i = 0; i < idv.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g[idv[i] * d + j] += self.grad[i * d + j];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  require(axis < s0.size(), "concat: axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == s0[i];
    require(ok, "concat: incompatible shapes " + shape_str(s0) + " and " + shape_str(s));
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t len = p.shape()[axis] * os.inner;
    for (std::size_t o = 0; o < os.outer; ++o)
      std::copy_n(p.value().data().data() + o * len, len,
                  out.data().data() + o * os.n * os.inner + off * os.inner);
    off += p.shape()[axis];
  }
  std::vector<Node*> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  std::vector<Var> parents(parts.begin(), parts.end());
  return make_result(std::move(out), std::move(parents), [nodes, offsets, os, axis](Node& self) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      Node* p = nodes[k];
      if (!p->requires_grad) continue;
      auto g = p->grad_buffer();
      const std::size_t len = p->value.shape()[axis] * os.inner;
      for (std::size_t o = 0; o < os.outer; ++o) {
        const double* src = self.grad.data() + o * os.n * os.inner + offsets[k] * os.inner;
        for (std::size_t i = 0; i < len; ++i) g[o * len + i] += src[i];
      }
    }
  });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require(axis < x.shape().size(), "slice: axis out of range for " + shape_str(x.shape()));
  require(begin < end && end <= x.shape()[axis],
          "slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " +
              shape_str(x.shape()));
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t len = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.value().data().data() + o * s.n * s.inner + begin * s.inner, len,
                out.data().data() + o * len);
  return make_result(std::move(out), {x}, [px = x.node(), s, begin, len](Node& self) {
    auto g = px->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < len; ++i)
        g[o * s.n * s.inner + begin * s.inner + i] += self.grad[o * len + i];
  });
}

Var reshape(const Var& x, Shape shape) {
  require(numel(shape) == x.value().size(),
          "reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  Tensor out(std::move(shape), x.value().storage());
  return make_result(std::move(out), {x}, [px = x.node()](Node& self) {
    auto g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make_result(Tensor::scalar(s), {x}, [px = x.node()](Node& self) {
    auto g = px->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var attention(const Var& q, const Var& k, const Var& v, std::size_t heads, bool causal) {
  require_rank(q, 2, "attention");
  require_rank(k, 2, "attention");
  require_rank(v, 2, "attention");
  const std::size_t tq = q.dim(0), tk = k.dim(0), d = q.dim(1);
  require(k.dim(1) == d && v.dim(1) == d && v.dim(0) == tk,
          "attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) + ", v " +
              shape_str(v.shape()));
  require(heads > 0 && d % heads == 0,
          "attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) +
              " heads");
  require(!causal || tq == tk, "attention: causal mask needs equal query/key lengths");
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& kt = simd::kernels();

  auto gather = [](const Tensor& src, std::size_t rows, std::size_t d, std::size_t dh,
                   std::size_t h) {
    std::vector<double> outv(rows * dh);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.data().data() + r * d + h * dh, dh, outv.data() + r * dh);
    return outv;
  };

  // probs[h] is tq x tk; masked entries are exactly zero.
  auto probs = std::make_shared<std::vector<std::vector<double>>>(heads);
  Tensor out({tq, d});
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = gather(q.value(), tq, d, dh, h);
    const auto kh = gather(k.value(), tk, d, dh, h);
    const auto vh = gather(v.value(), tk, d, dh, h);
    auto& p = (*probs)[h];
    p.assign(tq * tk, 0.0);
    kt.gemm_nt(tq, tk, dh, qh.data(), kh.data(), p.data());
    for (std::size_t i = 0; i < tq; ++i) {
      double* row = p.data() + i * tk;
      const std::size_t lim = causal ? i + 1 : tk;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < lim; ++j) mx = std::max(mx, row[j] * sc);
      double z = 0.0;
      for (std::size_t j = 0; j < lim; ++j) {
        row[j] = std::exp(row[j] * sc - mx);
        z += row[j];
      }
      for (std::size_t j = 0; j < lim; ++j) row[j] /= z;
      for (std::size_t j = lim; j < tk; ++j) row[j] = 0.0;
    }
    std::vector<double> oh(tq * dh, 0.0);
    kt.gemm_nn(tq, dh, tk, p.data(), vh.data(), oh.data());
    for (std::size_t r = 0; r < tq; ++r)
      std::copy_n(oh.data() + r * dh, dh, out.data().data() + r * d + h * dh);
  }

  return make_result(
      std::move(out), {q, k, v},
      [pq = q.node(), pk = k.node(), pv = v.node(), probs, gather, heads, tq, tk, d, dh,
       sc](Node& self) {
        const auto& kt = simd::kernels();
        Tensor gout({tq, d}, self.grad);
        for (std::size_t h = 0; h < heads; ++h) {
          const auto& p = (*probs)[h];
          const auto go = gather(gout, tq, d, dh, h);
          const auto qh = gather(pq->value, tq, d, dh, h);
          const auto kh = gather(pk->value, tk, d, dh, h);
          const auto vh = gather(pv->value, tk, d, dh, h);
          if (pv->requires_grad) {
            std::vector<double> gv(tk * dh, 0.0);
            simd::gemm_tn(tk, dh, tq, p.data(), go.data(), gv.data());
            auto g = pv->grad_buffer();
            for (std::size_t r = 0; r < tk; ++r)
              for (std::size_t c = 0; c < dh; ++c) g[r * d + h * dh + c] += gv[r * dh + c];
          }
          if (!pq->requires_grad && !pk->requires_grad) continue;
          std::vector<double> ds(tq * tk, 0.0);
          kt.gemm_nt(tq, tk, dh, go.data(), vh.data(), ds.data());
          for (std::size_t i = 0; i < tq; ++i) {
            double* row = ds.data() + i * tk;
            const double* pr = p.data() + i * tk;
            double acc = 0.0;
            for (std::size_t j = 0; j < tk; ++j) acc += row[j] * pr[j];
            for (std::size_t j = 0; j < tk; ++j) row[j] = pr[j] * (row[j] - acc) * sc;
          }
          if (pq->requires_grad) {
            std::vector<double> gq(tq * dh, 0.0);
            kt.gemm_nn(tq, dh, tk, ds.data(), kh.data(), gq.data());
            auto g = pq->grad_buffer();
            for (std::size_t r = 0; r < tq; ++r)
              for (std::size_t c = 0; c < dh; ++c) g[r * d + h * dh + c] += gq[r * dh + c];
          }
          if (pk->requires_grad) {
            std::vector<double> gk(tk * dh, 0.0);
            simd::gemm_tn(tk, dh, tq, ds.data(), qh.data(), gk.data());
            auto g = pk->grad_buffer();
            for (std::size_t r = 0; r < tk; ++r)
              for (std::size_t c = 0; c < dh; ++c) g[r * d + h * dh + c] += gk[r * dh + c];
          }
        }
      });
}

Var upsample_nearest(const Var& grid, std::size_t out_h, std::size_t out_w) {
  require_rank(grid, 2, "upsample_nearest");
  const std::size_t gh = grid.dim(0), gw = grid.dim(1);
  require(out_h % gh == 0 && out_w % gw == 0,
          "upsample_nearest: " + std::to_string(out_h) + "x" + std::to_string(out_w) +
              " is not a multiple of grid " + shape_str(grid.shape()));
  const std::size_t fy = out_h / gh, fx = out_w / gw;
  Tensor out({out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y)
    for (std::size_t x = 0; x < out_w; ++x) out[y * out_w + x] = grid.value()[(y / fy) * gw + x / fx];
  return make_result(std::move(out), {grid},
                     [pg = grid.node(), gw, fy, fx, out_h, out_w](Node& self) {
                       auto g = pg->grad_buffer();
                       for (std::size_t y = 0; y < out_h; ++y)
                         for (std::size_t x = 0; x < out_w; ++x)
                           g[(y / fy) * gw + x / fx] += self.grad[y * out_w + x];
                     });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> targets,
                  const std::vector<bool>& mask) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t t = logits.dim(0), vsz = logits.dim(1);
  require(targets.size() == t && mask.size() == t,
          "cross_entropy: " + std::to_string(targets.size()) + " targets / " +
              std::to_string(mask.size()) + " mask entries for logits " +
              shape_str(logits.shape()));
  std::size_t count = 0;
  for (std::size_t i = 0; i < t; ++i)
    if (mask[i]) {
      require(targets[i] < vsz, "cross_entropy: target id out of range");
      ++count;
    }
  if (count == 0) throw std::invalid_argument("cross_entropy: no supervised positions");

  const auto& lv = logits.value();
  auto probs = std::make_shared<std::vector<double>>(t * vsz, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    if (!mask[i]) continue;
    const double* row = lv.data().data() + i * vsz;
    const double mx = *std::max_element(row, row + vsz);
    double z = 0.0;
    for (std::size_t j = 0; j < vsz; ++j) z += std::exp(row[j] - mx);
    total += std::log(z) + mx - row[targets[i]];
    for (std::size_t j = 0; j < vsz; ++j) (*probs)[i * vsz + j] = std::exp(row[j] - mx) / z;
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<std::size_t> tv(targets.begin(), targets.end());
  std::vector<bool> mv = mask;
  return make_result(Tensor::scalar(total * inv), {logits},
                     [pl = logits.node(), probs, tv, mv, t, vsz, inv](Node& self) {
                       auto g = pl->grad_buffer();
                       const double s = self.grad[0] * inv;
                       for (std::size_t i = 0; i < t; ++i) {
                         if (!mv[i]) continue;
                         for (std::size_t j = 0; j < vsz; ++j)
                           g[i * vsz + j] += s * (*probs)[i * vsz + j];
                         g[i * vsz + tv[i]] -= s;
                       }
                     });
}

}  // namespace lira::nn
