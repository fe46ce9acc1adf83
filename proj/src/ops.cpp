#include "capgen/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capgen/errors.hpp"

namespace capgen::nd {

namespace {

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

Shape leading(const Shape& s, std::size_t drop) { return Shape(s.begin(), s.end() - static_cast<long>(drop)); }

// Plain row-major kernels; `acc` selects C += instead of C =.
template <class R>
void gemm(const R* a, const R* b, R* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    R* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const R av = a[i * k + p];
      const R* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <class R>
void gemm_nt(const R* a, const R* b, R* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      R s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] += s;
    }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <class R>
void gemm_tn(const R* a, const R* b, R* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const R av = a[i * k + p];
      R* crow = c + p * n;
      const R* brow = b + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

}  // namespace

template <class R>
Tensor<R> matmul(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b) {
  if (a.rank() < 2 || b.rank() < 2) mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2), n = b.dim(b.rank() - 1);
  if (k != kb) mismatch("matmul", a.shape(), b.shape());
  const bool b_batched = b.rank() > 2;
  if (b_batched && leading(a.shape(), 2) != leading(b.shape(), 2)) mismatch("matmul", a.shape(), b.shape());
  const std::size_t batch = numel(leading(a.shape(), 2));

  Shape out_shape = leading(a.shape(), 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<R> out(out_shape);
  {
    const R* ap = a.data().data();
    const R* bp = b.data().data();
    R* cp = out.data().data();
    for (std::size_t s = 0; s < batch; ++s)
      gemm(ap + s * m * k, bp + (b_batched ? s * k * n : 0), cp + s * m * n, m, k, n);
  }
  g.record({a, b}, out, [a, b, out, m, k, n, batch, b_batched]() mutable {
    const R* dc = out.grad().data();
    if (a.requires_grad()) {
      R* da = a.grad().data();
      const R* bp = b.data().data();
      for (std::size_t s = 0; s < batch; ++s)
        gemm_nt(dc + s * m * n, bp + (b_batched ? s * k * n : 0), da + s * m * k, m, n, k);
    }
    if (b.requires_grad()) {
      R* db = b.grad().data();
      const R* ap = a.data().data();
      for (std::size_t s = 0; s < batch; ++s)
        gemm_tn(ap + s * m * k, dc + s * m * n, db + (b_batched ? s * k * n : 0), m, k, n);
    }
  });
  return out;
}

template <class R>
Tensor<R> permute(Graph<R>& g, const Tensor<R>& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) throw DimensionError("permute: axes list does not match rank of " + shape_str(x.shape()));
  std::vector<bool> seen(r, false);
  for (auto a : axes) {
    if (a >= r || seen[a]) throw DimensionError("permute: invalid axes for " + shape_str(x.shape()));
    seen[a] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.dim(axes[i]);

  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);
  // Source offset of each output element, computed once and shared with backward.
  auto src = std::make_shared<std::vector<std::size_t>>(x.size());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t o = 0; o < x.size(); ++o) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += idx[i] * in_strides[axes[i]];
    (*src)[o] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  Tensor<R> out(out_shape);
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t o = 0; o < od.size(); ++o) od[o] = xd[(*src)[o]];
  g.record({x}, out, [x, out, src]() mutable {
    auto dx = x.grad();
    auto dy = out.grad();
    for (std::size_t o = 0; o < dy.size(); ++o) dx[(*src)[o]] += dy[o];
  });
  return out;
}

template <class R>
Tensor<R> transpose_last2(Graph<R>& g, const Tensor<R>& x) {
  if (x.rank() < 2) throw DimensionError("transpose_last2 needs rank >= 2, got " + shape_str(x.shape()));
  std::vector<std::size_t> axes(x.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(g, x, axes);
}

template <class R>
Tensor<R> reshape(Graph<R>& g, const Tensor<R>& x, Shape shape) {
  if (numel(shape) != x.size()) mismatch("reshape", x.shape(), shape);
  Tensor<R> out(std::move(shape), std::vector<R>(x.data().begin(), x.data().end()));
  g.record({x}, out, [x, out]() mutable {
    auto dx = x.grad();
    auto dy = out.grad();
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
  return out;
}

template <class R>
Tensor<R> add(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  Tensor<R> out(a.shape());
  auto ad = a.data(), bd = b.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
  g.record({a, b}, out, [a, b, out]() mutable {
    auto dy = out.grad();
    if (a.requires_grad()) {
      auto da = a.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
    }
    if (b.requires_grad()) {
      auto db = b.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
    }
  });
  return out;
}

template <class R>
Tensor<R> mul(Graph<R>& g, const Tensor<R>& a, const Tensor<R>& b) {
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  Tensor<R> out(a.shape());
  auto ad = a.data(), bd = b.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
  g.record({a, b}, out, [a, b, out]() mutable {
    auto dy = out.grad();
    auto ad = a.data(), bd = b.data();
    if (a.requires_grad()) {
      auto da = a.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bd[i];
    }
    if (b.requires_grad()) {
      auto db = b.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * ad[i];
    }
  });
  return out;
}

template <class R>
Tensor<R> add_broadcast(Graph<R>& g, const Tensor<R>& x, const Tensor<R>& row) {
  const std::size_t rr = row.rank();
  if (rr == 0 || rr > x.rank()) mismatch("add_broadcast", x.shape(), row.shape());
  if (Shape(x.shape().end() - static_cast<long>(rr), x.shape().end()) != row.shape())
    mismatch("add_broadcast", x.shape(), row.shape());
  const std::size_t inner = row.size();
  Tensor<R> out(x.shape());
  auto xd = x.data(), rd = row.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] + rd[i % inner];
  g.record({x, row}, out, [x, row, out, inner]() mutable {
    auto dy = out.grad();
    if (x.requires_grad()) {
      auto dx = x.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
    if (row.requires_grad()) {
      auto dr = row.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dr[i % inner] += dy[i];
    }
  });
  return out;
}

template <class R>
Tensor<R> scale(Graph<R>& g, const Tensor<R>& x, R factor) {
  Tensor<R> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] * factor;
  g.record({x}, out, [x, out, factor]() mutable {
    auto dx = x.grad();
    auto dy = out.grad();
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * factor;
  });
  return out;
}

template <class R>
Tensor<R> relu(Graph<R>& g, const Tensor<R>& x) {
  Tensor<R> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] > R(0) ? xd[i] : R(0);
  g.record({x}, out, [x, out]() mutable {
    auto dx = x.grad();
    auto dy = out.grad();
    auto xd = x.data();
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (xd[i] > R(0)) dx[i] += dy[i];
  });
  return out;
}

namespace {

template <class R>
void softmax_backward_strided(std::span<const R> y, std::span<const R> dy, std::span<R> dx,
                              std::size_t outer, std::size_t len, std::size_t inner) {
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      R dot = 0;
      for (std::size_t j = 0; j < len; ++j) dot += dy[base + j * inner] * y[base + j * inner];
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t p = base + j * inner;
        dx[p] += y[p] * (dy[p] - dot);
      }
    }
}

}  // namespace

template <class R>
Tensor<R> softmax(Graph<R>& g, const Tensor<R>& x, std::size_t axis) {
  if (axis >= x.rank())
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_str(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);

  Tensor<R> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      R mx = xd[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xd[base + j * inner]);
      R total = 0;
      for (std::size_t j = 0; j < len; ++j) {
        R e = std::exp(xd[base + j * inner] - mx);
        od[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < len; ++j) od[base + j * inner] /= total;
    }
  g.record({x}, out, [x, out, outer, len, inner]() mutable {
    softmax_backward_strided<R>(out.data(), out.grad(), x.grad(), outer, len, inner);
  });
  return out;
}

template <class R>
Tensor<R> masked_softmax(Graph<R>& g, const Tensor<R>& x, const BoolTensor& mask) {
  if (x.rank() < 2) mismatch("masked_softmax", x.shape(), mask.shape);
  const std::size_t tq = x.dim(x.rank() - 2), tk = x.dim(x.rank() - 1);
  const std::size_t rows = x.size() / tk;
  const std::size_t plane = tq * tk;
  // For row r (flattened over all leading axes), which mask row applies.
  std::size_t per_batch = 0;  // rows per axis-0 slice, when the mask is batched
  if (mask.shape.size() == 2) {
    if (mask.shape[0] != tq || mask.shape[1] != tk) mismatch("masked_softmax", x.shape(), mask.shape);
  } else if (mask.shape.size() == 3) {
    if (x.rank() < 3 || mask.shape[0] != x.dim(0) || mask.shape[1] != tq || mask.shape[2] != tk)
      mismatch("masked_softmax", x.shape(), mask.shape);
    per_batch = rows / x.dim(0);
  } else {
    mismatch("masked_softmax", x.shape(), mask.shape);
  }
  auto mask_row = [&](std::size_t r) -> const std::uint8_t* {
    if (per_batch == 0) return mask.data.data() + (r % tq) * tk;
    return mask.data.data() + (r / per_batch) * plane + (r % tq) * tk;
  };

  Tensor<R> out(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* mr = mask_row(r);
    const R* xr = xd.data() + r * tk;
    R* yr = od.data() + r * tk;
    R mx = -std::numeric_limits<R>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < tk; ++j)
      if (mr[j]) {
        mx = any ? std::max(mx, xr[j]) : xr[j];
        any = true;
      }
    if (!any) throw ContractError("attention row " + std::to_string(r % tq) + " has every key forbidden");
    R total = 0;
    for (std::size_t j = 0; j < tk; ++j) {
      if (!mr[j]) {
        yr[j] = R(0);
        continue;
      }
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < tk; ++j) yr[j] /= total;
  }
  g.record({x}, out, [x, out, rows, tk]() mutable {
    softmax_backward_strided<R>(out.data(), out.grad(), x.grad(), rows, tk, 1);
  });
  return out;
}

template <class R>
Tensor<R> layer_norm(Graph<R>& g, const Tensor<R>& x, const Tensor<R>& gain, const Tensor<R>& bias, R eps) {
  if (x.rank() < 1) mismatch("layer_norm", x.shape(), gain.shape());
  const std::size_t d = x.dim(x.rank() - 1);
  if (gain.shape() != Shape{d}) mismatch("layer_norm", x.shape(), gain.shape());
  if (bias.shape() != Shape{d}) mismatch("layer_norm", x.shape(), bias.shape());
  const std::size_t rows = x.size() / d;

  Tensor<R> out(x.shape());
  auto xhat = std::make_shared<std::vector<R>>(x.size());
  auto inv_std = std::make_shared<std::vector<R>>(rows);
  auto xd = x.data(), gd = gain.data(), bd = bias.data();
  auto od = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const R* xr = xd.data() + r * d;
    R mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= R(d);
    R var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= R(d);
    const R is = R(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const R h = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      od[r * d + j] = gd[j] * h + bd[j];
    }
  }
  g.record({x, gain, bias}, out, [x, gain, bias, out, xhat, inv_std, rows, d]() mutable {
    auto dy = out.grad();
    const auto& h = *xhat;
    if (gain.requires_grad()) {
      auto dg = gain.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) dg[j] += dy[r * d + j] * h[r * d + j];
    }
    if (bias.requires_grad()) {
      auto db = bias.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) db[j] += dy[r * d + j];
    }
    if (x.requires_grad()) {
      auto dx = x.grad();
      auto gd = gain.data();
      for (std::size_t r = 0; r < rows; ++r) {
        R mean_dh = 0, mean_dh_h = 0;
        for (std::size_t j = 0; j < d; ++j) {
          const R dh = dy[r * d + j] * gd[j];
          mean_dh += dh;
          mean_dh_h += dh * h[r * d + j];
        }
        mean_dh /= R(d);
        mean_dh_h /= R(d);
        for (std::size_t j = 0; j < d; ++j) {
          const R dh = dy[r * d + j] * gd[j];
          dx[r * d + j] += (*inv_std)[r] * (dh - mean_dh - h[r * d + j] * mean_dh_h);
        }
      }
    }
  });
  return out;
}

template <class R>
Tensor<R> embedding(Graph<R>& g, const Tensor<R>& table, const IndexTensor& ids) {
  if (table.rank() != 2) throw DimensionError("embedding table must be rank 2, got " + shape_str(table.shape()));
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  for (auto id : ids.data)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw IndexError("token id " + std::to_string(id) + " out of range for vocabulary of " + std::to_string(vocab));
  Shape out_shape = ids.shape;
  out_shape.push_back(d);
  Tensor<R> out(out_shape);
  auto td = table.data();
  auto od = out.data();
  for (std::size_t i = 0; i < ids.data.size(); ++i)
    std::copy_n(td.begin() + static_cast<long>(ids.data[i] * d), d, od.begin() + static_cast<long>(i * d));
  g.record({table}, out, [table, out, idv = ids.data, d]() mutable {
    auto dt = table.grad();
    auto dy = out.grad();
    for (std::size_t i = 0; i < idv.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) dt[static_cast<std::size_t>(idv[i]) * d + j] += dy[i * d + j];
  });
  return out;
}

template <class R>
Tensor<R> cross_entropy(Graph<R>& g, const Tensor<R>& logits, const IndexTensor& targets, const BoolTensor& mask) {
  if (logits.rank() != 3) throw DimensionError("cross_entropy: logits must be [B,T,V], got " + shape_str(logits.shape()));
  const Shape bt = leading(logits.shape(), 1);
  if (targets.shape != bt) mismatch("cross_entropy", logits.shape(), targets.shape);
  if (mask.shape != bt) mismatch("cross_entropy", logits.shape(), mask.shape);
  const std::size_t v = logits.dim(2);
  const std::size_t positions = targets.data.size();
  for (auto t : targets.data)
    if (t < 0 || static_cast<std::size_t>(t) >= v)
      throw IndexError("target id " + std::to_string(t) + " out of range for " + std::to_string(v) + " classes");

  std::size_t count = 0;
  for (auto m : mask.data) count += m ? 1 : 0;
  Tensor<R> out = Tensor<R>::scalar(R(0));
  if (count == 0) return out;

  auto ld = logits.data();
  auto probs = std::make_shared<std::vector<R>>(logits.size());
  // Double accumulator: the mean should not depend on the row order of a batch.
  double total = 0;
  for (std::size_t p = 0; p < positions; ++p) {
    if (!mask.data[p]) continue;
    const R* row = ld.data() + p * v;
    R mx = row[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    R z = 0;
    for (std::size_t j = 0; j < v; ++j) {
      const R e = std::exp(row[j] - mx);
      (*probs)[p * v + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < v; ++j) (*probs)[p * v + j] /= z;
    total += static_cast<double>(std::log(z) + mx - row[targets.data[p]]);
  }
  out[0] = static_cast<R>(total / static_cast<double>(count));
  g.record({logits}, out, [logits, out, probs, tv = targets.data, mv = mask.data, v, count]() mutable {
    const R scale = out.grad()[0] / R(count);
    auto dl = logits.grad();
    for (std::size_t p = 0; p < tv.size(); ++p) {
      if (!mv[p]) continue;
      for (std::size_t j = 0; j < v; ++j) dl[p * v + j] += scale * (*probs)[p * v + j];
      dl[p * v + static_cast<std::size_t>(tv[p])] -= scale;
    }
  });
  return out;
}

template <class R>
Tensor<R> sum(Graph<R>& g, const Tensor<R>& x) {
  R total = 0;
  for (auto val : x.data()) total += val;
  Tensor<R> out = Tensor<R>::scalar(total);
  g.record({x}, out, [x, out]() mutable {
    const R dy = out.grad()[0];
    for (auto& d : x.grad()) d += dy;
  });
  return out;
}

template <class R>
Tensor<R> mean(Graph<R>& g, const Tensor<R>& x) {
  return scale(g, sum(g, x), R(1) / R(x.size()));
}

template <class R>
double grad_check(const ScalarFn<R>& f, Tensor<R> x, double eps) {
  const bool prior = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  std::vector<R> analytic;
  {
    Graph<R> g;
    g.backward(f(g, x));
    auto gr = x.grad();
    analytic.assign(gr.begin(), gr.end());
  }
  auto xd = x.data();
  double worst = 0.0;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const R orig = xd[i];
    xd[i] = static_cast<R>(orig + eps);
    Graph<R> gp(false);
    const double fp = static_cast<double>(f(gp, x).item());
    xd[i] = static_cast<R>(orig - eps);
    Graph<R> gm(false);
    const double fm = static_cast<double>(f(gm, x).item());
    xd[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  x.zero_grad();
  x.set_requires_grad(prior);
  return worst;
}

#define CAPGEN_INSTANTIATE_OPS(R)                                                                      \
  template Tensor<R> matmul(Graph<R>&, const Tensor<R>&, const Tensor<R>&);                            \
  template Tensor<R> transpose_last2(Graph<R>&, const Tensor<R>&);                                     \
  template Tensor<R> permute(Graph<R>&, const Tensor<R>&, const std::vector<std::size_t>&);            \
  template Tensor<R> reshape(Graph<R>&, const Tensor<R>&, Shape);                                      \
  template Tensor<R> add(Graph<R>&, const Tensor<R>&, const Tensor<R>&);                               \
  template Tensor<R> mul(Graph<R>&, const Tensor<R>&, const Tensor<R>&);                               \
  template Tensor<R> add_broadcast(Graph<R>&, const Tensor<R>&, const Tensor<R>&);                     \
  template Tensor<R> scale(Graph<R>&, const Tensor<R>&, R);                                            \
  template Tensor<R> relu(Graph<R>&, const Tensor<R>&);                                                \
  template Tensor<R> softmax(Graph<R>&, const Tensor<R>&, std::size_t);                                \
  template Tensor<R> masked_softmax(Graph<R>&, const Tensor<R>&, const BoolTensor&);                   \
  template Tensor<R> layer_norm(Graph<R>&, const Tensor<R>&, const Tensor<R>&, const Tensor<R>&, R);   \
  template Tensor<R> embedding(Graph<R>&, const Tensor<R>&, const IndexTensor&);                       \
  template Tensor<R> cross_entropy(Graph<R>&, const Tensor<R>&, const IndexTensor&, const BoolTensor&); \
  template Tensor<R> sum(Graph<R>&, const Tensor<R>&);                                                 \
  template Tensor<R> mean(Graph<R>&, const Tensor<R>&);                                                \
  template double grad_check(const ScalarFn<R>&, Tensor<R>, double);

CAPGEN_INSTANTIATE_OPS(float)
CAPGEN_INSTANTIATE_OPS(double)

}  // namespace capgen::nd
