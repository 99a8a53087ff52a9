#include "navfield/ops.hpp"

#include <algorithm>
#include <cmath>

#include "navfield/kernels.hpp"

namespace navfield::ops {
namespace {

using kernels::active;

bool should_track(const std::vector<TensorPtr>& ins) {
  if (!grad_enabled()) return false;
  for (const auto& t : ins)
    if (t->requires_grad) return true;
  return false;
}

TensorPtr make_out(Shape s, std::vector<double> d, bool tracked,
                   std::vector<TensorPtr> parents,
                   std::function<void(Tensor&)> bp) {
  auto out = std::make_shared<Tensor>(std::move(s), std::move(d), tracked);
  if (tracked) {
    out->parents = std::move(parents);
    out->backprop = std::move(bp);
  }
  return out;
}

struct Bcast {
  Shape out;
  std::vector<std::int64_t> sa, sb;  // strides per out dim (0 on broadcast)
};

Bcast plan_bcast(const Shape& a, const Shape& b, const char* opname) {
  const int ra = static_cast<int>(a.size()), rb = static_cast<int>(b.size());
  const int r = std::max(ra, rb);
  Bcast p;
  p.out.resize(r);
  p.sa.resize(r);
  p.sb.resize(r);
  std::vector<std::int64_t> full_sa(ra), full_sb(rb);
  std::int64_t acc = 1;
  for (int i = ra - 1; i >= 0; --i) {
    full_sa[i] = acc;
    acc *= a[i];
  }
  acc = 1;
  for (int i = rb - 1; i >= 0; --i) {
    full_sb[i] = acc;
    acc *= b[i];
  }
  for (int i = 0; i < r; ++i) {
    const std::int64_t da = (i >= r - ra) ? a[i - (r - ra)] : 1;
    const std::int64_t db = (i >= r - rb) ? b[i - (r - rb)] : 1;
    if (da != db && da != 1 && db != 1)
      throw ShapeError(std::string(opname) + ": cannot broadcast " +
                       shape_str(a) + " with " + shape_str(b));
    p.out[i] = std::max(da, db);
    p.sa[i] = (da == 1) ? 0 : ((i >= r - ra) ? full_sa[i - (r - ra)] : 0);
    p.sb[i] = (db == 1) ? 0 : ((i >= r - rb) ? full_sb[i - (r - rb)] : 0);
  }
  return p;
}

template <class F>
void bcast_for_each(const Bcast& p, F&& f) {
  const int r = static_cast<int>(p.out.size());
  const std::int64_t n = shape_numel(p.out);
  std::vector<std::int64_t> idx(r, 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t oi = 0; oi < n; ++oi) {
    f(oi, oa, ob);
    for (int d = r - 1; d >= 0; --d) {
      ++idx[d];
      oa += p.sa[d];
      ob += p.sb[d];
      if (idx[d] < p.out[d]) break;
      idx[d] = 0;
      oa -= p.sa[d] * p.out[d];
      ob -= p.sb[d] * p.out[d];
    }
  }
}

enum class BinOp { Add, Sub, Mul, Div };

TensorPtr binary(BinOp op, const TensorPtr& a, const TensorPtr& b,
                 const char* name) {
  const bool tracked = should_track({a, b});
  const bool same = a->shape == b->shape;
  std::vector<double> out;
  Bcast plan;
  if (same) {
    const std::size_t n = a->data.size();
    out.resize(n);
    const auto& K = active();
    switch (op) {
      case BinOp::Add: K.add(a->data.data(), b->data.data(), out.data(), n); break;
      case BinOp::Sub: K.sub(a->data.data(), b->data.data(), out.data(), n); break;
      case BinOp::Mul: K.mul(a->data.data(), b->data.data(), out.data(), n); break;
      case BinOp::Div: K.div(a->data.data(), b->data.data(), out.data(), n); break;
    }
  } else {
    plan = plan_bcast(a->shape, b->shape, name);
    out.resize(static_cast<std::size_t>(shape_numel(plan.out)));
    const double* pa = a->data.data();
    const double* pb = b->data.data();
    switch (op) {
      case BinOp::Add:
        bcast_for_each(plan, [&](auto oi, auto ia, auto ib) { out[oi] = pa[ia] + pb[ib]; });
        break;
      case BinOp::Sub:
        bcast_for_each(plan, [&](auto oi, auto ia, auto ib) { out[oi] = pa[ia] - pb[ib]; });
        break;
      case BinOp::Mul:
        bcast_for_each(plan, [&](auto oi, auto ia, auto ib) { out[oi] = pa[ia] * pb[ib]; });
        break;
      case BinOp::Div:
        bcast_for_each(plan, [&](auto oi, auto ia, auto ib) { out[oi] = pa[ia] / pb[ib]; });
        break;
    }
  }
  Shape oshape = same ? a->shape : plan.out;
  auto bp = [op, a, b, same, plan](Tensor& t) {
    const double* g = t.grad.data();
    const std::size_t n = t.data.size();
    std::vector<double> ga, gb;
    if (a->requires_grad) ga.assign(a->data.size(), 0.0);
    if (b->requires_grad) gb.assign(b->data.size(), 0.0);
    auto step = [&](std::int64_t oi, std::int64_t ia, std::int64_t ib) {
      const double gv = g[oi];
      switch (op) {
        case BinOp::Add:
          if (!ga.empty()) ga[ia] += gv;
          if (!gb.empty()) gb[ib] += gv;
          break;
        case BinOp::Sub:
          if (!ga.empty()) ga[ia] += gv;
          if (!gb.empty()) gb[ib] -= gv;
          break;
        case BinOp::Mul:
          if (!ga.empty()) ga[ia] += gv * b->data[ib];
          if (!gb.empty()) gb[ib] += gv * a->data[ia];
          break;
        case BinOp::Div: {
          const double bv = b->data[ib];
          if (!ga.empty()) ga[ia] += gv / bv;
          if (!gb.empty()) gb[ib] -= gv * a->data[ia] / (bv * bv);
          break;
        }
      }
    };
    if (same) {
      for (std::size_t i = 0; i < n; ++i)
        step(static_cast<std::int64_t>(i), static_cast<std::int64_t>(i),
             static_cast<std::int64_t>(i));
    } else {
      bcast_for_each(plan, step);
    }
    if (!ga.empty()) a->accumulate_grad(ga.data(), a->numel());
    if (!gb.empty()) b->accumulate_grad(gb.data(), b->numel());
  };
  return make_out(std::move(oshape), std::move(out), tracked, {a, b}, bp);
}

// dfn(x, y) is dy/dx given input x and output y.
TensorPtr unary(const TensorPtr& x, double (*fwd)(double),
                double (*dfn)(double, double)) {
  const bool tracked = should_track({x});
  std::vector<double> out(x->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x->data[i]);
  auto bp = [x, dfn](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size());
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx[i] = t.grad[i] * dfn(x->data[i], t.data[i]);
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out(x->shape, std::move(out), tracked, {x}, bp);
}

double stable_sigmoid(double v) {
  if (v >= 0) {
    const double e = std::exp(-v);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double stable_softplus(double v) {
  // log(1 + e^v) without overflow
  return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
}

double wrap_pi(double v) {
  double y = v - 2.0 * M_PI * std::floor((v + M_PI) / (2.0 * M_PI));
  if (y <= -M_PI) y = M_PI;  // lands on (-pi, pi]
  return y;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) { return binary(BinOp::Add, a, b, "add"); }
TensorPtr sub(const TensorPtr& a, const TensorPtr& b) { return binary(BinOp::Sub, a, b, "sub"); }
TensorPtr mul(const TensorPtr& a, const TensorPtr& b) { return binary(BinOp::Mul, a, b, "mul"); }
TensorPtr div(const TensorPtr& a, const TensorPtr& b) { return binary(BinOp::Div, a, b, "div"); }

TensorPtr neg(const TensorPtr& x) {
  return unary(x, [](double v) { return -v; },
               [](double, double) { return -1.0; });
}

TensorPtr relu(const TensorPtr& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

TensorPtr sigmoid(const TensorPtr& x) {
  return unary(x, &stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

TensorPtr softplus(const TensorPtr& x) {
  return unary(x, &stable_softplus,
               [](double v, double) { return stable_sigmoid(v); });
}

TensorPtr exp(const TensorPtr& x) {
  return unary(x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

TensorPtr log(const TensorPtr& x) {
  return unary(x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

TensorPtr sin(const TensorPtr& x) {
  return unary(x, [](double v) { return std::sin(v); },
               [](double v, double) { return std::cos(v); });
}

TensorPtr cos(const TensorPtr& x) {
  return unary(x, [](double v) { return std::cos(v); },
               [](double v, double) { return -std::sin(v); });
}

TensorPtr square(const TensorPtr& x) {
  return unary(x, [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

TensorPtr abs(const TensorPtr& x) {
  return unary(x, [](double v) { return std::fabs(v); },
               [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

TensorPtr wrap_angle(const TensorPtr& x) {
  return unary(x, &wrap_pi, [](double, double) { return 1.0; });
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2)
    throw ShapeError("matmul expects rank-2 tensors, got " +
                     shape_str(a->shape) + " and " + shape_str(b->shape));
  const std::int64_t m = a->dim(0), k = a->dim(1), k2 = b->dim(0), n = b->dim(1);
  if (k != k2)
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a->shape) +
                     " vs " + shape_str(b->shape));
  const bool tracked = should_track({a, b});
  std::vector<double> out(static_cast<std::size_t>(m * n));
  active().gemm(m, k, n, a->data.data(), b->data.data(), out.data(), false);
  auto bp = [a, b, m, k, n](Tensor& t) {
    const auto& K = active();
    if (a->requires_grad) {
      std::vector<double> bt(static_cast<std::size_t>(k * n));
      K.transpose(k, n, b->data.data(), bt.data());
      std::vector<double> ga(static_cast<std::size_t>(m * k));
      K.gemm(m, n, k, t.grad.data(), bt.data(), ga.data(), false);
      a->accumulate_grad(ga.data(), a->numel());
    }
    if (b->requires_grad) {
      std::vector<double> at(static_cast<std::size_t>(m * k));
      K.transpose(m, k, a->data.data(), at.data());
      std::vector<double> gb(static_cast<std::size_t>(k * n));
      K.gemm(k, m, n, at.data(), t.grad.data(), gb.data(), false);
      b->accumulate_grad(gb.data(), b->numel());
    }
  };
  return make_out({m, n}, std::move(out), tracked, {a, b}, bp);
}

TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, std::int64_t stride,
                 std::int64_t pad) {
  if (x->rank() != 2 || w->rank() != 3)
    throw ShapeError("conv1d expects x (C_in,L) and w (C_out,C_in,k)");
  if (stride < 1) throw ShapeError("conv1d stride must be >= 1");
  const std::int64_t cin = x->dim(0), L = x->dim(1);
  const std::int64_t cout = w->dim(0), wcin = w->dim(1), kw = w->dim(2);
  if (cin != wcin)
    throw ShapeError("conv1d channel mismatch: x has " + std::to_string(cin) +
                     ", w expects " + std::to_string(wcin));
  const std::int64_t lout = (L + 2 * pad - kw) / stride + 1;
  if (lout < 1) throw ShapeError("conv1d output length would be empty");
  const bool tracked = should_track({x, w});
  std::vector<double> out(static_cast<std::size_t>(cout * lout), 0.0);
  const double* px = x->data.data();
  const double* pw = w->data.data();
  for (std::int64_t co = 0; co < cout; ++co)
    for (std::int64_t ol = 0; ol < lout; ++ol) {
      double acc = 0.0;
      for (std::int64_t ci = 0; ci < cin; ++ci)
        for (std::int64_t kk = 0; kk < kw; ++kk) {
          const std::int64_t pos = ol * stride + kk - pad;
          if (pos >= 0 && pos < L)
            acc += px[ci * L + pos] * pw[(co * cin + ci) * kw + kk];
        }
      out[static_cast<std::size_t>(co * lout + ol)] = acc;
    }
  auto bp = [x, w, stride, pad, cin, L, cout, kw, lout](Tensor& t) {
    const double* g = t.grad.data();
    const double* px = x->data.data();
    const double* pw = w->data.data();
    std::vector<double> gx, gw;
    if (x->requires_grad) gx.assign(x->data.size(), 0.0);
    if (w->requires_grad) gw.assign(w->data.size(), 0.0);
    for (std::int64_t co = 0; co < cout; ++co)
      for (std::int64_t ol = 0; ol < lout; ++ol) {
        const double gv = g[co * lout + ol];
        for (std::int64_t ci = 0; ci < cin; ++ci)
          for (std::int64_t kk = 0; kk < kw; ++kk) {
            const std::int64_t pos = ol * stride + kk - pad;
            if (pos < 0 || pos >= L) continue;
            if (!gx.empty()) gx[ci * L + pos] += gv * pw[(co * cin + ci) * kw + kk];
            if (!gw.empty()) gw[(co * cin + ci) * kw + kk] += gv * px[ci * L + pos];
          }
      }
    if (!gx.empty()) x->accumulate_grad(gx.data(), x->numel());
    if (!gw.empty()) w->accumulate_grad(gw.data(), w->numel());
  };
  return make_out({cout, lout}, std::move(out), tracked, {x, w}, bp);
}

TensorPtr softmax_last(const TensorPtr& x) {
  const std::int64_t n = x->shape.back();
  const std::int64_t rows = x->numel() / n;
  const bool tracked = should_track({x});
  std::vector<double> out(x->data.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = x->data.data() + r * n;
    double mx = row[0];
    for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    double denom = 0.0;
    for (std::int64_t i = 0; i < n; ++i) denom += std::exp(row[i] - mx);
    for (std::int64_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(r * n + i)] = std::exp(row[i] - mx) / denom;
  }
  auto bp = [x, rows, n](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size());
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* y = t.data.data() + r * n;
      const double* g = t.grad.data() + r * n;
      double dot = 0.0;
      for (std::int64_t i = 0; i < n; ++i) dot += g[i] * y[i];
      for (std::int64_t i = 0; i < n; ++i)
        gx[static_cast<std::size_t>(r * n + i)] = y[i] * (g[i] - dot);
    }
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out(x->shape, std::move(out), tracked, {x}, bp);
}

namespace {

void axis_extents(const Shape& s, int axis, std::int64_t& outer,
                  std::int64_t& an, std::int64_t& inner) {
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw ShapeError("reduction axis " + std::to_string(axis) +
                     " out of range for " + shape_str(s));
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  an = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

Shape reduced_shape(const Shape& s, int axis, bool keepdim) {
  Shape out = s;
  if (keepdim) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + axis);
    if (out.empty()) out = {1};
  }
  return out;
}

}  // namespace

TensorPtr sum_axis(const TensorPtr& x, int axis, bool keepdim) {
  std::int64_t outer, an, inner;
  axis_extents(x->shape, axis, outer, an, inner);
  const bool tracked = should_track({x});
  std::vector<double> out(static_cast<std::size_t>(outer * inner), 0.0);
  const double* px = x->data.data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t a = 0; a < an; ++a)
      for (std::int64_t i = 0; i < inner; ++i)
        out[static_cast<std::size_t>(o * inner + i)] += px[(o * an + a) * inner + i];
  auto bp = [x, outer, an, inner](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size());
    const double* g = t.grad.data();
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t a = 0; a < an; ++a)
        for (std::int64_t i = 0; i < inner; ++i)
          gx[static_cast<std::size_t>((o * an + a) * inner + i)] = g[o * inner + i];
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out(reduced_shape(x->shape, axis, keepdim), std::move(out),
                  tracked, {x}, bp);
}

TensorPtr mean_axis(const TensorPtr& x, int axis, bool keepdim) {
  std::int64_t outer, an, inner;
  axis_extents(x->shape, axis, outer, an, inner);
  auto s = sum_axis(x, axis, keepdim);
  return mul(s, Tensor::scalar(1.0 / static_cast<double>(an)));
}

TensorPtr max_axis(const TensorPtr& x, int axis, bool keepdim) {
  std::int64_t outer, an, inner;
  axis_extents(x->shape, axis, outer, an, inner);
  const bool tracked = should_track({x});
  std::vector<double> out(static_cast<std::size_t>(outer * inner));
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(outer * inner));
  const double* px = x->data.data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      std::int64_t best = 0;
      double bv = px[(o * an) * inner + i];
      for (std::int64_t a = 1; a < an; ++a) {
        const double v = px[(o * an + a) * inner + i];
        if (v > bv) {
          bv = v;
          best = a;
        }
      }
      out[static_cast<std::size_t>(o * inner + i)] = bv;
      (*argmax)[static_cast<std::size_t>(o * inner + i)] = best;
    }
  auto bp = [x, outer, an, inner, argmax](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size(), 0.0);
    const double* g = t.grad.data();
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t i = 0; i < inner; ++i) {
        const std::int64_t a = (*argmax)[static_cast<std::size_t>(o * inner + i)];
        gx[static_cast<std::size_t>((o * an + a) * inner + i)] += g[o * inner + i];
      }
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out(reduced_shape(x->shape, axis, keepdim), std::move(out),
                  tracked, {x}, bp);
}

TensorPtr sum_all(const TensorPtr& x) {
  const bool tracked = should_track({x});
  double acc = 0.0;
  for (double v : x->data) acc += v;
  auto bp = [x](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size(), t.grad[0]);
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out({1}, {acc}, tracked, {x}, bp);
}

TensorPtr mean_all(const TensorPtr& x) {
  return mul(sum_all(x), Tensor::scalar(1.0 / static_cast<double>(x->numel())));
}

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat of zero tensors");
  const int rank = xs[0]->rank();
  if (axis < 0 || axis >= rank) throw ShapeError("concat axis out of range");
  Shape oshape = xs[0]->shape;
  std::int64_t total_axis = 0;
  for (const auto& t : xs) {
    if (t->rank() != rank) throw ShapeError("concat rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis && t->shape[i] != oshape[i])
        throw ShapeError("concat shape mismatch: " + shape_str(t->shape) +
                         " vs " + shape_str(oshape));
    total_axis += t->dim(axis);
  }
  oshape[axis] = total_axis;
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= oshape[i];
  for (int i = axis + 1; i < rank; ++i) inner *= oshape[i];
  const bool tracked = should_track(xs);
  std::vector<double> out(static_cast<std::size_t>(shape_numel(oshape)));
  const std::int64_t orow = total_axis * inner;
  std::int64_t off = 0;
  for (const auto& t : xs) {
    const std::int64_t trow = t->dim(axis) * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(t->data.data() + o * trow, trow,
                  out.data() + o * orow + off);
    off += trow;
  }
  auto parts = xs;
  auto bp = [parts, outer, inner, orow](Tensor& t) {
    std::int64_t off = 0;
    for (const auto& p : parts) {
      std::int64_t paxis = p->numel() / (outer * inner);
      const std::int64_t prow = paxis * inner;
      if (p->requires_grad) {
        std::vector<double> gp(p->data.size());
        for (std::int64_t o = 0; o < outer; ++o)
          std::copy_n(t.grad.data() + o * orow + off, prow, gp.data() + o * prow);
        p->accumulate_grad(gp.data(), p->numel());
      }
      off += prow;
    }
  };
  return make_out(std::move(oshape), std::move(out), tracked, xs, bp);
}

TensorPtr reshape(const TensorPtr& x, Shape s) {
  if (shape_numel(s) != x->numel())
    throw ShapeError("reshape from " + shape_str(x->shape) + " to " +
                     shape_str(s) + " changes element count");
  const bool tracked = should_track({x});
  auto bp = [x](Tensor& t) {
    if (!x->requires_grad) return;
    x->accumulate_grad(t.grad.data(), x->numel());
  };
  return make_out(std::move(s), x->data, tracked, {x}, bp);
}

TensorPtr transpose2d(const TensorPtr& x) {
  if (x->rank() != 2) throw ShapeError("transpose2d expects rank 2");
  const std::int64_t r = x->dim(0), c = x->dim(1);
  const bool tracked = should_track({x});
  std::vector<double> out(x->data.size());
  active().transpose(r, c, x->data.data(), out.data());
  auto bp = [x, r, c](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size());
    active().transpose(c, r, t.grad.data(), gx.data());
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out({c, r}, std::move(out), tracked, {x}, bp);
}

TensorPtr cumsum_exclusive_last(const TensorPtr& x) {
  const std::int64_t n = x->shape.back();
  const std::int64_t rows = x->numel() / n;
  const bool tracked = should_track({x});
  std::vector<double> out(x->data.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(r * n + i)] = acc;
      acc += x->data[static_cast<std::size_t>(r * n + i)];
    }
  }
  auto bp = [x, rows, n](Tensor& t) {
    if (!x->requires_grad) return;
    std::vector<double> gx(x->data.size());
    for (std::int64_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::int64_t i = n - 1; i >= 0; --i) {
        gx[static_cast<std::size_t>(r * n + i)] = acc;
        acc += t.grad[static_cast<std::size_t>(r * n + i)];
      }
    }
    x->accumulate_grad(gx.data(), x->numel());
  };
  return make_out(x->shape, std::move(out), tracked, {x}, bp);
}

TensorPtr detach(const TensorPtr& x) {
  return Tensor::from_vector(x->shape, x->data, false);
}

TensorPtr apply_primitive(Primitive kind, const std::vector<TensorPtr>& in,
                          const PrimAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      throw ShapeError("primitive expects " + std::to_string(n) + " inputs, got " +
                       std::to_string(in.size()));
  };
  switch (kind) {
    case Primitive::MatMul: need(2); return matmul(in[0], in[1]);
    case Primitive::Conv1D: need(2); return conv1d(in[0], in[1], attrs.stride, attrs.pad);
    case Primitive::Add: need(2); return add(in[0], in[1]);
    case Primitive::Mul: need(2); return mul(in[0], in[1]);
    case Primitive::Div: need(2); return div(in[0], in[1]);
    case Primitive::Relu: need(1); return relu(in[0]);
    case Primitive::Sigmoid: need(1); return sigmoid(in[0]);
    case Primitive::Softplus: need(1); return softplus(in[0]);
    case Primitive::SoftmaxLast: need(1); return softmax_last(in[0]);
    case Primitive::AvgPool: need(1); return mean_axis(in[0], in[0]->rank() - 1, attrs.keepdim);
    case Primitive::MaxPool: need(1); return max_axis(in[0], in[0]->rank() - 1, attrs.keepdim);
    case Primitive::Concat: return concat(in, attrs.axis);
    case Primitive::Reshape: need(1); return reshape(in[0], attrs.shape);
    case Primitive::Sum:
      need(1);
      return attrs.axis < 0 ? sum_all(in[0]) : sum_axis(in[0], attrs.axis, attrs.keepdim);
    case Primitive::Mean:
      need(1);
      return attrs.axis < 0 ? mean_all(in[0]) : mean_axis(in[0], attrs.axis, attrs.keepdim);
    case Primitive::Log: need(1); return log(in[0]);
    case Primitive::Square: need(1); return square(in[0]);
  }
  throw GraphError("unsupported primitive kind");
}

}  // namespace navfield::ops
