#include "tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ar {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

int64_t numel_of(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    fail(ErrorKind::ShapeMismatch, std::string("shape mismatch in ") + what);
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = shape;
  n->data.assign(numel_of(shape), 0.0);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  Tensor t = zeros(shape, requires_grad);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> data,
                         bool requires_grad) {
  if (static_cast<int64_t>(data.size()) != numel_of(shape))
    fail(ErrorKind::ShapeMismatch, "from_data: size does not match shape");
  auto n = std::make_shared<TensorNode>();
  n->shape = shape;
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

double Tensor::item() const {
  if (node_->data.size() != 1)
    fail(ErrorKind::ShapeMismatch, "item() on non-scalar tensor");
  return node_->data[0];
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->data.size(), 0.0);
}

namespace {
void topo_visit(const TensorNodePtr& n, int mark,
                std::vector<TensorNodePtr>& order) {
  // Iterative DFS: (node, next-parent-index) stack.
  std::vector<std::pair<TensorNodePtr, size_t>> stack;
  if (n->topo_mark == mark) return;
  n->topo_mark = mark;
  stack.emplace_back(n, 0);
  while (!stack.empty()) {
    auto& [cur, idx] = stack.back();
    if (idx < cur->parents.size()) {
      TensorNodePtr p = cur->parents[idx++];
      if (p->topo_mark != mark) {
        p->topo_mark = mark;
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(cur);
      stack.pop_back();
    }
  }
}
int next_topo_mark() {
  static int counter = 0;
  return ++counter;
}
}  // namespace

void Tensor::backward() {
  if (numel() != 1)
    fail(ErrorKind::ShapeMismatch, "backward() requires a scalar output");
  std::vector<TensorNodePtr> order;
  topo_visit(node_, next_topo_mark(), order);
  for (auto& n : order) n->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode& n = **it;
    if (n.backward_fn) n.backward_fn(n);
  }
}

Tensor make_op(const Shape& shape, std::vector<double> data,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn) {
  auto n = std::make_shared<TensorNode>();
  n->shape = shape;
  n->data = std::move(data);
  bool req = false;
  for (auto& p : parents) {
    req = req || p.requires_grad();
    n->parents.push_back(p.node());
  }
  n->requires_grad = req;
  if (req) n->backward_fn = std::move(backward_fn);
  return Tensor(n);
}

// ---- elementwise ---------------------------------------------------------

namespace {
// binary op where d(out)/da and d(out)/db are elementwise factors
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* name,
                 const std::function<double(double, double)>& f,
                 const std::function<double(double, double)>& dfa,
                 const std::function<double(double, double)>& dfb) {
  check_same_shape(a, b, name);
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [an, bn, dfa, dfb](TensorNode& n) {
                   for (size_t i = 0; i < n.data.size(); ++i) {
                     double g = n.grad[i];
                     if (an->requires_grad) {
                       an->ensure_grad();
                       an->grad[i] += g * dfa(an->data[i], bn->data[i]);
                     }
                     if (bn->requires_grad) {
                       bn->ensure_grad();
                       bn->grad[i] += g * dfb(an->data[i], bn->data[i]);
                     }
                   }
                 });
}

Tensor unary_ew(const Tensor& a,
                const std::function<double(double)>& f,
                const std::function<double(double, double)>& df_of_x_and_y) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an, df_of_x_and_y](TensorNode& n) {
                   if (!an->requires_grad) return;
                   an->ensure_grad();
                   for (size_t i = 0; i < n.data.size(); ++i)
                     an->grad[i] +=
                         n.grad[i] * df_of_x_and_y(an->data[i], n.data[i]);
                 });
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "add",
                   [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; },
                   [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "sub",
                   [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; },
                   [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "mul",
                   [](double x, double y) { return x * y; },
                   [](double, double y) { return y; },
                   [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "div",
                   [](double x, double y) { return x / y; },
                   [](double, double y) { return 1.0 / y; },
                   [](double x, double y) { return -x / (y * y); });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor add_scalar(const Tensor& a, double s) {
  return unary_ew(a, [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary_ew(a, [s](double x) { return x * s; },
                  [s](double, double) { return s; });
}

Tensor mul_const(const Tensor& a, const std::vector<double>& c) {
  if (c.size() != a.data().size())
    fail(ErrorKind::ShapeMismatch, "mul_const: size mismatch");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c[i];
  auto an = a.node();
  auto cc = std::make_shared<std::vector<double>>(c);
  return make_op(a.shape(), std::move(out), {a}, [an, cc](TensorNode& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.data.size(); ++i)
      an->grad[i] += n.grad[i] * (*cc)[i];
  });
}

Tensor relu(const Tensor& a) {
  return unary_ew(a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary_ew(a, [slope](double x) { return x > 0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_ew(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& a) {
  return unary_ew(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor exp_t(const Tensor& a) {
  return unary_ew(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log_t(const Tensor& a) {
  return unary_ew(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sqrt_t(const Tensor& a) {
  return unary_ew(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor abs_t(const Tensor& a) {
  return unary_ew(a, [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary_ew(a,
                  [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
                  [lo, hi](double x, double) {
                    return (x > lo && x < hi) ? 1.0 : 0.0;
                  });
}

// ---- reductions ----------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  auto an = a.node();
  return make_op({1}, {s}, {a}, [an](TensorNode& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    double g = n.grad[0];
    for (auto& gg : an->grad) gg += g;
  });
}

Tensor mean(const Tensor& a) {
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

// ---- matmul --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    fail(ErrorKind::ShapeMismatch, "matmul: incompatible shapes");
  int m = a.shape()[0], k = a.shape()[1], nn = b.shape()[1];
  std::vector<double> out(static_cast<size_t>(m) * nn);
  {
    CMapRM A(a.data().data(), m, k), B(b.data().data(), k, nn);
    MapRM O(out.data(), m, nn);
    O.noalias() = A * B;
  }
  auto an = a.node();
  auto bn = b.node();
  return make_op({m, nn}, std::move(out), {a, b},
                 [an, bn, m, k, nn](TensorNode& n) {
                   CMapRM G(n.grad.data(), m, nn);
                   if (an->requires_grad) {
                     an->ensure_grad();
                     CMapRM B(bn->data.data(), k, nn);
                     MapRM dA(an->grad.data(), m, k);
                     dA.noalias() += G * B.transpose();
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     CMapRM A(an->data.data(), m, k);
                     MapRM dB(bn->grad.data(), k, nn);
                     dB.noalias() += A.transpose() * G;
                   }
                 });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[1])
    fail(ErrorKind::ShapeMismatch, "matmul_nt: incompatible shapes");
  int m = a.shape()[0], k = a.shape()[1], nn = b.shape()[0];
  std::vector<double> out(static_cast<size_t>(m) * nn);
  {
    CMapRM A(a.data().data(), m, k), B(b.data().data(), nn, k);
    MapRM O(out.data(), m, nn);
    O.noalias() = A * B.transpose();
  }
  auto an = a.node();
  auto bn = b.node();
  return make_op({m, nn}, std::move(out), {a, b},
                 [an, bn, m, k, nn](TensorNode& n) {
                   CMapRM G(n.grad.data(), m, nn);
                   if (an->requires_grad) {
                     an->ensure_grad();
                     CMapRM B(bn->data.data(), nn, k);
                     MapRM dA(an->grad.data(), m, k);
                     dA.noalias() += G * B;
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     CMapRM A(an->data.data(), m, k);
                     MapRM dB(bn->grad.data(), nn, k);
                     dB.noalias() += G.transpose() * A;
                   }
                 });
}

// ---- row ops -------------------------------------------------------------

Tensor normalize_rows(const Tensor& x, double eps) {
  if (x.shape().size() != 2)
    fail(ErrorKind::ShapeMismatch, "normalize_rows: expects 2D");
  int N = x.shape()[0], D = x.shape()[1];
  const auto& xv = x.data();
  std::vector<double> out(xv.size());
  std::vector<double> norms(N);
  for (int r = 0; r < N; ++r) {
    double s = 0.0;
    for (int j = 0; j < D; ++j) {
      double v = xv[static_cast<size_t>(r) * D + j];
      s += v * v;
    }
    double norm = std::sqrt(s) + eps;
    norms[r] = norm;
    for (int j = 0; j < D; ++j)
      out[static_cast<size_t>(r) * D + j] = xv[static_cast<size_t>(r) * D + j] / norm;
  }
  auto xn = x.node();
  auto nm = std::make_shared<std::vector<double>>(std::move(norms));
  return make_op(x.shape(), std::move(out), {x}, [xn, nm, N, D](TensorNode& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    // y = x / (||x|| + eps); dy_j/dx_i = delta_ij/norm - x_i x_j /(norm^2 ||x||)
    for (int r = 0; r < N; ++r) {
      size_t off = static_cast<size_t>(r) * D;
      double norm = (*nm)[r];
      double xnorm = 0.0;
      for (int j = 0; j < D; ++j) xnorm += xn->data[off + j] * xn->data[off + j];
      xnorm = std::sqrt(xnorm);
      double dot = 0.0;  // g . x
      for (int j = 0; j < D; ++j) dot += n.grad[off + j] * xn->data[off + j];
      double denom = norm * norm * std::max(xnorm, 1e-300);
      for (int j = 0; j < D; ++j)
        xn->grad[off + j] +=
            n.grad[off + j] / norm - xn->data[off + j] * dot / denom;
    }
  });
}

Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>& valid,
                    double scale) {
  if (x.shape().size() != 2)
    fail(ErrorKind::ShapeMismatch, "softmax_rows: expects 2D");
  int N = x.shape()[0], D = x.shape()[1];
  if (static_cast<int>(valid.size()) != D)
    fail(ErrorKind::ShapeMismatch, "softmax_rows: valid mask size");
  bool any_valid = false;
  for (auto v : valid) any_valid = any_valid || (v != 0);
  if (!any_valid) fail(ErrorKind::NoBackground, "softmax_rows: no valid column");
  const auto& xv = x.data();
  std::vector<double> out(xv.size(), 0.0);
  for (int r = 0; r < N; ++r) {
    size_t off = static_cast<size_t>(r) * D;
    double mx = -1e300;
    for (int j = 0; j < D; ++j)
      if (valid[j]) mx = std::max(mx, scale * xv[off + j]);
    double z = 0.0;
    for (int j = 0; j < D; ++j)
      if (valid[j]) z += std::exp(scale * xv[off + j] - mx);
    for (int j = 0; j < D; ++j)
      if (valid[j]) out[off + j] = std::exp(scale * xv[off + j] - mx) / z;
  }
  auto xn = x.node();
  auto vm = std::make_shared<std::vector<uint8_t>>(valid);
  return make_op(x.shape(), std::move(out), {x},
                 [xn, vm, N, D, scale](TensorNode& n) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   for (int r = 0; r < N; ++r) {
                     size_t off = static_cast<size_t>(r) * D;
                     double dot = 0.0;
                     for (int j = 0; j < D; ++j)
                       dot += n.grad[off + j] * n.data[off + j];
                     for (int j = 0; j < D; ++j) {
                       if (!(*vm)[j]) continue;
                       xn->grad[off + j] += scale * n.data[off + j] *
                                            (n.grad[off + j] - dot);
                     }
                   }
                 });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::BadArgument, "concat_rows: empty");
  int D = parts[0].shape()[1];
  int N = 0;
  for (auto& p : parts) {
    if (p.shape().size() != 2 || p.shape()[1] != D)
      fail(ErrorKind::ShapeMismatch, "concat_rows: column mismatch");
    N += p.shape()[0];
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(N) * D);
  for (auto& p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<TensorNodePtr> pn;
  for (auto& p : parts) pn.push_back(p.node());
  return make_op({N, D}, std::move(out), parts, [pn](TensorNode& n) {
    size_t off = 0;
    for (auto& p : pn) {
      size_t sz = p->data.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (size_t i = 0; i < sz; ++i) p->grad[i] += n.grad[off + i];
      }
      off += sz;
    }
  });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  if (x.shape().size() != 2 || r0 < 0 || r1 > x.shape()[0] || r0 >= r1)
    fail(ErrorKind::ShapeMismatch, "slice_rows: bad range");
  int D = x.shape()[1];
  std::vector<double> out(x.data().begin() + static_cast<size_t>(r0) * D,
                          x.data().begin() + static_cast<size_t>(r1) * D);
  auto xn = x.node();
  return make_op({r1 - r0, D}, std::move(out), {x}, [xn, r0, D](TensorNode& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    size_t off = static_cast<size_t>(r0) * D;
    for (size_t i = 0; i < n.data.size(); ++i) xn->grad[off + i] += n.grad[i];
  });
}

// ---- channel ops ---------------------------------------------------------

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::BadArgument, "concat_channels: empty");
  int H = parts[0].shape()[1], W = parts[0].shape()[2];
  int C = 0;
  for (auto& p : parts) {
    if (p.shape().size() != 3 || p.shape()[1] != H || p.shape()[2] != W)
      fail(ErrorKind::ShapeMismatch, "concat_channels: spatial mismatch");
    C += p.shape()[0];
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(C) * H * W);
  for (auto& p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<TensorNodePtr> pn;
  for (auto& p : parts) pn.push_back(p.node());
  return make_op({C, H, W}, std::move(out), parts, [pn](TensorNode& n) {
    size_t off = 0;
    for (auto& p : pn) {
      size_t sz = p->data.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (size_t i = 0; i < sz; ++i) p->grad[i] += n.grad[off + i];
      }
      off += sz;
    }
  });
}

Tensor slice_channels(const Tensor& x, int c0, int c1) {
  if (x.shape().size() != 3 || c0 < 0 || c1 > x.shape()[0] || c0 >= c1)
    fail(ErrorKind::ShapeMismatch, "slice_channels: bad range");
  int H = x.shape()[1], W = x.shape()[2];
  size_t plane = static_cast<size_t>(H) * W;
  std::vector<double> out(x.data().begin() + c0 * plane,
                          x.data().begin() + c1 * plane);
  auto xn = x.node();
  return make_op({c1 - c0, H, W}, std::move(out), {x},
                 [xn, c0, plane](TensorNode& n) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   size_t off = c0 * plane;
                   for (size_t i = 0; i < n.data.size(); ++i)
                     xn->grad[off + i] += n.grad[i];
                 });
}

Tensor upsample_nearest2(const Tensor& x) {
  if (x.shape().size() != 3)
    fail(ErrorKind::ShapeMismatch, "upsample_nearest2: expects (C,H,W)");
  int C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  int H2 = 2 * H, W2 = 2 * W;
  std::vector<double> out(static_cast<size_t>(C) * H2 * W2);
  const auto& xv = x.data();
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H2; ++y)
      for (int xx = 0; xx < W2; ++xx)
        out[(static_cast<size_t>(c) * H2 + y) * W2 + xx] =
            xv[(static_cast<size_t>(c) * H + y / 2) * W + xx / 2];
  auto xn = x.node();
  return make_op({C, H2, W2}, std::move(out), {x},
                 [xn, C, H, W, H2, W2](TensorNode& n) {
                   if (!xn->requires_grad) return;
                   xn->ensure_grad();
                   for (int c = 0; c < C; ++c)
                     for (int y = 0; y < H2; ++y)
                       for (int xx = 0; xx < W2; ++xx)
                         xn->grad[(static_cast<size_t>(c) * H + y / 2) * W +
                                  xx / 2] +=
                             n.grad[(static_cast<size_t>(c) * H2 + y) * W2 + xx];
                 });
}

// ---- conv2d --------------------------------------------------------------

namespace {
struct ConvGeom {
  int Ci, H, W, Co, kh, kw, stride, pad, dil, OH, OW;
};

void im2col(const std::vector<double>& x, const ConvGeom& g,
            std::vector<double>& cols) {
  // cols: (Ci*kh*kw, OH*OW) row-major
  int K = g.Ci * g.kh * g.kw;
  int P = g.OH * g.OW;
  cols.assign(static_cast<size_t>(K) * P, 0.0);
  for (int c = 0; c < g.Ci; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        int row = (c * g.kh + ky) * g.kw + kx;
        for (int oy = 0; oy < g.OH; ++oy) {
          int iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= g.H) continue;
          for (int ox = 0; ox < g.OW; ++ox) {
            int ix = ox * g.stride - g.pad + kx * g.dil;
            if (ix < 0 || ix >= g.W) continue;
            cols[static_cast<size_t>(row) * P + oy * g.OW + ox] =
                x[(static_cast<size_t>(c) * g.H + iy) * g.W + ix];
          }
        }
      }
}

void col2im_acc(const std::vector<double>& cols, const ConvGeom& g,
                std::vector<double>& x_grad) {
  int P = g.OH * g.OW;
  for (int c = 0; c < g.Ci; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        int row = (c * g.kh + ky) * g.kw + kx;
        for (int oy = 0; oy < g.OH; ++oy) {
          int iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= g.H) continue;
          for (int ox = 0; ox < g.OW; ++ox) {
            int ix = ox * g.stride - g.pad + kx * g.dil;
            if (ix < 0 || ix >= g.W) continue;
            x_grad[(static_cast<size_t>(c) * g.H + iy) * g.W + ix] +=
                cols[static_cast<size_t>(row) * P + oy * g.OW + ox];
          }
        }
      }
}
}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad, int dilation) {
  if (x.shape().size() != 3 || w.shape().size() != 4)
    fail(ErrorKind::ShapeMismatch, "conv2d: expects x(C,H,W), w(Co,Ci,kh,kw)");
  ConvGeom g;
  g.Ci = x.shape()[0]; g.H = x.shape()[1]; g.W = x.shape()[2];
  g.Co = w.shape()[0]; g.kh = w.shape()[2]; g.kw = w.shape()[3];
  g.stride = stride; g.pad = pad; g.dil = dilation;
  if (w.shape()[1] != g.Ci)
    fail(ErrorKind::ShapeMismatch, "conv2d: channel mismatch");
  g.OH = (g.H + 2 * pad - dilation * (g.kh - 1) - 1) / stride + 1;
  g.OW = (g.W + 2 * pad - dilation * (g.kw - 1) - 1) / stride + 1;
  if (g.OH <= 0 || g.OW <= 0)
    fail(ErrorKind::ShapeMismatch, "conv2d: kernel larger than padded input");
  bool has_bias = b.defined();
  if (has_bias && (b.shape().size() != 1 || b.shape()[0] != g.Co))
    fail(ErrorKind::ShapeMismatch, "conv2d: bias shape");

  int K = g.Ci * g.kh * g.kw;
  int P = g.OH * g.OW;
  std::vector<double> cols;
  im2col(x.data(), g, cols);
  std::vector<double> out(static_cast<size_t>(g.Co) * P);
  {
    CMapRM Wm(w.data().data(), g.Co, K);
    CMapRM Cm(cols.data(), K, P);
    MapRM Om(out.data(), g.Co, P);
    Om.noalias() = Wm * Cm;
    if (has_bias)
      for (int co = 0; co < g.Co; ++co)
        Om.row(co).array() += b.data()[co];
  }
  auto xn = x.node();
  auto wn = w.node();
  auto cols_sh = std::make_shared<std::vector<double>>(std::move(cols));
  std::vector<Tensor> parents = {x, w};
  if (has_bias) parents.push_back(b);
  auto bn = has_bias ? b.node() : nullptr;
  return make_op(
      {g.Co, g.OH, g.OW}, std::move(out), parents,
      [xn, wn, bn, g, K, P, cols_sh](TensorNode& n) {
        CMapRM G(n.grad.data(), g.Co, P);
        if (wn->requires_grad) {
          wn->ensure_grad();
          CMapRM Cm(cols_sh->data(), K, P);
          MapRM dW(wn->grad.data(), g.Co, K);
          dW.noalias() += G * Cm.transpose();
        }
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          for (int co = 0; co < g.Co; ++co)
            bn->grad[co] += G.row(co).sum();
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          std::vector<double> dcols(static_cast<size_t>(K) * P);
          CMapRM Wm(wn->data.data(), g.Co, K);
          MapRM dC(dcols.data(), K, P);
          dC.noalias() = Wm.transpose() * G;
          col2im_acc(dcols, g, xn->grad);
        }
      });
}

// ---- patch extract / fold ------------------------------------------------

namespace {
struct PatchGeom {
  int C, H, W, k, stride;
  bool same_pad;
  int OH, OW, pad_top, pad_left;
  int N() const { return OH * OW; }
};

PatchGeom patch_geom(const Shape& s, int k, int stride, bool same_pad) {
  PatchGeom g;
  g.C = s[0]; g.H = s[1]; g.W = s[2]; g.k = k; g.stride = stride;
  g.same_pad = same_pad;
  if (same_pad) {
    g.OH = (g.H + stride - 1) / stride;
    g.OW = (g.W + stride - 1) / stride;
    int ph = std::max(0, (g.OH - 1) * stride + k - g.H);
    int pw = std::max(0, (g.OW - 1) * stride + k - g.W);
    g.pad_top = ph / 2;
    g.pad_left = pw / 2;
  } else {
    if (g.H < k || g.W < k)
      fail(ErrorKind::ShapeMismatch, "extract_patches: kernel larger than map");
    g.OH = (g.H - k) / stride + 1;
    g.OW = (g.W - k) / stride + 1;
    g.pad_top = 0;
    g.pad_left = 0;
  }
  return g;
}
}  // namespace

Tensor extract_patches_t(const Tensor& x, int k, int stride, bool same_pad) {
  if (x.shape().size() != 3)
    fail(ErrorKind::ShapeMismatch, "extract_patches: expects (C,H,W)");
  if (stride < 1 || k < 1)
    fail(ErrorKind::BadArgument, "extract_patches: k and stride must be >= 1");
  PatchGeom g = patch_geom(x.shape(), k, stride, same_pad);
  int D = g.C * k * k;
  int N = g.N();
  std::vector<double> out(static_cast<size_t>(N) * D, 0.0);
  const auto& xv = x.data();
  for (int oy = 0; oy < g.OH; ++oy)
    for (int ox = 0; ox < g.OW; ++ox) {
      int r = oy * g.OW + ox;
      int y0 = oy * stride - g.pad_top;
      int x0 = ox * stride - g.pad_left;
      for (int c = 0; c < g.C; ++c)
        for (int ky = 0; ky < k; ++ky) {
          int iy = y0 + ky;
          if (iy < 0 || iy >= g.H) continue;
          for (int kx = 0; kx < k; ++kx) {
            int ix = x0 + kx;
            if (ix < 0 || ix >= g.W) continue;
            out[static_cast<size_t>(r) * D + (c * k + ky) * k + kx] =
                xv[(static_cast<size_t>(c) * g.H + iy) * g.W + ix];
          }
        }
    }
  auto xn = x.node();
  return make_op({N, D}, std::move(out), {x}, [xn, g, k, D](TensorNode& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int oy = 0; oy < g.OH; ++oy)
      for (int ox = 0; ox < g.OW; ++ox) {
        int r = oy * g.OW + ox;
        int y0 = oy * g.stride - g.pad_top;
        int x0 = ox * g.stride - g.pad_left;
        for (int c = 0; c < g.C; ++c)
          for (int ky = 0; ky < k; ++ky) {
            int iy = y0 + ky;
            if (iy < 0 || iy >= g.H) continue;
            for (int kx = 0; kx < k; ++kx) {
              int ix = x0 + kx;
              if (ix < 0 || ix >= g.W) continue;
              xn->grad[(static_cast<size_t>(c) * g.H + iy) * g.W + ix] +=
                  n.grad[static_cast<size_t>(r) * D + (c * k + ky) * k + kx];
            }
          }
      }
  });
}

Tensor fold_patches_t(const Tensor& patches, int C, int H, int W, int k,
                      int stride, bool same_pad) {
  PatchGeom g = patch_geom({C, H, W}, k, stride, same_pad);
  int D = C * k * k;
  int N = g.N();
  if (patches.shape().size() != 2 || patches.shape()[0] != N ||
      patches.shape()[1] != D)
    fail(ErrorKind::ShapeMismatch, "fold_patches: patch matrix shape");
  std::vector<double> out(static_cast<size_t>(C) * H * W, 0.0);
  std::vector<double> counts(static_cast<size_t>(H) * W, 0.0);
  const auto& pv = patches.data();
  for (int oy = 0; oy < g.OH; ++oy)
    for (int ox = 0; ox < g.OW; ++ox) {
      int r = oy * g.OW + ox;
      int y0 = oy * stride - g.pad_top;
      int x0 = ox * stride - g.pad_left;
      for (int ky = 0; ky < k; ++ky) {
        int iy = y0 + ky;
        if (iy < 0 || iy >= H) continue;
        for (int kx = 0; kx < k; ++kx) {
          int ix = x0 + kx;
          if (ix < 0 || ix >= W) continue;
          counts[static_cast<size_t>(iy) * W + ix] += 1.0;
          for (int c = 0; c < C; ++c)
            out[(static_cast<size_t>(c) * H + iy) * W + ix] +=
                pv[static_cast<size_t>(r) * D + (c * k + ky) * k + kx];
        }
      }
    }
  for (int c = 0; c < C; ++c)
    for (size_t p = 0; p < counts.size(); ++p)
      if (counts[p] > 0)
        out[static_cast<size_t>(c) * H * W + p] /= counts[p];
  auto pn = patches.node();
  auto cnt = std::make_shared<std::vector<double>>(std::move(counts));
  return make_op({C, H, W}, std::move(out), {patches},
                 [pn, cnt, g, C, H, W, k, D](TensorNode& n) {
                   if (!pn->requires_grad) return;
                   pn->ensure_grad();
                   for (int oy = 0; oy < g.OH; ++oy)
                     for (int ox = 0; ox < g.OW; ++ox) {
                       int r = oy * g.OW + ox;
                       int y0 = oy * g.stride - g.pad_top;
                       int x0 = ox * g.stride - g.pad_left;
                       for (int ky = 0; ky < k; ++ky) {
                         int iy = y0 + ky;
                         if (iy < 0 || iy >= H) continue;
                         for (int kx = 0; kx < k; ++kx) {
                           int ix = x0 + kx;
                           if (ix < 0 || ix >= W) continue;
                           double cdiv = (*cnt)[static_cast<size_t>(iy) * W + ix];
                           for (int c = 0; c < C; ++c)
                             pn->grad[static_cast<size_t>(r) * D +
                                      (c * k + ky) * k + kx] +=
                                 n.grad[(static_cast<size_t>(c) * H + iy) * W +
                                        ix] /
                                 cdiv;
                         }
                       }
                     }
                 });
}

double finite_diff(const std::function<double(double)>& f, double x0,
                   double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace ar
