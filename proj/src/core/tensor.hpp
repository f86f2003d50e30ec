#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "../errors.hpp"

namespace ar {

using Shape = std::vector<int>;

int64_t numel_of(const Shape& s);

struct TensorNode;
using TensorNodePtr = std::shared_ptr<TensorNode>;

// Reverse-mode autograd node. Data is row-major double.
struct TensorNode {
  std::vector<double> data;
  std::vector<double> grad;  // lazily sized to data.size()
  Shape shape;
  bool requires_grad = false;
  std::vector<TensorNodePtr> parents;
  std::function<void(TensorNode&)> backward_fn;  // accumulates into parents
  int topo_mark = 0;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

// Value-semantics handle on a shared autograd node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorNodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return static_cast<int64_t>(node_->data.size()); }
  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  TensorNodePtr node() const { return node_; }

  double item() const;

  // Backprop from this scalar tensor.
  void backward();
  void zero_grad();

 private:
  TensorNodePtr node_;
};

// -- construction helpers --------------------------------------------------

Tensor make_op(const Shape& shape, std::vector<double> data,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn);

// -- elementwise (same shape) ----------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

// Elementwise multiply by a constant (no gradient to the constant).
Tensor mul_const(const Tensor& a, const std::vector<double>& c);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// -- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// -- linear algebra --------------------------------------------------------

// (m,k) x (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);
// (m,k) x (n,k)^T -> (m,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// -- row-structured ops (matrices (N,D)) -----------------------------------

// Each row scaled to unit L2 norm; rows with norm < eps stay near zero.
Tensor normalize_rows(const Tensor& x, double eps = 1e-8);
// Softmax over columns of each row after scaling; columns with
// valid[j] == 0 are excluded (score -inf).
Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>& valid,
                    double scale);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int r0, int r1);

// -- image-structured ops (tensors (C,H,W)) --------------------------------

Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& x, int c0, int c1);
Tensor upsample_nearest2(const Tensor& x);

// 2D convolution, x (Ci,H,W), w (Co,Ci,kh,kw), b (Co) optional.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad, int dilation = 1);

// Patch extraction: rows are flattened k*k*C patches in row-major
// (c, ky, kx) order, scanned over output positions. With same_pad,
// positions cover ceil(H/stride) * ceil(W/stride) centers.
Tensor extract_patches_t(const Tensor& x, int k, int stride, bool same_pad);
// Adjoint overlap-add of patch rows back onto a (C,H,W) map, divided by
// per-pixel contribution counts.
Tensor fold_patches_t(const Tensor& patches, int C, int H, int W, int k,
                      int stride, bool same_pad);

// -- misc ------------------------------------------------------------------

// Numerical gradient of f at x via central differences (test helper).
double finite_diff(const std::function<double(double)>& f, double x0,
                   double h);

void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace ar
