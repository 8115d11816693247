#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

// Dense row-major matrices with tape-free reverse-mode autodiff. Every tensor
// is two-dimensional; vectors are [1, n] and scalars [1, 1]. Values are double
// precision throughout, which also serves as the gradient-check mode.
namespace denovo::ad {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward() touches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false) { return from(1, 1, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  std::string shape_str() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  const double* row(std::size_t r) const { return node_->value.data() + r * node_->cols; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  // Reverse pass from a [1,1] tensor; gradients accumulate into every
  // reachable node that requires them.
  void backward() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// a[m,k] * b[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// a[m,k] * b[n,k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise; b may also be a [1, cols] row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

Tensor softmax(const Tensor& a);      // over the last axis
Tensor log_softmax(const Tensor& a);  // over the last axis
Tensor normalize_rows(const Tensor& a, double eps = 1e-5);  // zero mean, unit variance
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor gelu(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor select_rows(const Tensor& a, std::span<const std::size_t> rows);
// out[i] = a[i, cols[i]], shape [rows, 1].
Tensor pick(const Tensor& a, std::span<const int> cols);
Tensor sum_rows(const Tensor& a);  // [r,c] -> [r,1]
Tensor sum(const Tensor& a);       // -> [1,1]
Tensor mean(const Tensor& a);      // -> [1,1]

// softmax(q k^T / sqrt(d_head) + mask) v with the model dimension split into
// `heads` slices and merged back. mask is additive [q_rows, k_rows] or undefined.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& mask, int heads);

// Additive mask with -inf strictly above the diagonal.
Tensor causal_mask(std::size_t n);

}  // namespace denovo::ad
