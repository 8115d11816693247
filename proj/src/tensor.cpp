#include "denovo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "denovo/errors.hpp"

namespace denovo::ad {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_of(const Tensor& t) { return t.shape_str(); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_of(a) + " and " + shape_of(b));
}

// Allocates the output node; records parents only when a gradient can flow.
std::shared_ptr<Node> make_node(std::size_t rows, std::size_t cols, std::initializer_list<const Tensor*> inputs) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, 0.0);
  if (g_grad_enabled) {
    for (const Tensor* t : inputs) {
      if (t->requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) {
      for (const Tensor* t : inputs) n->parents.push_back(t->shared());
    }
  }
  return n;
}

std::shared_ptr<Node> make_node(std::size_t rows, std::size_t cols, const std::vector<Tensor>& inputs) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, 0.0);
  if (g_grad_enabled) {
    for (const auto& t : inputs) {
      if (t.requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) {
      for (const auto& t : inputs) n->parents.push_back(t.shared());
    }
  }
  return n;
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, 0.0);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) + " does not match shape [" +
                         std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

std::string Tensor::shape_str() const {
  if (!node_) return "[undefined]";
  return "[" + std::to_string(node_->rows) + "," + std::to_string(node_->cols) + "]";
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_str());
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  if (size() != 1) throw DomainError("backward() requires a scalar loss, got " + shape_str());
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n, {&a, &b});
  gemm_nn(a.data().data(), b.data().data(), out->value.data(), m, k, n);
  if (out->requires_grad) {
    out->backward_fn = [m, k, n](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.requires_grad) gemm_nt(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
      if (pb.requires_grad) gemm_tn(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, n);
    };
  }
  return Tensor(out);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  auto out = make_node(m, n, {&a, &b});
  gemm_nt(a.data().data(), b.data().data(), out->value.data(), m, k, n);
  if (out->requires_grad) {
    out->backward_fn = [m, k, n](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      // dA = dC * B ; dB = dC^T * A
      if (pa.requires_grad) gemm_nn(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
      if (pb.requires_grad) gemm_tn(self.grad.data(), pa.value.data(), pb.grad.data(), m, n, k);
    };
  }
  return Tensor(out);
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(c, r, {&a});
  const auto src = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->value[j * r + i] = src[i * c + j];
  if (out->requires_grad) {
    out->backward_fn = [r, c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j * r + i];
    };
  }
  return Tensor(out);
}

namespace {

Tensor add_impl(const Tensor& a, const Tensor& b, double sign, const char* name) {
  const bool bcast = is_row_broadcast(a, b);
  if (!bcast && (a.rows() != b.rows() || a.cols() != b.cols())) shape_error(name, a, b);
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c, {&a, &b});
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] = av[i * c + j] + sign * bv[bcast ? j : i * c + j];
  if (out->requires_grad) {
    out->backward_fn = [r, c, bcast, sign](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.requires_grad)
        for (std::size_t i = 0; i < r * c; ++i) pa.grad[i] += self.grad[i];
      if (pb.requires_grad) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) pb.grad[bcast ? j : i * c + j] += sign * self.grad[i * c + j];
      }
    };
  }
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_impl(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_impl(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const bool bcast = is_row_broadcast(a, b);
  if (!bcast && (a.rows() != b.rows() || a.cols() != b.cols())) shape_error("mul", a, b);
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c, {&a, &b});
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] = av[i * c + j] * bv[bcast ? j : i * c + j];
  if (out->requires_grad) {
    out->backward_fn = [r, c, bcast](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t ai = i * c + j, bi = bcast ? j : ai;
          if (pa.requires_grad) pa.grad[ai] += self.grad[ai] * pb.value[bi];
          if (pb.requires_grad) pb.grad[bi] += self.grad[ai] * pa.value[ai];
        }
      }
    };
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_node(a.rows(), a.cols(), {&a});
  const auto av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * s;
  if (out->requires_grad) {
    out->backward_fn = [s](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += s * self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  const std::size_t c = table.cols();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw DimensionError("embedding_lookup: id " + std::to_string(id) + " outside table " + table.shape_str());
    }
  }
  auto out = make_node(ids.size(), c, {&table});
  const auto tv = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * c, c, out->value.data() + i * c);
  if (out->requires_grad) {
    std::vector<int> saved(ids.begin(), ids.end());
    out->backward_fn = [saved = std::move(saved), c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < saved.size(); ++i) {
        double* dst = p.grad.data() + static_cast<std::size_t>(saved[i]) * c;
        for (std::size_t j = 0; j < c; ++j) dst[j] += self.grad[i * c + j];
      }
    };
  }
  return Tensor(out);
}

Tensor softmax(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c, {&a});
  const auto av = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    double* y = out->value.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  if (out->requires_grad) {
    out->backward_fn = [r, c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = self.value.data() + i * c;
        const double* dy = self.grad.data() + i * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += y[j] * (dy[j] - dot);
      }
    };
  }
  return Tensor(out);
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c, {&a});
  const auto av = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    double* y = out->value.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) y[j] = x[j] - lse;
  }
  if (out->requires_grad) {
    out->backward_fn = [r, c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = self.value.data() + i * c;
        const double* dy = self.grad.data() + i * c;
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) total += dy[j];
        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += dy[j] - std::exp(y[j]) * total;
      }
    };
  }
  return Tensor(out);
}

Tensor normalize_rows(const Tensor& a, double eps) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c, {&a});
  std::vector<double> inv_std(r);
  const auto av = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += x[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] = (x[j] - mu) * inv_std[i];
  }
  if (out->requires_grad) {
    out->backward_fn = [r, c, inv_std = std::move(inv_std)](Node& self) {
      Node& p = *self.parents[0];
      const double inv_c = 1.0 / static_cast<double>(c);
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = self.value.data() + i * c;
        const double* dy = self.grad.data() + i * c;
        double mean_dy = 0.0, mean_dyy = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          mean_dy += dy[j];
          mean_dyy += dy[j] * y[j];
        }
        mean_dy *= inv_c;
        mean_dyy *= inv_c;
        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += inv_std[i] * (dy[j] - mean_dy - y[j] * mean_dyy);
      }
    };
  }
  return Tensor(out);
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps) {
  return add(mul(normalize_rows(a, eps), gamma), beta);
}

Tensor gelu(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols(), {&a});
  const auto av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    out->value[i] = 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  }
  if (out->requires_grad) {
    out->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double x = p.value[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
        p.grad[i] += self.grad[i] * (cdf + x * pdf);
      }
    };
  }
  return Tensor(out);
}

Tensor relu(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols(), {&a});
  const auto av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] > 0 ? av[i] : 0.0;
  if (out->requires_grad) {
    out->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (p.value[i] > 0) p.grad[i] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& t : parts) {
    if (t.cols() != c) shape_error("concat_rows", parts[0], t);
    r += t.rows();
  }
  auto out = make_node(r, c, parts);
  std::size_t off = 0;
  for (const auto& t : parts) {
    std::copy(t.data().begin(), t.data().end(), out->value.begin() + static_cast<std::ptrdiff_t>(off));
    off += t.size();
  }
  if (out->requires_grad) {
    out->backward_fn = [](Node& self) {
      std::size_t o = 0;
      for (auto& p : self.parents) {
        if (p->requires_grad)
          for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += self.grad[o + i];
        o += p->value.size();
      }
    };
  }
  return Tensor(out);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& t : parts) {
    if (t.rows() != r) shape_error("concat_cols", parts[0], t);
    c += t.cols();
  }
  auto out = make_node(r, c, parts);
  std::size_t col = 0;
  for (const auto& t : parts) {
    const std::size_t tc = t.cols();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(t.row(i), tc, out->value.data() + i * c + col);
    col += tc;
  }
  if (out->requires_grad) {
    out->backward_fn = [r, c](Node& self) {
      std::size_t col0 = 0;
      for (auto& p : self.parents) {
        const std::size_t pc = p->cols;
        if (p->requires_grad)
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < pc; ++j) p->grad[i * pc + j] += self.grad[i * c + col0 + j];
        col0 += pc;
      }
    };
  }
  return Tensor(out);
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) + ") outside " +
                         a.shape_str());
  }
  const std::size_t c = a.cols();
  auto out = make_node(end - begin, c, {&a});
  std::copy_n(a.data().data() + begin * c, (end - begin) * c, out->value.data());
  if (out->requires_grad) {
    out->backward_fn = [begin, c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[begin * c + i] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) + ") outside " +
                         a.shape_str());
  }
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  auto out = make_node(r, w, {&a});
  for (std::size_t i = 0; i < r; ++i) std::copy_n(a.row(i) + begin, w, out->value.data() + i * w);
  if (out->requires_grad) {
    out->backward_fn = [r, c, w, begin](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) p.grad[i * c + begin + j] += self.grad[i * w + j];
    };
  }
  return Tensor(out);
}

Tensor select_rows(const Tensor& a, std::span<const std::size_t> rows) {
  const std::size_t c = a.cols();
  for (std::size_t r : rows) {
    if (r >= a.rows()) throw DimensionError("select_rows: row " + std::to_string(r) + " outside " + a.shape_str());
  }
  auto out = make_node(rows.size(), c, {&a});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(a.row(rows[i]), c, out->value.data() + i * c);
  if (out->requires_grad) {
    std::vector<std::size_t> saved(rows.begin(), rows.end());
    out->backward_fn = [saved = std::move(saved), c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < saved.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) p.grad[saved[i] * c + j] += self.grad[i * c + j];
    };
  }
  return Tensor(out);
}

Tensor pick(const Tensor& a, std::span<const int> cols) {
  if (cols.size() != a.rows()) {
    throw DimensionError("pick: " + std::to_string(cols.size()) + " indices for " + a.shape_str());
  }
  const std::size_t c = a.cols();
  for (int j : cols) {
    if (j < 0 || static_cast<std::size_t>(j) >= c) throw DimensionError("pick: column " + std::to_string(j) + " outside " + a.shape_str());
  }
  auto out = make_node(a.rows(), 1, {&a});
  for (std::size_t i = 0; i < cols.size(); ++i) out->value[i] = a.at(i, static_cast<std::size_t>(cols[i]));
  if (out->requires_grad) {
    std::vector<int> saved(cols.begin(), cols.end());
    out->backward_fn = [saved = std::move(saved), c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < saved.size(); ++i) p.grad[i * c + static_cast<std::size_t>(saved[i])] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor sum_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, 1, {&a});
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += a.at(i, j);
    out->value[i] = s;
  }
  if (out->requires_grad) {
    out->backward_fn = [r, c](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor sum(const Tensor& a) {
  auto out = make_node(1, 1, {&a});
  double s = 0.0;
  for (double v : a.data()) s += v;
  out->value[0] = s;
  if (out->requires_grad) {
    out->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      for (auto& g : p.grad) g += self.grad[0];
    };
  }
  return Tensor(out);
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& mask, int heads) {
  if (heads < 1 || q.cols() % static_cast<std::size_t>(heads) != 0) {
    throw DimensionError("attention: head count " + std::to_string(heads) + " does not divide model dim " +
                         std::to_string(q.cols()));
  }
  if (q.cols() != k.cols()) shape_error("attention(q,k)", q, k);
  if (k.rows() != v.rows() || v.cols() != q.cols()) shape_error("attention(k,v)", k, v);
  if (mask.defined() && (mask.rows() != q.rows() || mask.cols() != k.rows())) shape_error("attention(mask)", q, mask);

  const std::size_t dh = q.cols() / static_cast<std::size_t>(heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const std::size_t b = static_cast<std::size_t>(h) * dh, e = b + dh;
    const Tensor qh = heads == 1 ? q : slice_cols(q, b, e);
    const Tensor kh = heads == 1 ? k : slice_cols(k, b, e);
    const Tensor vh = heads == 1 ? v : slice_cols(v, b, e);
    Tensor scores = scale(matmul_nt(qh, kh), inv_sqrt);
    if (mask.defined()) scores = add(scores, mask);
    outs.push_back(matmul(softmax(scores), vh));
  }
  return heads == 1 ? outs[0] : concat_cols(outs);
}

Tensor causal_mask(std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = -std::numeric_limits<double>::infinity();
  return Tensor::from(n, n, std::move(m));
}

}  // namespace denovo::ad
