#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "satlab/rng.hpp"

namespace satlab {

// Dense 2-D tensor of doubles, row-major. Vectors are n x 1 or 1 x n.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return full(1, 1, v); }
  static Tensor randn(int r, int c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (auto& x : t.data) x = rng.normal() * scale;
    return t;
  }
  static Tensor row_from(const std::vector<double>& v) {
    Tensor t(1, static_cast<int>(v.size()));
    t.data = v;
    return t;
  }
  static Tensor col_from(const std::vector<double>& v) {
    Tensor t(static_cast<int>(v.size()), 1);
    t.data = v;
    return t;
  }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }
  bool has_nonfinite() const;
  double norm() const;
};

// Reverse-mode tape. Nodes are appended in topological order by construction;
// backward visits them once in reverse. One tape per forward pass, single
// threaded; parameters live outside and are copied in as leaves.
class Tape {
 public:
  using Id = int;

  Id leaf(Tensor t, bool requires_grad = false);
  Id constant(Tensor t) { return leaf(std::move(t), false); }

  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id concat_cols(Id a, Id b);
  Id concat_rows(Id a, Id b);
  Id slice_cols(Id a, int start, int len);
  Id slice_rows(Id a, int start, int len);
  Id sum_all(Id a);
  Id mean_all(Id a);
  Id sum_axis(Id a, int axis);   // axis 0: collapse rows -> 1 x c; axis 1: r x 1
  Id mean_axis(Id a, int axis);
  Id sigmoid(Id a);
  Id tanh(Id a);
  Id relu(Id a);
  Id softplus(Id a);
  Id affine(Id a, double scale, double shift);  // scale*x + shift
  Id add_rowvec(Id a, Id row);                  // broadcast 1 x c over rows
  Id row_l2_normalize(Id a);
  Id gather_rows(Id a, std::vector<int> idx);
  Id scatter_add_rows(Id a, std::vector<int> dst, int out_rows);
  // Per-group product of entries of a column vector; result is G x 1.
  Id group_prod(Id a, std::vector<std::vector<int>> groups);

  void backward(Id loss);

  const Tensor& value(Id id) const { return nodes_[id].value; }
  const Tensor& grad(Id id) const;
  bool has_grad(Id id) const { return nodes_[id].grad.size() > 0; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = false;
    std::function<void(Tape&)> back;  // empty for leaves / no-grad nodes
  };

  Id push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
  bool needs_grad(Id id) const { return nodes_[id].requires_grad; }
  Tensor& grad_buf(Id id);
  void accumulate(Id id, const Tensor& g);

  std::vector<Node> nodes_;
  friend struct TapeAccess;
};

// Clip a set of gradients in place by global L2 norm; returns the pre-clip norm.
double clip_by_global_norm(std::vector<Tensor*> grads, double max_norm);

}  // namespace satlab
