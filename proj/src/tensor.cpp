#include "satlab/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace satlab {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

namespace {
ECMap emap(const Tensor& t) { return ECMap(t.data.data(), t.rows, t.cols); }
EMap emap(Tensor& t) { return EMap(t.data.data(), t.rows, t.cols); }

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}
}  // namespace

bool Tensor::has_nonfinite() const {
  for (double x : data)
    if (!std::isfinite(x)) return true;
  return false;
}

double Tensor::norm() const {
  double s = 0;
  for (double x : data) s += x * x;
  return std::sqrt(s);
}

Tape::Id Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.back = requires_grad ? std::move(back) : std::function<void(Tape&)>();
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::leaf(Tensor t, bool requires_grad) {
  Id id = push(std::move(t), requires_grad, {});
  nodes_[id].is_leaf = true;
  return id;
}

Tensor& Tape::grad_buf(Id id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor::zeros(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::accumulate(Id id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& dst = grad_buf(id);
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.data[i];
}

const Tensor& Tape::grad(Id id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0)
    throw std::logic_error("grad: no gradient recorded for node " + std::to_string(id));
  return n.grad;
}

// Each op pushes its node first, then installs a backward closure that
// captures the node id and whatever forward-pass context it needs by value.
#define SATLAB_DEFINE_OP(result_tensor, requires_expr, ...)             \
  Id id = push(std::move(result_tensor), (requires_expr), {});          \
  if (nodes_[id].requires_grad) {                                       \
    nodes_[id].back = [=](Tape& t) __VA_ARGS__;                         \
  }                                                                     \
  return id;

Tape::Id Tape::matmul(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols != B.rows) shape_error("matmul", A, B);
  Tensor out(A.rows, B.cols);
  emap(out).noalias() = emap(A) * emap(B);
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    const Tensor& Bv = t.value(b);
    if (t.needs_grad(a)) {
      Tensor ga(Av.rows, Av.cols);
      emap(ga).noalias() = emap(g) * emap(Bv).transpose();
      t.accumulate(a, ga);
    }
    if (t.needs_grad(b)) {
      Tensor gb(Bv.rows, Bv.cols);
      emap(gb).noalias() = emap(Av).transpose() * emap(g);
      t.accumulate(b, gb);
    }
  })
}

Tape::Id Tape::transpose(Id a) {
  const Tensor& A = value(a);
  Tensor out(A.cols, A.rows);
  emap(out) = emap(A).transpose();
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga(t.value(a).rows, t.value(a).cols);
    emap(ga) = emap(g).transpose();
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] + B.data[i];
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    t.accumulate(a, t.grad(id));
    t.accumulate(b, t.grad(id));
  })
}

Tape::Id Tape::sub(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] - B.data[i];
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    t.accumulate(a, t.grad(id));
    const Tensor& g = t.grad(id);
    Tensor neg(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) neg.data[i] = -g.data[i];
    t.accumulate(b, neg);
  })
}

Tape::Id Tape::mul(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] * B.data[i];
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    const Tensor& Bv = t.value(b);
    Tensor ga(g.rows, g.cols), gb(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] = g.data[i] * Bv.data[i];
      gb.data[i] = g.data[i] * Av.data[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  })
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rows != B.rows) shape_error("concat_cols", A, B);
  Tensor out(A.rows, A.cols + B.cols);
  for (int r = 0; r < A.rows; ++r) {
    for (int c = 0; c < A.cols; ++c) out(r, c) = A(r, c);
    for (int c = 0; c < B.cols; ++c) out(r, A.cols + c) = B(r, c);
  }
  int acols = A.cols, bcols = B.cols;
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    const Tensor& g = t.grad(id);
    Tensor ga(g.rows, acols), gb(g.rows, bcols);
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < acols; ++c) ga(r, c) = g(r, c);
      for (int c = 0; c < bcols; ++c) gb(r, c) = g(r, acols + c);
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  })
}

Tape::Id Tape::concat_rows(Id a, Id b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols != B.cols) shape_error("concat_rows", A, B);
  Tensor out(A.rows + B.rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), out.data.begin());
  std::copy(B.data.begin(), B.data.end(), out.data.begin() + A.data.size());
  int arows = A.rows;
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(b), {
    const Tensor& g = t.grad(id);
    Tensor ga(arows, g.cols), gb(g.rows - arows, g.cols);
    std::copy(g.data.begin(), g.data.begin() + ga.data.size(), ga.data.begin());
    std::copy(g.data.begin() + ga.data.size(), g.data.end(), gb.data.begin());
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  })
}

Tape::Id Tape::slice_cols(Id a, int start, int len) {
  const Tensor& A = value(a);
  if (start < 0 || start + len > A.cols)
    throw std::invalid_argument("slice_cols: [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of " + A.shape_str());
  Tensor out(A.rows, len);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < len; ++c) out(r, c) = A(r, start + c);
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga = Tensor::zeros(t.value(a).rows, t.value(a).cols);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < len; ++c) ga(r, start + c) = g(r, c);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::slice_rows(Id a, int start, int len) {
  const Tensor& A = value(a);
  if (start < 0 || start + len > A.rows)
    throw std::invalid_argument("slice_rows: range out of " + A.shape_str());
  Tensor out(len, A.cols);
  std::copy(A.data.begin() + static_cast<size_t>(start) * A.cols,
            A.data.begin() + static_cast<size_t>(start + len) * A.cols, out.data.begin());
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga = Tensor::zeros(t.value(a).rows, t.value(a).cols);
    std::copy(g.data.begin(), g.data.end(), ga.data.begin() + static_cast<size_t>(start) * ga.cols);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::sum_all(Id a) {
  const Tensor& A = value(a);
  double s = 0;
  for (double x : A.data) s += x;
  SATLAB_DEFINE_OP(Tensor::scalar(s), needs_grad(a), {
    double g = t.grad(id).data[0];
    const Tensor& Av = t.value(a);
    t.accumulate(a, Tensor::full(Av.rows, Av.cols, g));
  })
}

Tape::Id Tape::mean_all(Id a) {
  const Tensor& A = value(a);
  double s = 0;
  for (double x : A.data) s += x;
  double n = static_cast<double>(A.size());
  SATLAB_DEFINE_OP(Tensor::scalar(s / n), needs_grad(a), {
    double g = t.grad(id).data[0];
    const Tensor& Av = t.value(a);
    t.accumulate(a, Tensor::full(Av.rows, Av.cols, g / n));
  })
}

Tape::Id Tape::sum_axis(Id a, int axis) {
  const Tensor& A = value(a);
  if (axis != 0 && axis != 1) throw std::invalid_argument("sum_axis: axis must be 0 or 1");
  Tensor out = axis == 0 ? Tensor::zeros(1, A.cols) : Tensor::zeros(A.rows, 1);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) (axis == 0 ? out(0, c) : out(r, 0)) += A(r, c);
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    Tensor ga(Av.rows, Av.cols);
    for (int r = 0; r < Av.rows; ++r)
      for (int c = 0; c < Av.cols; ++c) ga(r, c) = axis == 0 ? g(0, c) : g(r, 0);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::mean_axis(Id a, int axis) {
  const Tensor& A = value(a);
  double n = axis == 0 ? A.rows : A.cols;
  Id s = sum_axis(a, axis);
  return affine(s, 1.0 / n, 0.0);
}

Tape::Id Tape::sigmoid(Id a) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < A.data.size(); ++i) {
    double x = A.data[i];
    out.data[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.value(id);
    Tensor ga(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] = g.data[i] * y.data[i] * (1.0 - y.data[i]);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::tanh(Id a) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < A.data.size(); ++i) out.data[i] = std::tanh(A.data[i]);
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.value(id);
    Tensor ga(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] = g.data[i] * (1.0 - y.data[i] * y.data[i]);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::relu(Id a) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < A.data.size(); ++i) out.data[i] = A.data[i] > 0 ? A.data[i] : 0.0;
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    Tensor ga(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] = Av.data[i] > 0 ? g.data[i] : 0.0;
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::softplus(Id a) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < A.data.size(); ++i) {
    double x = A.data[i];
    out.data[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    Tensor ga(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) {
      double x = Av.data[i];
      double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      ga.data[i] = g.data[i] * s;
    }
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::affine(Id a, double scale, double shift) {
  const Tensor& A = value(a);
  Tensor out(A.rows, A.cols);
  for (size_t i = 0; i < A.data.size(); ++i) out.data[i] = scale * A.data[i] + shift;
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] = scale * g.data[i];
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::add_rowvec(Id a, Id row) {
  const Tensor& A = value(a);
  const Tensor& R = value(row);
  if (R.rows != 1 || R.cols != A.cols) shape_error("add_rowvec", A, R);
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out(r, c) = A(r, c) + R(0, c);
  SATLAB_DEFINE_OP(out, needs_grad(a) || needs_grad(row), {
    const Tensor& g = t.grad(id);
    t.accumulate(a, g);
    Tensor gr = Tensor::zeros(1, g.cols);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) gr(0, c) += g(r, c);
    t.accumulate(row, gr);
  })
}

Tape::Id Tape::row_l2_normalize(Id a) {
  const Tensor& A = value(a);
  constexpr double kEps = 1e-12;
  Tensor out(A.rows, A.cols);
  std::vector<double> norms(A.rows);
  for (int r = 0; r < A.rows; ++r) {
    double s = 0;
    for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
    norms[r] = std::sqrt(s) + kEps;
    for (int c = 0; c < A.cols; ++c) out(r, c) = A(r, c) / norms[r];
  }
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.value(id);  // normalized rows
    Tensor ga(g.rows, g.cols);
    for (int r = 0; r < g.rows; ++r) {
      double dot = 0;
      for (int c = 0; c < g.cols; ++c) dot += g(r, c) * y(r, c);
      for (int c = 0; c < g.cols; ++c) ga(r, c) = (g(r, c) - dot * y(r, c)) / norms[r];
    }
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> idx) {
  const Tensor& A = value(a);
  Tensor out(static_cast<int>(idx.size()), A.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (int c = 0; c < A.cols; ++c) out(static_cast<int>(r), c) = A(idx[r], c);
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga = Tensor::zeros(t.value(a).rows, t.value(a).cols);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int c = 0; c < g.cols; ++c) ga(idx[r], c) += g(static_cast<int>(r), c);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::scatter_add_rows(Id a, std::vector<int> dst, int out_rows) {
  const Tensor& A = value(a);
  if (static_cast<int>(dst.size()) != A.rows)
    throw std::invalid_argument("scatter_add_rows: index count != rows");
  Tensor out = Tensor::zeros(out_rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out(dst[r], c) += A(r, c);
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    Tensor ga(t.value(a).rows, g.cols);
    for (int r = 0; r < ga.rows; ++r)
      for (int c = 0; c < g.cols; ++c) ga(r, c) = g(dst[r], c);
    t.accumulate(a, ga);
  })
}

Tape::Id Tape::group_prod(Id a, std::vector<std::vector<int>> groups) {
  const Tensor& A = value(a);
  if (A.cols != 1) throw std::invalid_argument("group_prod: input must be a column vector");
  Tensor out(static_cast<int>(groups.size()), 1);
  for (size_t gidx = 0; gidx < groups.size(); ++gidx) {
    double p = 1.0;
    for (int i : groups[gidx]) p *= A.data[i];
    out(static_cast<int>(gidx), 0) = p;
  }
  SATLAB_DEFINE_OP(out, needs_grad(a), {
    const Tensor& g = t.grad(id);
    const Tensor& Av = t.value(a);
    Tensor ga = Tensor::zeros(Av.rows, 1);
    for (size_t gidx = 0; gidx < groups.size(); ++gidx) {
      const auto& grp = groups[gidx];
      double go = g(static_cast<int>(gidx), 0);
      // product of all other members, recomputed per entry (groups are short)
      for (size_t k = 0; k < grp.size(); ++k) {
        double p = 1.0;
        for (size_t j = 0; j < grp.size(); ++j)
          if (j != k) p *= Av.data[grp[j]];
        ga.data[grp[k]] += go * p;
      }
    }
    t.accumulate(a, ga);
  })
}

#undef SATLAB_DEFINE_OP

void Tape::backward(Id loss) {
  if (value(loss).size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + value(loss).shape_str());
  grad_buf(loss).data[0] = 1.0;
  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this);
    // Activations of interior nodes are no longer needed once their
    // backward has run; release to bound peak memory on long unrolls.
    if (!n.is_leaf && id != loss) {
      // keep values required by closures of earlier nodes: closures capture
      // ids, not data, so values must survive until every consumer ran.
      // Consumers of node id appear after it on the tape and have already
      // been processed, so the value can go.
      n.value.data.clear();
      n.value.data.shrink_to_fit();
    }
  }
}

double clip_by_global_norm(std::vector<Tensor*> grads, double max_norm) {
  double sq = 0;
  for (const Tensor* g : grads)
    for (double x : g->data) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double s = max_norm / norm;
    for (Tensor* g : grads)
      for (double& x : g->data) x *= s;
  }
  return norm;
}

}  // namespace satlab
