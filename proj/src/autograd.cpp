#include "cppf/autograd.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cppf {

GradientSet::GradientSet(const std::vector<Matrix>& shapes_like) {
  grads_.reserve(shapes_like.size());
  for (const auto& m : shapes_like) grads_.push_back(Matrix::Zero(m.rows(), m.cols()));
  touched_.assign(shapes_like.size(), false);
}

void GradientSet::zero() {
  for (auto& g : grads_) g.setZero();
  touched_.assign(grads_.size(), false);
}

void GradientSet::accumulate(std::size_t index, const Matrix& g) {
  grads_[index] += g;
  touched_[index] = true;
}

bool GradientSet::all_finite() const {
  for (const auto& g : grads_) {
    if (!g.allFinite()) return false;
  }
  return true;
}

Var Tape::constant(Matrix value) { return push(std::move(value), {}, nullptr); }

Var Tape::parameter(std::size_t index, const Matrix& value) {
  Var v = push(value, {}, nullptr);
  nodes_[v.id].param = static_cast<int>(index);
  return v;
}

Var Tape::push(Matrix value, std::vector<int> parents, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(int id, const Matrix& g) {
  auto& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(std::span<const std::pair<Var, Matrix>> seeds, GradientSet& out) {
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  for (const auto& [v, g] : seeds) {
    if (g.rows() != nodes_[v.id].value.rows() || g.cols() != nodes_[v.id].value.cols()) {
      throw std::invalid_argument("backward: seed shape mismatch");
    }
    accumulate(v.id, g);
  }
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    auto& n = nodes_[id];
    if (!n.has_grad) continue;
    if (n.param >= 0) {
      out.accumulate(static_cast<std::size_t>(n.param), n.grad);
    } else if (n.back) {
      n.back(*this, id);
    }
  }
}

Var matmul(Tape& t, Var a, Var b) {
  Matrix v = t.value(a) * t.value(b);
  return t.push(std::move(v), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad_of(self);
    tp.accumulate(a.id, g * tp.value_of(b.id).transpose());
    tp.accumulate(b.id, tp.value_of(a.id).transpose() * g);
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  Matrix v = t.value(a) * t.value(b).transpose();
  return t.push(std::move(v), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad_of(self);
    tp.accumulate(a.id, g * tp.value_of(b.id));
    tp.accumulate(b.id, g.transpose() * tp.value_of(a.id));
  });
}

Var add(Tape& t, Var a, Var b) {
  Matrix v = t.value(a) + t.value(b);
  return t.push(std::move(v), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix g = tp.grad_of(self);
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, g);
  });
}

Var add_row(Tape& t, Var x, Var row) {
  if (t.value(row).rows() != 1 || t.value(row).cols() != t.value(x).cols()) {
    throw std::invalid_argument("add_row: shape mismatch");
  }
  Matrix v = t.value(x).rowwise() + t.value(row).row(0);
  return t.push(std::move(v), {x.id, row.id}, [x, row](Tape& tp, int self) {
    const Matrix g = tp.grad_of(self);
    tp.accumulate(x.id, g);
    tp.accumulate(row.id, g.colwise().sum());
  });
}

Var gelu(Tape& t, Var x) {
  const Matrix& in = t.value(x);
  Matrix v = in.unaryExpr([](double z) { return 0.5 * z * (1.0 + std::erf(z / std::numbers::sqrt2)); });
  return t.push(std::move(v), {x.id}, [x](Tape& tp, int self) {
    const Matrix& z = tp.value_of(x.id);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix d = z.unaryExpr([inv_sqrt_2pi](double u) {
      return 0.5 * (1.0 + std::erf(u / std::numbers::sqrt2)) +
             u * inv_sqrt_2pi * std::exp(-0.5 * u * u);
    });
    tp.accumulate(x.id, tp.grad_of(self).cwiseProduct(d));
  });
}

Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps) {
  const Matrix& in = t.value(x);
  const auto n = in.cols();
  Matrix normed(in.rows(), n);
  Vector inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normed.row(r) = (in.row(r).array() - mean) * inv_std(r);
  }
  Matrix v = (normed.array().rowwise() * t.value(gain).row(0).array()).rowwise() +
             t.value(bias).row(0).array();
  return t.push(std::move(v), {x.id, gain.id, bias.id},
                [x, gain, bias, normed, inv_std](Tape& tp, int self) {
                  const Matrix g = tp.grad_of(self);
                  const auto cols = static_cast<double>(normed.cols());
                  tp.accumulate(gain.id, g.cwiseProduct(normed).colwise().sum());
                  tp.accumulate(bias.id, g.colwise().sum());
                  Matrix dnormed = g.array().rowwise() * tp.value_of(gain.id).row(0).array();
                  Matrix dx(g.rows(), g.cols());
                  for (Eigen::Index r = 0; r < g.rows(); ++r) {
                    const double mean_d = dnormed.row(r).sum() / cols;
                    const double mean_dn = dnormed.row(r).dot(normed.row(r)) / cols;
                    dx.row(r) = inv_std(r) * (dnormed.row(r).array() - mean_d -
                                              normed.row(r).array() * mean_dn);
                  }
                  tp.accumulate(x.id, dx);
                });
}

Var gather_rows(Tape& t, Var table, std::span<const int> ids) {
  const Matrix& tab = t.value(table);
  Matrix v(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) throw std::out_of_range("gather_rows: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return t.push(std::move(v), {table.id}, [table, idx](Tape& tp, int self) {
    const Matrix& g = tp.grad_of(self);
    const Matrix& tab = tp.value_of(table.id);
    Matrix d = Matrix::Zero(tab.rows(), tab.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(table.id, d);
  });
}

Var slice_rows(Tape& t, Var x, std::size_t begin, std::size_t count) {
  const Matrix& in = t.value(x);
  if (begin + count > static_cast<std::size_t>(in.rows())) {
    throw std::out_of_range("slice_rows: range out of bounds");
  }
  Matrix v = in.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  return t.push(std::move(v), {x.id}, [x, begin, count](Tape& tp, int self) {
    const Matrix& in = tp.value_of(x.id);
    Matrix d = Matrix::Zero(in.rows(), in.cols());
    d.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) = tp.grad_of(self);
    tp.accumulate(x.id, d);
  });
}

Var select_row(Tape& t, Var x, std::size_t row) { return slice_rows(t, x, row, 1); }

Var multi_head_attention(Tape& t, Var q, Var k, Var v, int heads) {
  const Matrix& Q = t.value(q);
  const Matrix& K = t.value(k);
  const Matrix& V = t.value(v);
  const auto len = Q.rows();
  const auto dim = Q.cols();
  if (heads <= 0 || dim % heads != 0) throw std::invalid_argument("attention: bad head count");
  const auto dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(len, dim);
  for (int h = 0; h < heads; ++h) {
    const auto c0 = h * dh;
    Matrix s = (Q.middleCols(c0, dh) * K.middleCols(c0, dh).transpose()) * scale;
    for (Eigen::Index r = 0; r < len; ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp();
      s.row(r) /= s.row(r).sum();
    }
    out.middleCols(c0, dh) = s * V.middleCols(c0, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  return t.push(std::move(out), {q.id, k.id, v.id},
                [q, k, v, heads, dh, scale, probs](Tape& tp, int self) {
                  const Matrix& g = tp.grad_of(self);
                  const Matrix& Q = tp.value_of(q.id);
                  const Matrix& K = tp.value_of(k.id);
                  const Matrix& V = tp.value_of(v.id);
                  Matrix dQ(Q.rows(), Q.cols()), dK(K.rows(), K.cols()), dV(V.rows(), V.cols());
                  for (int h = 0; h < heads; ++h) {
                    const auto c0 = h * dh;
                    const Matrix& P = probs[static_cast<std::size_t>(h)];
                    const Matrix gO = g.middleCols(c0, dh);
                    dV.middleCols(c0, dh) = P.transpose() * gO;
                    Matrix dP = gO * V.middleCols(c0, dh).transpose();
                    Vector row_dot = (dP.cwiseProduct(P)).rowwise().sum();
                    Matrix dS = P.cwiseProduct(dP.colwise() - row_dot) * scale;
                    dQ.middleCols(c0, dh) = dS * K.middleCols(c0, dh);
                    dK.middleCols(c0, dh) = dS.transpose() * Q.middleCols(c0, dh);
                  }
                  tp.accumulate(q.id, dQ);
                  tp.accumulate(k.id, dK);
                  tp.accumulate(v.id, dV);
                });
}

}  // namespace cppf
