#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cppf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Per-parameter gradient accumulator, indexed like the owning model's
/// parameter list. `touched` records which parameters a backward pass
/// actually reached.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const std::vector<Matrix>& shapes_like);

  void zero();
  void accumulate(std::size_t index, const Matrix& g);
  const Matrix& operator[](std::size_t index) const { return grads_[index]; }
  Matrix& operator[](std::size_t index) { return grads_[index]; }
  std::size_t size() const { return grads_.size(); }
  bool touched(std::size_t index) const { return touched_[index]; }
  bool all_finite() const;

 private:
  std::vector<Matrix> grads_;
  std::vector<bool> touched_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Every op records its value at forward time, so a
/// backward pass is unaffected by later changes to the parameters.
/// `backward` may be called several times; each call starts from zeroed
/// intermediate gradients.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(std::size_t index, const Matrix& value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }

  void backward(std::span<const std::pair<Var, Matrix>> seeds, GradientSet& out);

  // Op construction (used by the free functions below).
  Var push(Matrix value, std::vector<int> parents, std::function<void(Tape&, int)> back);
  Matrix& grad_of(int id) { return nodes_[id].grad; }
  const Matrix& value_of(int id) const { return nodes_[id].value; }
  void accumulate(int id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    int param = -1;
    std::vector<int> parents;
    std::function<void(Tape&, int)> back;
  };
  std::vector<Node> nodes_;
};

Var matmul(Tape& t, Var a, Var b);     // a * b
Var matmul_nt(Tape& t, Var a, Var b);  // a * b^T
Var add(Tape& t, Var a, Var b);
Var add_row(Tape& t, Var x, Var row);  // broadcast a 1 x n row over x's rows
Var gelu(Tape& t, Var x);
Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-5);
Var gather_rows(Tape& t, Var table, std::span<const int> ids);
Var slice_rows(Tape& t, Var x, std::size_t begin, std::size_t count);
Var select_row(Tape& t, Var x, std::size_t row);
// Scaled dot-product self-attention over `heads` column blocks of q, k, v.
Var multi_head_attention(Tape& t, Var q, Var k, Var v, int heads);

}  // namespace cppf
