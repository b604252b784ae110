#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

// Reverse-mode autodiff over matrix-valued nodes. A Tape owns the nodes of
// one forward pass; ops append nodes in topological order and backward()
// walks them in reverse. Parameters live outside the tape and accumulate
// gradients across passes until zero_grad().

namespace hamlearn::autodiff {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(); }
};

enum class Reduce { Sum, Mean, Min, Max };

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int idx) : tape_(tape), idx_(idx) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

class Tape {
 public:
  Var constant(Matrix v);
  Var param(Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // a + bias broadcast over rows; bias is 1 x cols.
  Var add_row(Var a, Var bias);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var softplus(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var gather_rows(Var a, std::vector<int> idx);
  // Row-wise reduction into n_segments groups; empty segments yield zero rows.
  // Min/Max route gradients to the first extremal row of each group.
  Var segment_reduce(Var a, std::vector<int> segment_of_row, int n_segments, Reduce kind);
  // Frobenius norm squared, as a 1x1 node.
  Var sum_squares(Var a);

  // Reverse sweep from a 1x1 loss. Parameter gradients accumulate.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool grad_set = false;
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void(Tape&, Node&)> backprop;
  };

  Node& node(int idx) { return *nodes_[idx]; }
  const Node& node(int idx) const { return *nodes_[idx]; }
  Var push(Matrix value, bool needs_grad);
  static void accumulate(Node& target, const Matrix& contribution);

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace hamlearn::autodiff
