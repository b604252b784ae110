#include "hamlearn/autodiff.hpp"

#include <cmath>
#include <limits>

#include "hamlearn/errors.hpp"

namespace hamlearn::autodiff {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: empty handle");
  return tape_->node(idx_).value;
}

Var Tape::push(Matrix value, bool needs_grad) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(Node& target, const Matrix& contribution) {
  if (!target.needs_grad) return;
  if (!target.grad_set) {
    target.grad = contribution;
    target.grad_set = true;
  } else {
    target.grad += contribution;
  }
}

Var Tape::constant(Matrix v) { return push(std::move(v), false); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true);
  Node& n = node(v.idx_);
  n.bound = &p;
  n.backprop = [](Tape&, Node& self) {
    if (self.grad_set) self.bound->grad += self.grad;
  };
  return v;
}

Var Tape::matmul(Var a, Var b) {
  Node& na = node(a.idx_);
  Node& nb = node(b.idx_);
  if (na.value.cols() != nb.value.rows()) throw ContractError("matmul: shape mismatch");
  Var out = push(na.value * nb.value, na.needs_grad || nb.needs_grad);
  const int ia = a.idx_, ib = b.idx_;
  node(out.idx_).backprop = [ia, ib](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Node& pa = t.node(ia);
    Node& pb = t.node(ib);
    if (pa.needs_grad) accumulate(pa, self.grad * pb.value.transpose());
    if (pb.needs_grad) accumulate(pb, pa.value.transpose() * self.grad);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  Node& na = node(a.idx_);
  Node& nb = node(b.idx_);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols()) {
    throw ContractError("add: shape mismatch");
  }
  Var out = push(na.value + nb.value, na.needs_grad || nb.needs_grad);
  const int ia = a.idx_, ib = b.idx_;
  node(out.idx_).backprop = [ia, ib](Tape& t, Node& self) {
    if (!self.grad_set) return;
    accumulate(t.node(ia), self.grad);
    accumulate(t.node(ib), self.grad);
  };
  return out;
}

Var Tape::add_row(Var a, Var bias) {
  Node& na = node(a.idx_);
  Node& nb = node(bias.idx_);
  if (nb.value.rows() != 1 || nb.value.cols() != na.value.cols()) {
    throw ContractError("add_row: bias must be 1 x cols");
  }
  Matrix v = na.value;
  v.rowwise() += nb.value.row(0);
  Var out = push(std::move(v), na.needs_grad || nb.needs_grad);
  const int ia = a.idx_, ib = bias.idx_;
  node(out.idx_).backprop = [ia, ib](Tape& t, Node& self) {
    if (!self.grad_set) return;
    accumulate(t.node(ia), self.grad);
    if (t.node(ib).needs_grad) accumulate(t.node(ib), self.grad.colwise().sum());
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  Node& na = node(a.idx_);
  Node& nb = node(b.idx_);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols()) {
    throw ContractError("sub: shape mismatch");
  }
  Var out = push(na.value - nb.value, na.needs_grad || nb.needs_grad);
  const int ia = a.idx_, ib = b.idx_;
  node(out.idx_).backprop = [ia, ib](Tape& t, Node& self) {
    if (!self.grad_set) return;
    accumulate(t.node(ia), self.grad);
    if (t.node(ib).needs_grad) accumulate(t.node(ib), -self.grad);
  };
  return out;
}

Var Tape::scale(Var a, double s) {
  Node& na = node(a.idx_);
  Var out = push(s * na.value, na.needs_grad);
  const int ia = a.idx_;
  node(out.idx_).backprop = [ia, s](Tape& t, Node& self) {
    if (!self.grad_set) return;
    accumulate(t.node(ia), s * self.grad);
  };
  return out;
}

Var Tape::softplus(Var a) {
  Node& na = node(a.idx_);
  // Stable form max(x,0) + log1p(exp(-|x|)); vectorizes through Eigen.
  Matrix v = (na.value.array().max(0.0) + (-na.value.array().abs()).exp().log1p()).matrix();
  Var out = push(std::move(v), na.needs_grad);
  const int ia = a.idx_;
  node(out.idx_).backprop = [ia](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Node& pa = t.node(ia);
    if (!pa.needs_grad) return;
    // sigmoid(x) = 0.5 * (1 + tanh(x/2)), stable at both tails
    accumulate(pa, (self.grad.array() *
                    (0.5 * (1.0 + (0.5 * pa.value.array()).tanh())))
                       .matrix());
  };
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  Eigen::Index rows = node(parts[0].idx_).value.rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (const Var& p : parts) {
    const Node& np = node(p.idx_);
    if (np.value.rows() != rows) throw ContractError("concat_cols: row mismatch");
    cols += np.value.cols();
    needs = needs || np.needs_grad;
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  std::vector<int> idx;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    const Node& np = node(p.idx_);
    v.middleCols(at, np.value.cols()) = np.value;
    at += np.value.cols();
    idx.push_back(p.idx_);
    widths.push_back(np.value.cols());
  }
  Var out = push(std::move(v), needs);
  node(out.idx_).backprop = [idx, widths](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Eigen::Index at2 = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Node& pk = t.node(idx[k]);
      if (pk.needs_grad) accumulate(pk, self.grad.middleCols(at2, widths[k]));
      at2 += widths[k];
    }
  };
  return out;
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  Node& na = node(a.idx_);
  Matrix v(static_cast<Eigen::Index>(idx.size()), na.value.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) v.row(r) = na.value.row(idx[r]);
  Var out = push(std::move(v), na.needs_grad);
  const int ia = a.idx_;
  node(out.idx_).backprop = [ia, idx = std::move(idx)](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Node& pa = t.node(ia);
    if (!pa.needs_grad) return;
    if (!pa.grad_set) {
      pa.grad = Matrix::Zero(pa.value.rows(), pa.value.cols());
      pa.grad_set = true;
    }
    for (std::size_t r = 0; r < idx.size(); ++r) {
      pa.grad.row(idx[r]) += self.grad.row(r);
    }
  };
  return out;
}

Var Tape::segment_reduce(Var a, std::vector<int> segment_of_row, int n_segments,
                         Reduce kind) {
  Node& na = node(a.idx_);
  if (static_cast<Eigen::Index>(segment_of_row.size()) != na.value.rows()) {
    throw ContractError("segment_reduce: one segment id per row required");
  }
  const Eigen::Index cols = na.value.cols();
  Matrix v = Matrix::Zero(n_segments, cols);
  std::vector<int> count(n_segments, 0);
  using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;
  IndexMatrix arg;
  if (kind == Reduce::Min || kind == Reduce::Max) {
    arg = IndexMatrix::Constant(n_segments, cols, -1);
  }

  for (Eigen::Index r = 0; r < na.value.rows(); ++r) {
    const int s = segment_of_row[r];
    if (s < 0 || s >= n_segments) throw ContractError("segment_reduce: segment out of range");
    switch (kind) {
      case Reduce::Sum:
      case Reduce::Mean:
        v.row(s) += na.value.row(r);
        break;
      case Reduce::Min:
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (count[s] == 0 || na.value(r, c) < v(s, c)) {
            v(s, c) = na.value(r, c);
            arg(s, c) = r;
          }
        }
        break;
      case Reduce::Max:
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (count[s] == 0 || na.value(r, c) > v(s, c)) {
            v(s, c) = na.value(r, c);
            arg(s, c) = r;
          }
        }
        break;
    }
    ++count[s];
  }
  if (kind == Reduce::Mean) {
    for (int s = 0; s < n_segments; ++s) {
      if (count[s] > 0) v.row(s) /= static_cast<double>(count[s]);
    }
  }

  Var out = push(std::move(v), na.needs_grad);
  const int ia = a.idx_;
  node(out.idx_).backprop = [ia, seg = std::move(segment_of_row), count, arg,
                             kind](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Node& pa = t.node(ia);
    if (!pa.needs_grad) return;
    if (!pa.grad_set) {
      pa.grad = Matrix::Zero(pa.value.rows(), pa.value.cols());
      pa.grad_set = true;
    }
    switch (kind) {
      case Reduce::Sum:
        for (std::size_t r = 0; r < seg.size(); ++r) {
          pa.grad.row(static_cast<Eigen::Index>(r)) += self.grad.row(seg[r]);
        }
        break;
      case Reduce::Mean:
        for (std::size_t r = 0; r < seg.size(); ++r) {
          pa.grad.row(static_cast<Eigen::Index>(r)) +=
              self.grad.row(seg[r]) / static_cast<double>(count[seg[r]]);
        }
        break;
      case Reduce::Min:
      case Reduce::Max:
        for (Eigen::Index s = 0; s < self.grad.rows(); ++s) {
          for (Eigen::Index c = 0; c < self.grad.cols(); ++c) {
            if (arg(s, c) >= 0) pa.grad(arg(s, c), c) += self.grad(s, c);
          }
        }
        break;
    }
  };
  return out;
}

Var Tape::sum_squares(Var a) {
  Node& na = node(a.idx_);
  Matrix v(1, 1);
  v(0, 0) = na.value.squaredNorm();
  Var out = push(std::move(v), na.needs_grad);
  const int ia = a.idx_;
  node(out.idx_).backprop = [ia](Tape& t, Node& self) {
    if (!self.grad_set) return;
    Node& pa = t.node(ia);
    if (pa.needs_grad) accumulate(pa, (2.0 * self.grad(0, 0)) * pa.value);
  };
  return out;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("backward: loss from another tape");
  Node& ln = node(loss.idx_);
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw ContractError("backward: loss must be scalar");
  }
  ln.grad = Matrix::Ones(1, 1);
  ln.grad_set = true;
  for (int i = loss.idx_; i >= 0; --i) {
    Node& n = *nodes_[i];
    if (n.backprop && n.needs_grad) n.backprop(*this, n);
  }
}

}  // namespace hamlearn::autodiff
