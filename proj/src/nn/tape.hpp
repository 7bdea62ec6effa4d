#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scmgame::nn {

using Mat = Eigen::MatrixXd;

// Reverse-mode autodiff over dense matrices. Values live on a tape; a Var is
// just an index into it. The tape is rebuilt per forward pass (define-by-run).
class Tape;

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
  public:
    Var input(Mat value);               // leaf without gradient accumulation
    Var param(Mat value, Mat* grad_out);  // leaf whose gradient is accumulated into *grad_out

    const Mat& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    const Mat& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    // Adds a column vector b to every column of a.
    Var add_col_broadcast(Var a, Var b);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var gelu(Var a);
    Var silu(Var a);
    Var relu(Var a);
    // Stacks a on top of b (row-wise concat); columns must match.
    Var concat_rows(Var a, Var b);
    // Rows [r0, r0+n) of a.
    Var slice_rows(Var a, int r0, int n);
    // Column c of a as an n x 1 matrix.
    Var col(Var a, int c);
    // Mean of squared entries of (a - b).
    Var exp(Var a);
    // Column-wise log-softmax (stable); each column is one distribution.
    Var log_softmax_cols(Var a);
    Var clip(Var a, double lo, double hi);
    Var min_elem(Var a, Var b);

    Var mse(Var a, Var b);
    // Sum of all entries (for assembling scalar losses).
    Var sum(Var a);

    // Seeds d(loss)/d(loss) = 1 and runs the backward sweep; loss must be 1x1.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Mat value;
        Mat grad;
        Mat* grad_out = nullptr;
        std::function<void(Tape&, Node&)> backprop;  // empty for leaves
    };

    Var emplace(Mat value, std::function<void(Tape&, Node&)> backprop);
    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }

    std::vector<Node> nodes_;
};

// Numerically stable scalar helpers shared by tape ops and fast inference.
double gelu_scalar(double x);
double silu_scalar(double x);
double sigmoid_scalar(double x);

}  // namespace scmgame::nn
