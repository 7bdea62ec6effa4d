#include "nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace scmgame::nn {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double silu_scalar(double x) { return x * sigmoid_scalar(x); }

Var Tape::emplace(Mat value, std::function<void(Tape&, Node&)> backprop) {
    Node n;
    n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Mat value) { return emplace(std::move(value), nullptr); }

Var Tape::param(Mat value, Mat* grad_out) {
    Var v = emplace(std::move(value), nullptr);
    node(v).grad_out = grad_out;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows()) throw std::runtime_error("tape: matmul shape mismatch");
    return emplace(value(a) * value(b), [a, b](Tape& t, Node& n) {
        t.node(a).grad.noalias() += n.grad * t.value(b).transpose();
        t.node(b).grad.noalias() += t.value(a).transpose() * n.grad;
    });
}

Var Tape::add(Var a, Var b) {
    return emplace(value(a) + value(b), [a, b](Tape& t, Node& n) {
        t.node(a).grad += n.grad;
        t.node(b).grad += n.grad;
    });
}

Var Tape::sub(Var a, Var b) {
    return emplace(value(a) - value(b), [a, b](Tape& t, Node& n) {
        t.node(a).grad += n.grad;
        t.node(b).grad -= n.grad;
    });
}

Var Tape::hadamard(Var a, Var b) {
    return emplace(value(a).cwiseProduct(value(b)), [a, b](Tape& t, Node& n) {
        t.node(a).grad += n.grad.cwiseProduct(t.value(b));
        t.node(b).grad += n.grad.cwiseProduct(t.value(a));
    });
}

Var Tape::scale(Var a, double s) {
    return emplace(value(a) * s, [a, s](Tape& t, Node& n) { t.node(a).grad += n.grad * s; });
}

Var Tape::add_scalar(Var a, double s) {
    return emplace(value(a).array() + s, [a](Tape& t, Node& n) { t.node(a).grad += n.grad; });
}

Var Tape::add_col_broadcast(Var a, Var b) {
    if (value(b).cols() != 1 || value(b).rows() != value(a).rows())
        throw std::runtime_error("tape: broadcast shape mismatch");
    Mat out = value(a);
    out.colwise() += value(b).col(0);
    return emplace(std::move(out), [a, b](Tape& t, Node& n) {
        t.node(a).grad += n.grad;
        t.node(b).grad += n.grad.rowwise().sum();
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = value(a).unaryExpr([](double x) { return sigmoid_scalar(x); });
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        t.node(a).grad +=
            n.grad.cwiseProduct(n.value.cwiseProduct(Mat::Ones(n.value.rows(), n.value.cols()) - n.value));
    });
}

Var Tape::tanh(Var a) {
    Mat out = value(a).array().tanh();
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        t.node(a).grad.array() += n.grad.array() * (1.0 - n.value.array().square());
    });
}

Var Tape::gelu(Var a) {
    Mat out = value(a).unaryExpr([](double x) { return gelu_scalar(x); });
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        const Mat& x = t.value(a);
        Mat d = x.unaryExpr([](double v) {
            return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
                   v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
        });
        t.node(a).grad += n.grad.cwiseProduct(d);
    });
}

Var Tape::silu(Var a) {
    Mat out = value(a).unaryExpr([](double x) { return silu_scalar(x); });
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        const Mat& x = t.value(a);
        Mat d = x.unaryExpr([](double v) {
            double s = sigmoid_scalar(v);
            return s * (1.0 + v * (1.0 - s));
        });
        t.node(a).grad += n.grad.cwiseProduct(d);
    });
}

Var Tape::relu(Var a) {
    Mat out = value(a).cwiseMax(0.0);
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        const Mat& x = t.value(a);
        t.node(a).grad.array() += n.grad.array() * (x.array() > 0.0).cast<double>();
    });
}

Var Tape::concat_rows(Var a, Var b) {
    if (value(a).cols() != value(b).cols()) throw std::runtime_error("tape: concat shape mismatch");
    Mat out(value(a).rows() + value(b).rows(), value(a).cols());
    out.topRows(value(a).rows()) = value(a);
    out.bottomRows(value(b).rows()) = value(b);
    const int ra = static_cast<int>(value(a).rows());
    return emplace(std::move(out), [a, b, ra](Tape& t, Node& n) {
        t.node(a).grad += n.grad.topRows(ra);
        t.node(b).grad += n.grad.bottomRows(n.grad.rows() - ra);
    });
}

Var Tape::slice_rows(Var a, int r0, int n_rows) {
    if (r0 < 0 || r0 + n_rows > value(a).rows())
        throw std::runtime_error("tape: slice out of range");
    return emplace(value(a).middleRows(r0, n_rows), [a, r0, n_rows](Tape& t, Node& n) {
        t.node(a).grad.middleRows(r0, n_rows) += n.grad;
    });
}

Var Tape::col(Var a, int c) {
    if (c < 0 || c >= value(a).cols()) throw std::runtime_error("tape: column out of range");
    return emplace(value(a).col(c), [a, c](Tape& t, Node& n) { t.node(a).grad.col(c) += n.grad; });
}

Var Tape::exp(Var a) {
    Mat out = value(a).array().exp();
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        t.node(a).grad += n.grad.cwiseProduct(n.value);
    });
}

Var Tape::log_softmax_cols(Var a) {
    Mat out = value(a);
    for (int c = 0; c < out.cols(); ++c) {
        const double m = out.col(c).maxCoeff();
        const double lse = m + std::log((out.col(c).array() - m).exp().sum());
        out.col(c).array() -= lse;
    }
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        Mat soft = n.value.array().exp();
        Mat d = n.grad;
        for (int c = 0; c < d.cols(); ++c) d.col(c) -= soft.col(c) * n.grad.col(c).sum();
        t.node(a).grad += d;
    });
}

Var Tape::clip(Var a, double lo, double hi) {
    if (lo > hi) throw std::runtime_error("tape: clip bounds inverted");
    Mat out = value(a).cwiseMax(lo).cwiseMin(hi);
    return emplace(std::move(out), [a, lo, hi](Tape& t, Node& n) {
        const Mat& x = t.value(a);
        t.node(a).grad.array() +=
            n.grad.array() * ((x.array() > lo) && (x.array() < hi)).cast<double>();
    });
}

Var Tape::min_elem(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw std::runtime_error("tape: min shape mismatch");
    Mat out = value(a).cwiseMin(value(b));
    return emplace(std::move(out), [a, b](Tape& t, Node& n) {
        // Subgradient: route to the smaller side, to `a` on ties.
        Mat takes_a = (t.value(a).array() <= t.value(b).array()).cast<double>();
        t.node(a).grad.array() += n.grad.array() * takes_a.array();
        t.node(b).grad.array() += n.grad.array() * (1.0 - takes_a.array());
    });
}

Var Tape::mse(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw std::runtime_error("tape: mse shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(value(a).size());
    Mat out(1, 1);
    out(0, 0) = (value(a) - value(b)).squaredNorm() * inv_n;
    return emplace(std::move(out), [a, b, inv_n](Tape& t, Node& n) {
        Mat d = 2.0 * inv_n * n.grad(0, 0) * (t.value(a) - t.value(b));
        t.node(a).grad += d;
        t.node(b).grad -= d;
    });
}

Var Tape::sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = value(a).sum();
    return emplace(std::move(out), [a](Tape& t, Node& n) {
        t.node(a).grad.array() += n.grad(0, 0);
    });
}

void Tape::backward(Var loss) {
    if (!loss.valid() || value(loss).size() != 1)
        throw std::runtime_error("tape: backward needs a scalar loss");
    node(loss).grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backprop) n.backprop(*this, n);
        if (n.grad_out) *n.grad_out += n.grad;
    }
}

}  // namespace scmgame::nn
