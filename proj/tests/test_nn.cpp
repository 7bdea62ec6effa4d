#include "doctest.h"

#include <cmath>
#include <functional>

#include "nn/optim.hpp"
#include "nn/tape.hpp"
#include "rng.hpp"

using namespace scmgame;
using nn::Mat;
using nn::Tape;
using nn::Var;

namespace {

Mat random_mat(int r, int c, rng::Stream& s) {
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = s.next_uniform(-1.0, 1.0);
    return m;
}

// Central finite differences of a scalar function of one parameter matrix.
Mat fd_grad(Mat& theta, const std::function<double()>& f, double h = 1e-5) {
    Mat g(theta.rows(), theta.cols());
    for (int c = 0; c < theta.cols(); ++c)
        for (int r = 0; r < theta.rows(); ++r) {
            const double saved = theta(r, c);
            theta(r, c) = saved + h;
            const double fp = f();
            theta(r, c) = saved - h;
            const double fm = f();
            theta(r, c) = saved;
            g(r, c) = (fp - fm) / (2.0 * h);
        }
    return g;
}

void check_close(const Mat& a, const Mat& b, double rel = 1e-6) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    for (int c = 0; c < a.cols(); ++c)
        for (int r = 0; r < a.rows(); ++r) {
            const double scale = std::max({std::abs(a(r, c)), std::abs(b(r, c)), 1.0});
            CHECK(std::abs(a(r, c) - b(r, c)) / scale < rel);
        }
}

}  // namespace

TEST_CASE("every tape op matches finite differences") {
    rng::Stream s(99);
    Mat theta = random_mat(3, 4, s);
    Mat other = random_mat(3, 4, s);
    Mat square = random_mat(4, 4, s);
    Mat bias = random_mat(3, 1, s);
    Mat target = random_mat(3, 4, s);

    struct Case {
        const char* name;
        std::function<double(Tape&, Var)> build;  // theta var -> scalar loss value side effect
    };

    auto run = [&](const char* name, const std::function<Var(Tape&, Var)>& graph) {
        CAPTURE(name);
        Mat grad = Mat::Zero(theta.rows(), theta.cols());
        auto loss_value = [&]() {
            Tape t;
            Var v = t.input(theta);
            return t.value(graph(t, v))(0, 0);
        };
        Tape t;
        Var v = t.param(theta, &grad);
        Var loss = graph(t, v);
        t.backward(loss);
        check_close(grad, fd_grad(theta, loss_value), 1e-6);
    };

    Mat left = random_mat(2, 3, s);
    run("matmul", [&](Tape& t, Var v) {
        return t.sum(t.matmul(t.matmul(t.input(left), v), t.input(square)));
    });
    run("add", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.add(v, t.input(other)), t.input(other))); });
    run("sub", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.sub(t.input(other), v), t.input(other))); });
    run("hadamard", [&](Tape& t, Var v) { return t.sum(t.hadamard(v, v)); });
    run("scale", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.scale(v, 2.5), t.input(other))); });
    run("broadcast", [&](Tape& t, Var v) {
        return t.sum(t.hadamard(t.add_col_broadcast(v, t.input(bias)), t.input(other)));
    });
    run("sigmoid", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.sigmoid(v), t.input(other))); });
    run("tanh", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.tanh(v), t.input(other))); });
    run("gelu", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.gelu(v), t.input(other))); });
    run("silu", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.silu(v), t.input(other))); });
    Mat tall = random_mat(6, 4, s);
    run("concat", [&](Tape& t, Var v) {
        return t.sum(t.hadamard(t.concat_rows(v, t.input(other)), t.input(tall)));
    });
    run("slice", [&](Tape& t, Var v) {
        return t.sum(t.hadamard(t.slice_rows(v, 1, 2), t.input(other.topRows(2))));
    });
    run("col", [&](Tape& t, Var v) { return t.sum(t.col(v, 2)); });
    run("mse", [&](Tape& t, Var v) { return t.mse(v, t.input(target)); });
    run("exp", [&](Tape& t, Var v) { return t.sum(t.hadamard(t.exp(v), t.input(other))); });
    run("log_softmax", [&](Tape& t, Var v) {
        return t.sum(t.hadamard(t.log_softmax_cols(v), t.input(other)));
    });
    run("clip", [&](Tape& t, Var v) {
        // Random entries in (-1, 1); bounds away from samples so FD is smooth.
        return t.sum(t.hadamard(t.clip(v, -0.4999, 0.4999), t.input(other)));
    });
    run("min", [&](Tape& t, Var v) {
        return t.sum(t.hadamard(t.min_elem(v, t.input(other)), t.input(target)));
    });
}

TEST_CASE("log-softmax columns are normalized distributions") {
    rng::Stream s(3);
    Mat logits = random_mat(3, 5, s) * 4.0;
    Tape t;
    Mat lsm = t.value(t.log_softmax_cols(t.input(logits)));
    for (int c = 0; c < 5; ++c) {
        CHECK(lsm.col(c).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
        // Shift invariance: adding a constant to a column changes nothing.
        Tape u;
        Mat shifted = logits;
        shifted.col(c).array() += 123.0;
        Mat lsm2 = u.value(u.log_softmax_cols(u.input(shifted)));
        for (int r = 0; r < 3; ++r) CHECK(lsm2(r, c) == doctest::Approx(lsm(r, c)).epsilon(1e-9));
    }
}

TEST_CASE("clip flattens gradients outside the bounds") {
    Mat x(1, 3);
    x << -2.0, 0.1, 2.0;
    Mat grad = Mat::Zero(1, 3);
    Tape t;
    Var v = t.param(x, &grad);
    t.backward(t.sum(t.clip(v, -1.0, 1.0)));
    CHECK(grad(0, 0) == 0.0);
    CHECK(grad(0, 1) == 1.0);
    CHECK(grad(0, 2) == 0.0);
}

TEST_CASE("broadcast bias gradient matches finite differences") {
    rng::Stream s(7);
    Mat x = random_mat(3, 5, s);
    Mat bias = random_mat(3, 1, s);
    Mat other = random_mat(3, 5, s);
    Mat grad = Mat::Zero(3, 1);
    auto value = [&]() {
        Tape t;
        return t.value(t.sum(t.hadamard(t.add_col_broadcast(t.input(x), t.input(bias)),
                                        t.input(other))))(0, 0);
    };
    Tape t;
    Var b = t.param(bias, &grad);
    t.backward(t.sum(t.hadamard(t.add_col_broadcast(t.input(x), b), t.input(other))));
    check_close(grad, fd_grad(bias, value), 1e-6);
}

TEST_CASE("gradient accumulates across reuse of a variable") {
    Mat theta(1, 1);
    theta(0, 0) = 3.0;
    Mat grad = Mat::Zero(1, 1);
    Tape t;
    Var v = t.param(theta, &grad);
    // loss = v*v -> d/dv = 2v = 6
    t.backward(t.sum(t.hadamard(v, v)));
    CHECK(grad(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("duplicated column in MSE batch behaves like mean reduction") {
    // Loss over [x, x] equals loss over [x]: mean reduction, not sum.
    Mat one(1, 1), two(1, 2);
    one(0, 0) = 2.0;
    two(0, 0) = two(0, 1) = 2.0;
    Mat target1 = Mat::Zero(1, 1), target2 = Mat::Zero(1, 2);
    Tape ta, tb;
    double la = ta.value(ta.mse(ta.input(one), ta.input(target1)))(0, 0);
    double lb = tb.value(tb.mse(tb.input(two), tb.input(target2)))(0, 0);
    CHECK(la == doctest::Approx(lb));
}

TEST_CASE("adam descends a convex quadratic") {
    rng::Stream stream(3);
    nn::ParamStore params;
    Mat& x = params.add("x", 4, 1, 1.0, stream);
    nn::Adam adam(0.05);
    double first = x.squaredNorm();
    for (int i = 0; i < 500; ++i) {
        params.zero_grads();
        params.grad("x") = 2.0 * x;  // d/dx ||x||^2
        adam.step(params);
    }
    CHECK(x.squaredNorm() < 1e-6 * first + 1e-10);
}

TEST_CASE("param store flatten round-trip and persistence") {
    rng::Stream stream(4);
    nn::ParamStore params;
    params.add("a", 2, 3, 0.5, stream);
    params.add("b", 1, 1, 0.0, stream);
    auto flat = params.flatten_values();
    CHECK(flat.size() == 7);

    std::stringstream buf;
    params.save(buf);
    nn::ParamStore back;
    back.load(buf);
    CHECK(back.flatten_values() == flat);
    CHECK(back.names() == params.names());

    flat[0] = 42.0;
    params.unflatten_values(flat);
    CHECK(params.tensor("a")(0, 0) == 42.0);
}
