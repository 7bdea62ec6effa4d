#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rng.hpp"

namespace scmgame::nn {

using Mat = Eigen::MatrixXd;

// Named parameter tensors with matching gradient buffers.
class ParamStore {
  public:
    // Registers a tensor; init_scale 0 means zero-init, otherwise uniform in
    // [-init_scale, init_scale] drawn from the store's stream.
    Mat& add(const std::string& name, int rows, int cols, double init_scale, rng::Stream& stream);

    Mat& tensor(const std::string& name);
    const Mat& tensor(const std::string& name) const;
    Mat& grad(const std::string& name);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t n_scalars() const;
    void zero_grads();

    // Flat views used by finite-difference tests and checkpoints.
    std::vector<double> flatten_values() const;
    std::vector<double> flatten_grads() const;
    void unflatten_values(const std::vector<double>& flat);

    void save(std::ostream& out) const;
    void load(std::istream& in);

  private:
    std::vector<std::string> names_;
    std::vector<Mat> values_;
    std::vector<Mat> grads_;
    int index_of(const std::string& name) const;
};

// Adam with bias correction; state is per-store.
class Adam {
  public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& params);
    void reset();
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Mat> m_, v_;
};

}  // namespace scmgame::nn
