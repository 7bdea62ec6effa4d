#include "nn/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace scmgame::nn {

int ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

Mat& ParamStore::add(const std::string& name, int rows, int cols, double init_scale,
                     rng::Stream& stream) {
    if (index_of(name) >= 0) throw std::runtime_error("params: duplicate tensor " + name);
    Mat m(rows, cols);
    if (init_scale == 0.0) {
        m.setZero();
    } else {
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r)
                m(r, c) = stream.next_uniform(-init_scale, init_scale);
    }
    names_.push_back(name);
    values_.push_back(std::move(m));
    grads_.push_back(Mat::Zero(rows, cols));
    return values_.back();
}

Mat& ParamStore::tensor(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::runtime_error("params: unknown tensor " + name);
    return values_[static_cast<std::size_t>(i)];
}

const Mat& ParamStore::tensor(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::runtime_error("params: unknown tensor " + name);
    return values_[static_cast<std::size_t>(i)];
}

Mat& ParamStore::grad(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::runtime_error("params: unknown tensor " + name);
    return grads_[static_cast<std::size_t>(i)];
}

std::size_t ParamStore::n_scalars() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
}

void ParamStore::zero_grads() {
    for (auto& g : grads_) g.setZero();
}

std::vector<double> ParamStore::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(n_scalars());
    for (const auto& v : values_) flat.insert(flat.end(), v.data(), v.data() + v.size());
    return flat;
}

std::vector<double> ParamStore::flatten_grads() const {
    std::vector<double> flat;
    flat.reserve(n_scalars());
    for (const auto& g : grads_) flat.insert(flat.end(), g.data(), g.data() + g.size());
    return flat;
}

void ParamStore::unflatten_values(const std::vector<double>& flat) {
    if (flat.size() != n_scalars()) throw std::runtime_error("params: flat size mismatch");
    std::size_t off = 0;
    for (auto& v : values_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(v.size())),
                  v.data());
        off += static_cast<std::size_t>(v.size());
    }
}

void ParamStore::save(std::ostream& out) const {
    std::uint64_t n = names_.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (std::size_t i = 0; i < names_.size(); ++i) {
        std::uint64_t len = names_[i].size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(names_[i].data(), static_cast<std::streamsize>(len));
        std::int64_t rows = values_[i].rows(), cols = values_[i].cols();
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        out.write(reinterpret_cast<const char*>(values_[i].data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(values_[i].size())));
    }
}

void ParamStore::load(std::istream& in) {
    names_.clear();
    values_.clear();
    grads_.clear();
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        std::string name(len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(len));
        std::int64_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        Mat m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
        names_.push_back(std::move(name));
        grads_.push_back(Mat::Zero(rows, cols));
        values_.push_back(std::move(m));
    }
    if (!in) throw std::runtime_error("params: truncated parameter block");
}

void Adam::step(ParamStore& params) {
    const auto& names = params.names();
    if (m_.empty()) {
        for (const auto& name : names) {
            const Mat& v = params.tensor(name);
            m_.push_back(Mat::Zero(v.rows(), v.cols()));
            v_.push_back(Mat::Zero(v.rows(), v.cols()));
        }
    }
    if (m_.size() != names.size()) throw std::runtime_error("adam: parameter set changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < names.size(); ++i) {
        Mat& theta = params.tensor(names[i]);
        const Mat& g = params.grad(names[i]);
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        Mat mhat = m_[i] / bc1;
        Mat vhat = v_[i] / bc2;
        theta.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    }
}

void Adam::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

}  // namespace scmgame::nn
