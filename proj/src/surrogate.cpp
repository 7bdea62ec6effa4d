#include "surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scmgame {

using nn::Mat;
using nn::Tape;
using nn::Var;
using nlohmann::json;

std::string to_string(EncoderKind k) {
    switch (k) {
        case EncoderKind::GRU: return "gru";
        case EncoderKind::LSTM: return "lstm";
        case EncoderKind::TCN: return "tcn";
    }
    throw std::logic_error("bad encoder kind");
}

std::string to_string(Activation a) {
    return a == Activation::GELU ? "gelu" : "silu";
}

EncoderKind encoder_from_string(const std::string& s) {
    if (s == "gru") return EncoderKind::GRU;
    if (s == "lstm") return EncoderKind::LSTM;
    if (s == "tcn") return EncoderKind::TCN;
    throw std::runtime_error("unknown encoder '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
    if (s == "gelu") return Activation::GELU;
    if (s == "silu") return Activation::SiLU;
    throw std::runtime_error("unknown activation '" + s + "'");
}

int SurrogateConfig::layers() const {
    if (encoder_layers > 0) return encoder_layers;
    return encoder == EncoderKind::TCN ? 5 : 1;
}

int SurrogateConfig::tcn_receptive_field() const {
    int span = 0;
    for (int l = 0; l < layers(); ++l) span += (tcn_kernel - 1) << l;
    return 1 + span;
}

void SurrogateConfig::validate() const {
    if (hidden_dim < 1 || head_hidden < 1) throw std::runtime_error("surrogate: hidden dims must be >= 1");
    if (window < 0 || n_inputs < 1) throw std::runtime_error("surrogate: bad window/input config");
    if (encoder == EncoderKind::TCN && tcn_receptive_field() < window)
        throw std::runtime_error("surrogate: TCN receptive field " +
                                 std::to_string(tcn_receptive_field()) + " < window " +
                                 std::to_string(window));
}

EvalResult evaluate_predictions(const std::vector<double>& preds,
                                const std::vector<double>& targets) {
    if (preds.size() != targets.size() || preds.empty())
        throw std::runtime_error("evaluate: prediction/target size mismatch");
    double se = 0.0, mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        se += (preds[i] - targets[i]) * (preds[i] - targets[i]);
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
    }
    EvalResult r;
    r.rmse = std::sqrt(se / static_cast<double>(preds.size()));
    if (preds.size() >= 2 && ss_tot > 0.0) r.r2 = 1.0 - se / ss_tot;
    return r;
}

Surrogate::Surrogate(SurrogateConfig config, NormStats stats, std::uint64_t registry_hash)
    : config_(config), stats_(std::move(stats)), registry_hash_(registry_hash) {
    config_.validate();
    if (static_cast<int>(stats_.x_mean.size()) != config_.n_inputs)
        throw std::runtime_error("surrogate: normalization stats do not match input count");
    rng::Stream stream(rng::key(config_.seed, 0x696e6974ULL, 0, 0));  // "init"
    build_params(stream);
}

namespace {
double fan_in_scale(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }
}  // namespace

void Surrogate::build_params(rng::Stream& stream) {
    const int d = config_.hidden_dim;
    for (int l = 0; l < config_.layers(); ++l) {
        const int in = l == 0 ? config_.n_inputs : d;
        const std::string p = "enc" + std::to_string(l) + ".";
        switch (config_.encoder) {
            case EncoderKind::GRU:
                for (const char* gate : {"z", "r", "h"}) {
                    params_.add(p + "W" + gate, d, in, fan_in_scale(in), stream);
                    params_.add(p + "U" + gate, d, d, fan_in_scale(d), stream);
                    params_.add(p + "b" + gate, d, 1, 0.0, stream);
                }
                break;
            case EncoderKind::LSTM:
                for (const char* gate : {"i", "f", "o", "g"}) {
                    params_.add(p + "W" + gate, d, in, fan_in_scale(in), stream);
                    params_.add(p + "U" + gate, d, d, fan_in_scale(d), stream);
                    params_.add(p + "b" + gate, d, 1, 0.0, stream);
                }
                params_.tensor(p + "bf").setConstant(1.0);  // open forget gates at init
                break;
            case EncoderKind::TCN:
                for (int k = 0; k < config_.tcn_kernel; ++k)
                    params_.add(p + "K" + std::to_string(k), d, in,
                                fan_in_scale(in * config_.tcn_kernel), stream);
                params_.add(p + "b", d, 1, 0.0, stream);
                break;
        }
    }
    const int z_dim = d + config_.n_inputs;
    params_.add("head.W1", config_.head_hidden, z_dim, fan_in_scale(z_dim), stream);
    params_.add("head.b1", config_.head_hidden, 1, 0.0, stream);
    params_.add("head.W2", 1, config_.head_hidden, fan_in_scale(config_.head_hidden), stream);
    params_.add("head.b2", 1, 1, 0.0, stream);
}

Mat Surrogate::forward_normalized(const std::vector<Mat>& steps) const {
    const int W = config_.window;
    if (static_cast<int>(steps.size()) != W + 1)
        throw std::runtime_error("surrogate: expected " + std::to_string(W + 1) + " window rows");
    const auto B = steps.front().cols();
    const int d = config_.hidden_dim;
    auto act = [this](const Mat& m) {
        return config_.activation == Activation::GELU
                   ? Mat(m.unaryExpr([](double x) { return nn::gelu_scalar(x); }))
                   : Mat(m.unaryExpr([](double x) { return nn::silu_scalar(x); }));
    };
    auto sigmoid = [](const Mat& m) {
        return Mat(m.unaryExpr([](double x) { return nn::sigmoid_scalar(x); }));
    };

    // Encoder over rows 0..W-1 only; the current-year row enters via the skip.
    std::vector<Mat> seq(steps.begin(), steps.end() - 1);
    Mat h = Mat::Zero(d, B);
    for (int l = 0; l < config_.layers(); ++l) {
        const std::string p = "enc" + std::to_string(l) + ".";
        if (config_.encoder == EncoderKind::TCN) {
            const int dil = 1 << l;
            std::vector<const Mat*> kernels;
            for (int k = 0; k < config_.tcn_kernel; ++k)
                kernels.push_back(&params_.tensor(p + "K" + std::to_string(k)));
            const Mat& b = params_.tensor(p + "b");
            std::vector<Mat> out(seq.size());
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Mat y = b.replicate(1, B);
                // Kernel tap k looks k*dil steps back; left zero padding.
                for (int k = 0; k < config_.tcn_kernel; ++k) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - k * dil;
                    if (src >= 0) y.noalias() += (*kernels[k]) * seq[static_cast<std::size_t>(src)];
                }
                y = act(y);
                if (l > 0) y += seq[t];  // residual once widths match
                out[t] = std::move(y);
            }
            seq = std::move(out);
            h = seq.back();
            continue;
        }
        Mat hl = Mat::Zero(d, B);
        Mat cl = Mat::Zero(d, B);
        std::vector<Mat> out(seq.size());
        if (config_.encoder == EncoderKind::GRU) {
            const Mat &Wz = params_.tensor(p + "Wz"), &Uz = params_.tensor(p + "Uz");
            const Mat &Wr = params_.tensor(p + "Wr"), &Ur = params_.tensor(p + "Ur");
            const Mat &Wh = params_.tensor(p + "Wh"), &Uh = params_.tensor(p + "Uh");
            const Mat &bz = params_.tensor(p + "bz"), &br = params_.tensor(p + "br"),
                      &bh = params_.tensor(p + "bh");
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Mat z = sigmoid((Wz * seq[t] + Uz * hl).colwise() + bz.col(0));
                Mat r = sigmoid((Wr * seq[t] + Ur * hl).colwise() + br.col(0));
                Mat htil = ((Wh * seq[t] + Uh * r.cwiseProduct(hl)).colwise() + bh.col(0)).array().tanh();
                hl = (Mat::Ones(d, B) - z).cwiseProduct(hl) + z.cwiseProduct(htil);
                out[t] = hl;
            }
        } else {
            const Mat &Wi = params_.tensor(p + "Wi"), &Ui = params_.tensor(p + "Ui");
            const Mat &Wf = params_.tensor(p + "Wf"), &Uf = params_.tensor(p + "Uf");
            const Mat &Wo = params_.tensor(p + "Wo"), &Uo = params_.tensor(p + "Uo");
            const Mat &Wg = params_.tensor(p + "Wg"), &Ug = params_.tensor(p + "Ug");
            const Mat &bi = params_.tensor(p + "bi"), &bf = params_.tensor(p + "bf"),
                      &bo = params_.tensor(p + "bo"), &bg = params_.tensor(p + "bg");
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Mat i = sigmoid((Wi * seq[t] + Ui * hl).colwise() + bi.col(0));
                Mat f = sigmoid((Wf * seq[t] + Uf * hl).colwise() + bf.col(0));
                Mat o = sigmoid((Wo * seq[t] + Uo * hl).colwise() + bo.col(0));
                Mat g = ((Wg * seq[t] + Ug * hl).colwise() + bg.col(0)).array().tanh();
                cl = f.cwiseProduct(cl) + i.cwiseProduct(g);
                hl = o.cwiseProduct(Mat(cl.array().tanh()));
                out[t] = hl;
            }
        }
        seq = std::move(out);
        h = hl;
    }

    Mat z(d + config_.n_inputs, B);
    z.topRows(d) = h;
    z.bottomRows(config_.n_inputs) = steps.back();
    Mat a1 = act((params_.tensor("head.W1") * z).colwise() + params_.tensor("head.b1").col(0));
    Mat y = (params_.tensor("head.W2") * a1).colwise() + params_.tensor("head.b2").col(0);
    return y;
}

Var Surrogate::tape_activation(Tape& tape, Var v) const {
    return config_.activation == Activation::GELU ? tape.gelu(v) : tape.silu(v);
}

Var Surrogate::tape_forward(Tape& tape, const std::vector<Mat>& steps) {
    const int W = config_.window;
    if (static_cast<int>(steps.size()) != W + 1)
        throw std::runtime_error("surrogate: expected " + std::to_string(W + 1) + " window rows");
    const auto B = steps.front().cols();
    const int d = config_.hidden_dim;
    auto P = [&](const std::string& name) {
        return tape.param(params_.tensor(name), &params_.grad(name));
    };

    std::vector<Var> seq;
    for (int t = 0; t < W; ++t) seq.push_back(tape.input(steps[static_cast<std::size_t>(t)]));
    Var skip = tape.input(steps.back());

    Var h = tape.input(Mat::Zero(d, B));
    for (int l = 0; l < config_.layers(); ++l) {
        const std::string p = "enc" + std::to_string(l) + ".";
        if (config_.encoder == EncoderKind::TCN) {
            const int dil = 1 << l;
            std::vector<Var> kernels;
            for (int k = 0; k < config_.tcn_kernel; ++k)
                kernels.push_back(P(p + "K" + std::to_string(k)));
            Var b = P(p + "b");
            std::vector<Var> out(seq.size());
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Var y{};
                for (int k = 0; k < config_.tcn_kernel; ++k) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - k * dil;
                    if (src < 0) continue;
                    Var term = tape.matmul(kernels[static_cast<std::size_t>(k)],
                                           seq[static_cast<std::size_t>(src)]);
                    y = y.valid() ? tape.add(y, term) : term;
                }
                y = tape.add_col_broadcast(y, b);
                y = tape_activation(tape, y);
                if (l > 0) y = tape.add(y, seq[t]);
                out[t] = y;
            }
            seq = std::move(out);
            h = seq.back();
            continue;
        }
        Var hl = tape.input(Mat::Zero(d, B));
        Var cl = tape.input(Mat::Zero(d, B));
        std::vector<Var> out(seq.size());
        if (config_.encoder == EncoderKind::GRU) {
            Var Wz = P(p + "Wz"), Uz = P(p + "Uz"), bz = P(p + "bz");
            Var Wr = P(p + "Wr"), Ur = P(p + "Ur"), br = P(p + "br");
            Var Wh = P(p + "Wh"), Uh = P(p + "Uh"), bh = P(p + "bh");
            Var ones = tape.input(Mat::Ones(d, B));
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Var z = tape.sigmoid(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wz, seq[t]), tape.matmul(Uz, hl)), bz));
                Var r = tape.sigmoid(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wr, seq[t]), tape.matmul(Ur, hl)), br));
                Var htil = tape.tanh(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wh, seq[t]), tape.matmul(Uh, tape.hadamard(r, hl))), bh));
                hl = tape.add(tape.hadamard(tape.sub(ones, z), hl), tape.hadamard(z, htil));
                out[t] = hl;
            }
        } else {
            Var Wi = P(p + "Wi"), Ui = P(p + "Ui"), bi = P(p + "bi");
            Var Wf = P(p + "Wf"), Uf = P(p + "Uf"), bf = P(p + "bf");
            Var Wo = P(p + "Wo"), Uo = P(p + "Uo"), bo = P(p + "bo");
            Var Wg = P(p + "Wg"), Ug = P(p + "Ug"), bg = P(p + "bg");
            for (std::size_t t = 0; t < seq.size(); ++t) {
                Var i = tape.sigmoid(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wi, seq[t]), tape.matmul(Ui, hl)), bi));
                Var f = tape.sigmoid(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wf, seq[t]), tape.matmul(Uf, hl)), bf));
                Var o = tape.sigmoid(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wo, seq[t]), tape.matmul(Uo, hl)), bo));
                Var g = tape.tanh(tape.add_col_broadcast(
                    tape.add(tape.matmul(Wg, seq[t]), tape.matmul(Ug, hl)), bg));
                cl = tape.add(tape.hadamard(f, cl), tape.hadamard(i, g));
                hl = tape.hadamard(o, tape.tanh(cl));
                out[t] = hl;
            }
        }
        seq = std::move(out);
        h = hl;
    }

    Var z = tape.concat_rows(h, skip);
    Var a1 = tape_activation(
        tape, tape.add_col_broadcast(tape.matmul(P("head.W1"), z), P("head.b1")));
    return tape.add_col_broadcast(tape.matmul(P("head.W2"), a1), P("head.b2"));
}

std::vector<Mat> Surrogate::batch_steps(const std::vector<const WindowSample*>& samples) const {
    const int W = config_.window;
    const auto B = static_cast<Eigen::Index>(samples.size());
    std::vector<Mat> steps(static_cast<std::size_t>(W + 1), Mat(config_.n_inputs, B));
    for (Eigen::Index j = 0; j < B; ++j) {
        const auto& x = samples[static_cast<std::size_t>(j)]->x;
        if (static_cast<int>(x.size()) != W + 1)
            throw std::runtime_error("surrogate: sample window size mismatch");
        for (int t = 0; t <= W; ++t)
            for (int c = 0; c < config_.n_inputs; ++c)
                steps[static_cast<std::size_t>(t)](c, j) =
                    (x[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] -
                     stats_.x_mean[static_cast<std::size_t>(c)]) /
                    stats_.x_std[static_cast<std::size_t>(c)];
    }
    return steps;
}

double Surrogate::forward_window(const std::vector<std::vector<double>>& x_raw) const {
    const int W = config_.window;
    if (static_cast<int>(x_raw.size()) != W + 1)
        throw std::runtime_error("surrogate: window must have W+1 rows");
    std::vector<Mat> steps(static_cast<std::size_t>(W + 1), Mat(config_.n_inputs, 1));
    for (int t = 0; t <= W; ++t) {
        const auto& row = x_raw[static_cast<std::size_t>(t)];
        if (static_cast<int>(row.size()) != config_.n_inputs)
            throw std::runtime_error("surrogate: window row has wrong gas count");
        for (int c = 0; c < config_.n_inputs; ++c) {
            double v = (row[static_cast<std::size_t>(c)] - stats_.x_mean[static_cast<std::size_t>(c)]) /
                       stats_.x_std[static_cast<std::size_t>(c)];
            if (!std::isfinite(v)) throw std::runtime_error("surrogate: non-finite input");
            steps[static_cast<std::size_t>(t)](c, 0) = v;
        }
    }
    return stats_.invert_y(forward_normalized(steps)(0, 0));
}

std::vector<double> Surrogate::forward_batch(
    const std::vector<const WindowSample*>& samples) const {
    if (samples.empty()) return {};
    Mat y = forward_normalized(batch_steps(samples));
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = stats_.invert_y(y(0, static_cast<Eigen::Index>(i)));
    return out;
}

EvalResult Surrogate::evaluate(const std::vector<const WindowSample*>& samples) const {
    std::vector<double> preds, targets;
    // Chunked to bound memory on large splits.
    const std::size_t chunk = 1024;
    for (std::size_t i = 0; i < samples.size(); i += chunk) {
        std::vector<const WindowSample*> part(
            samples.begin() + static_cast<std::ptrdiff_t>(i),
            samples.begin() + static_cast<std::ptrdiff_t>(std::min(i + chunk, samples.size())));
        auto p = forward_batch(part);
        preds.insert(preds.end(), p.begin(), p.end());
        for (const auto* s : part) targets.push_back(s->y);
    }
    return evaluate_predictions(preds, targets);
}

TrainMetrics Surrogate::train(const Dataset& dataset) {
    auto train_samples = dataset.of_split(Split::Train);
    auto val_samples = dataset.of_split(Split::Val);
    if (train_samples.empty()) throw std::runtime_error("surrogate: empty training split");

    nn::Adam adam(config_.learning_rate);
    rng::Stream shuffle_stream(rng::key(config_.seed, 0x73687566ULL, 0, 0));  // "shuf"
    metrics_ = TrainMetrics{};

    std::vector<double> best_params = params_.flatten_values();
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_stream.next_below(i)]);

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        const auto bs = static_cast<std::size_t>(config_.batch_size);
        for (std::size_t off = 0; off < order.size(); off += bs) {
            std::vector<const WindowSample*> batch;
            Mat targets(1, static_cast<Eigen::Index>(std::min(bs, order.size() - off)));
            for (std::size_t j = 0; j < static_cast<std::size_t>(targets.cols()); ++j) {
                const WindowSample* s = train_samples[order[off + j]];
                batch.push_back(s);
                targets(0, static_cast<Eigen::Index>(j)) = stats_.apply_y(s->y);
            }
            Tape tape;
            params_.zero_grads();
            Var pred = tape_forward(tape, batch_steps(batch));
            Var loss = tape.mse(pred, tape.input(targets));
            const double loss_val = tape.value(loss)(0, 0);
            if (!std::isfinite(loss_val)) {
                metrics_.diverged = true;
                params_.unflatten_values(best_params);
                return metrics_;
            }
            tape.backward(loss);
            adam.step(params_);
            loss_sum += loss_val;
            ++n_batches;
        }
        metrics_.train_loss.push_back(loss_sum / static_cast<double>(n_batches));

        double val_rmse = val_samples.empty()
                              ? std::sqrt(metrics_.train_loss.back()) * stats_.y_std
                              : evaluate(val_samples).rmse;
        metrics_.val_rmse.push_back(val_rmse);

        if (val_rmse < best_val) {
            best_val = val_rmse;
            best_params = params_.flatten_values();
            metrics_.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config_.patience) {
            break;
        } else if (config_.lr_patience > 0 && since_best % config_.lr_patience == 0) {
            adam.set_lr(std::max(config_.min_lr, adam.lr() * config_.lr_decay));
        }
        if (config_.target_val_rmse > 0.0 && val_rmse <= config_.target_val_rmse) break;
    }
    params_.unflatten_values(best_params);
    return metrics_;
}

namespace {
constexpr char kCkptMagic[8] = {'S', 'C', 'M', 'C', 'K', 'P', 'T', '1'};

json config_to_json(const SurrogateConfig& c) {
    return json{{"encoder", to_string(c.encoder)},
                {"hidden_dim", c.hidden_dim},
                {"encoder_layers", c.encoder_layers},
                {"head_hidden", c.head_hidden},
                {"activation", to_string(c.activation)},
                {"window", c.window},
                {"n_inputs", c.n_inputs},
                {"tcn_kernel", c.tcn_kernel},
                {"learning_rate", c.learning_rate},
                {"lr_decay", c.lr_decay},
                {"lr_patience", c.lr_patience},
                {"min_lr", c.min_lr},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"target_val_rmse", c.target_val_rmse},
                {"seed", c.seed}};
}

SurrogateConfig config_from_json(const json& j) {
    SurrogateConfig c;
    c.encoder = encoder_from_string(j.at("encoder").get<std::string>());
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.head_hidden = j.at("head_hidden").get<int>();
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.window = j.at("window").get<int>();
    c.n_inputs = j.at("n_inputs").get<int>();
    c.tcn_kernel = j.at("tcn_kernel").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.lr_patience = j.value("lr_patience", c.lr_patience);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.batch_size = j.at("batch_size").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.target_val_rmse = j.at("target_val_rmse").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}
}  // namespace

void Surrogate::save(const std::string& path) const {
    json header;
    header["version"] = 1;
    header["config"] = config_to_json(config_);
    header["registry_hash"] = registry_hash_;
    header["stats"] = {{"x_mean", stats_.x_mean},
                       {"x_std", stats_.x_std},
                       {"y_mean", stats_.y_mean},
                       {"y_std", stats_.y_std}};
    header["metrics"] = {{"train_loss", metrics_.train_loss},
                         {"val_rmse", metrics_.val_rmse},
                         {"best_epoch", metrics_.best_epoch},
                         {"diverged", metrics_.diverged}};
    const std::string head = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("surrogate: cannot write " + path);
    out.write(kCkptMagic, sizeof(kCkptMagic));
    std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    params_.save(out);
    if (!out) throw std::runtime_error("surrogate: write failed for " + path);
}

Surrogate Surrogate::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("surrogate: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kCkptMagic, 8))
        throw std::runtime_error("surrogate: bad checkpoint magic in " + path);
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    json header = json::parse(head);
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("surrogate: unsupported checkpoint version");

    NormStats stats;
    stats.x_mean = header.at("stats").at("x_mean").get<std::vector<double>>();
    stats.x_std = header.at("stats").at("x_std").get<std::vector<double>>();
    stats.y_mean = header.at("stats").at("y_mean").get<double>();
    stats.y_std = header.at("stats").at("y_std").get<double>();

    Surrogate model(config_from_json(header.at("config")), std::move(stats),
                    header.at("registry_hash").get<std::uint64_t>());
    model.params_.load(in);
    model.metrics_.train_loss = header.at("metrics").at("train_loss").get<std::vector<double>>();
    model.metrics_.val_rmse = header.at("metrics").at("val_rmse").get<std::vector<double>>();
    model.metrics_.best_epoch = header.at("metrics").at("best_epoch").get<int>();
    model.metrics_.diverged = header.at("metrics").at("diverged").get<bool>();
    return model;
}

SurrogateStepper::SurrogateStepper(const Surrogate& model,
                                   const std::vector<std::vector<double>>& history, int last_year)
    : model_(&model), year_(last_year) {
    const int W = model.config().window;
    if (static_cast<int>(history.size()) < W)
        throw std::runtime_error("stepper: need at least " + std::to_string(W) +
                                 " history rows, got " + std::to_string(history.size()));
    for (std::size_t i = history.size() - static_cast<std::size_t>(W); i < history.size(); ++i) {
        if (static_cast<int>(history[i].size()) != model.config().n_inputs)
            throw std::runtime_error("stepper: history row has wrong gas count");
        buffer_.push_back(history[i]);
    }
}

double SurrogateStepper::step(const std::vector<double>& emissions_controllable) {
    if (static_cast<int>(emissions_controllable.size()) != model_->config().n_inputs)
        throw std::runtime_error("stepper: expected " + std::to_string(model_->config().n_inputs) +
                                 " controllable gases");
    std::vector<std::vector<double>> window(buffer_.begin(), buffer_.end());
    window.push_back(emissions_controllable);
    last_temp_ = model_->forward_window(window);
    buffer_.push_back(emissions_controllable);
    buffer_.pop_front();
    ++year_;
    return last_temp_;
}

}  // namespace scmgame
