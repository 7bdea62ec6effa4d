#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "nn/optim.hpp"
#include "nn/tape.hpp"

namespace scmgame {

enum class EncoderKind { GRU, LSTM, TCN };
enum class Activation { GELU, SiLU };

struct SurrogateConfig {
    EncoderKind encoder = EncoderKind::GRU;
    int hidden_dim = 64;
    int encoder_layers = 0;  // 0 = default (1 recurrent, 5 TCN)
    int head_hidden = 64;
    Activation activation = Activation::GELU;
    int window = 65;
    int n_inputs = 5;
    int tcn_kernel = 4;
    double learning_rate = 3e-3;
    // Reduce-on-plateau schedule: multiply the rate by lr_decay after
    // lr_patience epochs without a validation improvement, down to min_lr.
    double lr_decay = 0.5;
    int lr_patience = 3;
    double min_lr = 1e-5;
    int batch_size = 256;
    int max_epochs = 60;
    int patience = 10;
    // Optional early exit once validation RMSE [K] drops below this (0 = off).
    double target_val_rmse = 0.0;
    std::uint64_t seed = 0;

    int layers() const;
    int tcn_receptive_field() const;
    void validate() const;
};

struct TrainMetrics {
    std::vector<double> train_loss;  // per epoch, normalized MSE
    std::vector<double> val_rmse;    // per epoch, K
    int best_epoch = -1;
    bool diverged = false;
};

struct EvalResult {
    double rmse = 0.0;
    std::optional<double> r2;
};

EvalResult evaluate_predictions(const std::vector<double>& preds,
                                const std::vector<double>& targets);

// The learned emulator: recurrent (or dilated-convolution) encoder over the
// first W rows of the window, skip concatenation with the current-year row,
// two-layer MLP head. 64-bit floats throughout.
class Surrogate {
  public:
    Surrogate(SurrogateConfig config, NormStats stats, std::uint64_t registry_hash);

    // One raw (unnormalized) window of W+1 rows, |C| columns -> ΔT̂ in K.
    double forward_window(const std::vector<std::vector<double>>& x_raw) const;
    // Batched; one output per sample, equal to independent single calls.
    std::vector<double> forward_batch(const std::vector<const WindowSample*>& samples) const;

    TrainMetrics train(const Dataset& dataset);
    EvalResult evaluate(const std::vector<const WindowSample*>& samples) const;

    // Builds the tape graph for a batch and returns the normalized 1xB
    // prediction; exposed for gradient tests.
    nn::Var tape_forward(nn::Tape& tape, const std::vector<nn::Mat>& steps_normalized);

    void save(const std::string& path) const;
    static Surrogate load(const std::string& path);

    const SurrogateConfig& config() const { return config_; }
    const NormStats& stats() const { return stats_; }
    std::uint64_t registry_hash() const { return registry_hash_; }
    nn::ParamStore& params() { return params_; }
    const TrainMetrics& metrics() const { return metrics_; }

  private:
    // steps: W encoder inputs then the skip row, each (n_inputs x B), normalized.
    nn::Mat forward_normalized(const std::vector<nn::Mat>& steps) const;
    std::vector<nn::Mat> batch_steps(const std::vector<const WindowSample*>& samples) const;
    void build_params(rng::Stream& stream);
    nn::Var tape_activation(nn::Tape& tape, nn::Var v) const;

    SurrogateConfig config_;
    NormStats stats_;
    std::uint64_t registry_hash_ = 0;
    nn::ParamStore params_;
    TrainMetrics metrics_;
};

// Simulator-shaped wrapper: bounded rolling history of the last W+1
// controllable-gas emission rows; step(E_C) appends and predicts.
class SurrogateStepper {
  public:
    // history rows are raw controllable-gas emissions ending at last_year;
    // at least W rows are required.
    SurrogateStepper(const Surrogate& model, const std::vector<std::vector<double>>& history,
                     int last_year);

    double step(const std::vector<double>& emissions_controllable);
    int year() const { return year_; }
    double last_temp() const { return last_temp_; }
    SurrogateStepper clone() const { return *this; }

  private:
    const Surrogate* model_;
    std::deque<std::vector<double>> buffer_;  // last W rows (history part)
    int year_ = 0;
    double last_temp_ = 0.0;
};

std::string to_string(EncoderKind k);
std::string to_string(Activation a);
EncoderKind encoder_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

}  // namespace scmgame
