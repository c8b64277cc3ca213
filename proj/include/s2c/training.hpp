#ifndef S2C_TRAINING_HPP
#define S2C_TRAINING_HPP

#include "s2c/evaluation.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace s2c {

enum class PredWeighting { uniform, mos };
PredWeighting parse_pred_weighting(const std::string& name);
std::string to_string(PredWeighting w);

/// Mean smooth-L1 between predictions and MOS targets.
double loss_pred(std::span<const double> pred, std::span<const double> truth,
                 PredWeighting weighting = PredWeighting::uniform);

/// Mean over i < j of max(0, margin - sign(t_i - t_j)(p_i - p_j)); target ties add 0.
/// With `literal` set, the product form max(0, sign(t_i - t_j)(t_i - t_j)(p_i - p_j))
/// is used instead. Its sign factor cancels, so it penalizes p_i > p_j for i < j
/// whatever the targets say; it is kept for auditing only.
double loss_rank(std::span<const double> pred, std::span<const double> truth, double margin = 0.0,
                 bool literal = false);

/// Tape versions over a K x 1 prediction column.
template <typename S>
Var<S> loss_pred(const Var<S>& pred, std::span<const double> truth, PredWeighting weighting = PredWeighting::uniform);
template <typename S>
Var<S> loss_rank(const Var<S>& pred, std::span<const double> truth, double margin = 0.0, bool literal = false);

struct AdamWConfig {
    double learning_rate = 1e-4;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Decoupled weight decay Adam. step() consumes and then zeroes the gradients.
template <typename S>
class AdamW {
public:
    AdamW(ParameterSet<S>& params, AdamWConfig config);
    /// Throws NumericalError naming the first parameter with a non-finite gradient.
    void step();
    std::size_t steps() const { return t_; }

private:
    ParameterSet<S>& params_;
    AdamWConfig config_;
    std::vector<Matrix<S>> m_, v_;
    std::size_t t_ = 0;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 80;
    double weight_decay = 1e-4;
    double lambda_rank = 1.0;
    double rank_margin = 0.0;
    bool literal_rank = false;
    PredWeighting weighting = PredWeighting::uniform;
    int batch_images = 1;
    int candidate_sample_k = 16;
    std::uint64_t seed = 0;
    double flip_probability = 0.5;
    bool allow_heuristic = true;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0;
    double val_srcc = 0;
    double val_acc5 = 0;
    double val_acc10 = 0;
};

struct TrainResult {
    std::vector<EpochLog> history;
    int best_epoch = 0;
    double best_srcc = -2;
    double seconds = 0;
};

/// Called whenever held-out SRCC improves, with the model holding the new best parameters.
template <typename S>
using BestCallback = std::function<void(const Model<S>&, const EpochLog&)>;

/// Trains in place and leaves the best-SRCC parameters in `model`. On a
/// non-finite loss the best parameters are restored and NumericalError is thrown.
template <typename S>
TrainResult train(Model<S>& model, const std::vector<LoadedSample>& train_set, const std::vector<LoadedSample>& val_set,
                  const TrainConfig& config, const BestCallback<S>& on_best = {},
                  const std::function<void(const EpochLog&)>& on_epoch = {});

std::string metrics_csv(const std::vector<EpochLog>& history);

} // namespace s2c

#endif
