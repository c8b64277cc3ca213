#include "s2c/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace s2c {

PredWeighting parse_pred_weighting(const std::string& name) {
    if (name == "uniform") return PredWeighting::uniform;
    if (name == "mos") return PredWeighting::mos;
    throw ConfigError("unknown prediction-loss weighting '" + name + "' (expected uniform or mos)");
}

std::string to_string(PredWeighting w) { return w == PredWeighting::uniform ? "uniform" : "mos"; }

namespace {

void check_lengths(std::size_t pred, std::size_t truth, const char* what) {
    if (pred != truth)
        throw DataError(std::string(what) + ": " + std::to_string(pred) + " predictions vs " + std::to_string(truth) +
                        " targets");
    if (pred == 0) throw DataError(std::string(what) + ": empty input");
}

std::vector<double> pred_weights(std::span<const double> truth, PredWeighting weighting) {
    std::vector<double> w(truth.size(), 1.0);
    if (weighting == PredWeighting::mos) {
        const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) w[i] = truth[i] / mean;
    }
    return w;
}

int sign_of(double v) { return (v > 0) - (v < 0); }

// Value and d(loss)/d(pred) in one pass.
double pred_loss_grad(std::span<const double> pred, std::span<const double> truth, PredWeighting weighting,
                      std::vector<double>* grad) {
    check_lengths(pred.size(), truth.size(), "loss_pred");
    const auto w = pred_weights(truth, weighting);
    const double inv_k = 1.0 / static_cast<double>(pred.size());
    double loss = 0;
    if (grad) grad->assign(pred.size(), 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double t = pred[i] - truth[i];
        const double a = std::abs(t);
        loss += w[i] * (a < 1.0 ? 0.5 * t * t : a - 0.5);
        if (grad) (*grad)[i] = w[i] * inv_k * (a < 1.0 ? t : static_cast<double>(sign_of(t)));
    }
    return loss * inv_k;
}

double rank_loss_grad(std::span<const double> pred, std::span<const double> truth, double margin, bool literal,
                      std::vector<double>* grad) {
    check_lengths(pred.size(), truth.size(), "loss_rank");
    const std::size_t k = pred.size();
    if (grad) grad->assign(k, 0.0);
    if (k < 2) return 0.0;
    const double norm = 2.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
    double loss = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double dt = truth[i] - truth[j];
            const int s = sign_of(dt);
            if (s == 0) continue;
            const double dp = pred[i] - pred[j];
            if (literal) {
                const double term = s * dt * dp;
                if (term <= 0) continue;
                loss += term;
                if (grad) {
                    (*grad)[i] += norm * s * dt;
                    (*grad)[j] -= norm * s * dt;
                }
            } else {
                const double h = margin - s * dp;
                if (h <= 0) continue;
                loss += h;
                if (grad) {
                    (*grad)[i] -= norm * s;
                    (*grad)[j] += norm * s;
                }
            }
        }
    return loss * norm;
}

template <typename S>
std::vector<double> column_values(const Var<S>& pred) {
    if (pred.cols() != 1) throw DimensionError("loss expects a K x 1 prediction column, got " + shape_of(pred.value()));
    std::vector<double> v(static_cast<std::size_t>(pred.rows()));
    for (Index i = 0; i < pred.rows(); ++i) v[static_cast<std::size_t>(i)] = static_cast<double>(pred.value()(i, 0));
    return v;
}

template <typename S>
Var<S> loss_node(const Var<S>& pred, double value, std::vector<double> grad) {
    Matrix<S> out(1, 1);
    out(0, 0) = static_cast<S>(value);
    const std::size_t in = pred.id();
    return pred.tape()->record(std::move(out), {pred}, [in, grad = std::move(grad)](Tape<S>& t, std::size_t self) {
        const S g = t.grad(self)(0, 0);
        auto& gi = t.grad(in);
        for (std::size_t i = 0; i < grad.size(); ++i) gi(static_cast<Index>(i), 0) += g * static_cast<S>(grad[i]);
    });
}

} // namespace

double loss_pred(std::span<const double> pred, std::span<const double> truth, PredWeighting weighting) {
    return pred_loss_grad(pred, truth, weighting, nullptr);
}

double loss_rank(std::span<const double> pred, std::span<const double> truth, double margin, bool literal) {
    return rank_loss_grad(pred, truth, margin, literal, nullptr);
}

template <typename S>
Var<S> loss_pred(const Var<S>& pred, std::span<const double> truth, PredWeighting weighting) {
    const auto p = column_values(pred);
    std::vector<double> grad;
    const double v = pred_loss_grad(p, truth, weighting, &grad);
    return loss_node(pred, v, std::move(grad));
}

template <typename S>
Var<S> loss_rank(const Var<S>& pred, std::span<const double> truth, double margin, bool literal) {
    const auto p = column_values(pred);
    std::vector<double> grad;
    const double v = rank_loss_grad(p, truth, margin, literal, &grad);
    return loss_node(pred, v, std::move(grad));
}

template <typename S>
AdamW<S>::AdamW(ParameterSet<S>& params, AdamWConfig config) : params_(params), config_(config) {
    for (const auto& p : params_) {
        m_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
    }
}

template <typename S>
void AdamW<S>::step() {
    if (m_.size() != params_.size()) throw UsageError("AdamW: parameter set changed after construction");
    for (const auto& p : params_)
        if (!p.grad.allFinite()) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const S lr = static_cast<S>(config_.learning_rate);
    const S decay = static_cast<S>(1.0 - config_.learning_rate * config_.weight_decay);
    const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
    const S eps = static_cast<S>(config_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
        v_[i] = b2 * v_[i] + (S(1) - b2) * p.grad.cwiseProduct(p.grad);
        p.value *= decay;
        const Matrix<S> mhat = m_[i] / static_cast<S>(c1);
        const Matrix<S> vhat = v_[i] / static_cast<S>(c2);
        p.value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
        p.zero_grad();
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(weight_decay >= 0)) throw ConfigError("train: weight_decay must be >= 0");
    if (!(lambda_rank >= 0)) throw ConfigError("train: lambda_rank must be >= 0");
    if (batch_images < 1) throw ConfigError("train: batch_images must be >= 1");
    if (candidate_sample_k < 2) throw ConfigError("train: candidate_sample_k must be >= 2");
    if (!(flip_probability >= 0 && flip_probability <= 1)) throw ConfigError("train: flip_probability must be in [0, 1]");
}

namespace {

template <typename S>
std::vector<Matrix<S>> snapshot(const ParameterSet<S>& params) {
    std::vector<Matrix<S>> out;
    for (const auto& p : params) out.push_back(p.value);
    return out;
}

template <typename S>
void restore(ParameterSet<S>& params, const std::vector<Matrix<S>>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) params[i].value = values[i];
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(k);
    return idx;
}

} // namespace

template <typename S>
TrainResult train(Model<S>& model, const std::vector<LoadedSample>& train_set, const std::vector<LoadedSample>& val_set,
                  const TrainConfig& config, const BestCallback<S>& on_best,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    if (train_set.empty()) throw DataError("train: empty training set");
    const auto& held_out = val_set.empty() ? train_set : val_set;
    const auto start = std::chrono::steady_clock::now();
    Rng rng(config.seed);
    AdamW<S> opt(model.params(), AdamWConfig{config.learning_rate, config.weight_decay});
    model.params().zero_grad();
    TrainResult result;
    auto best = snapshot(model.params());
    const auto batch = static_cast<std::size_t>(config.batch_images);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::size_t> order(train_set.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0;
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t end = std::min(order.size(), b + batch);
            const S share = static_cast<S>(1.0 / static_cast<double>(end - b));
            for (std::size_t i = b; i < end; ++i) {
                const LoadedSample* sample = &train_set[order[i]];
                LoadedSample flipped;
                if (rng.bernoulli(config.flip_probability)) {
                    flipped = flip_sample(*sample);
                    sample = &flipped;
                }
                const auto& rec = sample->record;
                const auto pick =
                    sample_without_replacement(rec.candidates.size(), static_cast<std::size_t>(config.candidate_sample_k), rng);
                std::vector<RegionBox> crops;
                std::vector<double> truth;
                for (std::size_t c : pick) {
                    crops.push_back(rec.candidates[c]);
                    truth.push_back(rec.mos[c]);
                }
                Tape<S> tape;
                const auto features = model.features(tape, sample->scene());
                const auto props = sample_proposals(*sample, model.config().proposals, config.allow_heuristic);
                const auto pred = model.score(tape, features, props, crops);
                auto loss = loss_pred(pred, truth, config.weighting);
                if (config.lambda_rank > 0)
                    loss = add(loss, scale(loss_rank(pred, truth, config.rank_margin, config.literal_rank),
                                           static_cast<S>(config.lambda_rank)));
                const double value = static_cast<double>(loss.value()(0, 0));
                if (!std::isfinite(value)) {
                    restore(model.params(), best);
                    throw NumericalError("training diverged at epoch " + std::to_string(epoch) + " on image '" +
                                         rec.image_id + "' (loss " + std::to_string(value) + ")");
                }
                tape.backward(scale(loss, share));
                loss_sum += value;
            }
            try {
                opt.step();
            } catch (const NumericalError&) {
                restore(model.params(), best);
                throw;
            }
        }

        const auto report = evaluate(model, held_out, config.allow_heuristic);
        EpochLog log{epoch, loss_sum / static_cast<double>(order.size()), report.srcc_mean, report.acc5, report.acc10};
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);
        if (report.srcc_mean > result.best_srcc) {
            result.best_srcc = report.srcc_mean;
            result.best_epoch = epoch;
            best = snapshot(model.params());
            if (on_best) on_best(model, log);
        }
    }
    restore(model.params(), best);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string metrics_csv(const std::vector<EpochLog>& history) {
    std::ostringstream o;
    o.precision(9);
    o << "epoch,train_loss,val_srcc,val_acc5,val_acc10\n";
    for (const auto& e : history)
        o << e.epoch << ',' << e.train_loss << ',' << e.val_srcc << ',' << e.val_acc5 << ',' << e.val_acc10 << '\n';
    return o.str();
}

#define S2C_INSTANTIATE_TRAINING(S)                                                                                  \
    template Var<S> loss_pred(const Var<S>&, std::span<const double>, PredWeighting);                                 \
    template Var<S> loss_rank(const Var<S>&, std::span<const double>, double, bool);                                  \
    template class AdamW<S>;                                                                                          \
    template TrainResult train(Model<S>&, const std::vector<LoadedSample>&, const std::vector<LoadedSample>&,          \
                               const TrainConfig&, const BestCallback<S>&, const std::function<void(const EpochLog&)>&);

S2C_INSTANTIATE_TRAINING(float)
S2C_INSTANTIATE_TRAINING(double)

} // namespace s2c
