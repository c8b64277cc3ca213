#ifndef S2C_EVALUATION_HPP
#define S2C_EVALUATION_HPP

#include "s2c/dataset.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace s2c {

/// Average (fractional) ranks, 1-based, ascending by value.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Spearman correlation of two equal-length vectors (>= 2), ties averaged.
/// Returns 0 when either side is constant.
double srcc(std::span<const double> pred, std::span<const double> truth);

/// Indices of the k best entries by descending value, ties to the lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t k);

inline constexpr int kAccReturns = 4;
inline constexpr const char* kAccConvention =
    "ACC_k = mean over j=1..4 of the fraction of images whose j-th best predicted candidate is in the truth top-k "
    "(truth ties broken by lower index)";

/// Percent in [0, 100]. Images with fewer than k candidates are skipped and counted.
double acc_topk(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& truth,
                std::size_t k, std::size_t* skipped = nullptr);

/// 1-based rank, among truth scores, of the candidate the prediction puts first.
std::size_t best_pred_rank_in_truth(std::span<const double> pred, std::span<const double> truth);

struct ImageEval {
    std::string image_id;
    double srcc = 0;
    std::size_t best_pred_rank_in_truth = 0;
};

struct EvalReport {
    double srcc_mean = 0;
    double acc5 = 0;
    double acc10 = 0;
    std::size_t acc5_skipped = 0;
    std::size_t acc10_skipped = 0;
    std::vector<ImageEval> per_image;
    std::size_t feature_passes = 0;
    double seconds = 0;
    double images_per_second = 0;
    std::vector<std::vector<double>> predictions;  ///< per image, aligned with candidates
};

/// Scores one sample's candidates; must use a single feature pass.
using CandidateScorer = std::function<std::vector<double>(const LoadedSample&)>;

/// Aggregates metrics from any scorer. A NaN score throws NumericalError naming the image.
EvalReport evaluate_scores(const std::vector<LoadedSample>& samples, const CandidateScorer& scorer);

/// Proposals for a sample, padded to n: the record's own, or the heuristic
/// fallback when the record has none and `allow_heuristic` is set.
std::vector<RegionBox> sample_proposals(const LoadedSample& sample, Index n, bool allow_heuristic = true);

/// Evaluates a model with one feature pass per image, counted in feature_passes.
template <typename S>
EvalReport evaluate(const Model<S>& model, const std::vector<LoadedSample>& samples, bool allow_heuristic = true);

/// Report CSV (per image) and JSON summary text. Timing is excluded from both.
std::string report_csv(const EvalReport& report);
std::string report_summary_json(const EvalReport& report);
/// pred, mos pairs for external scatter plots.
std::string scatter_csv(const EvalReport& report, const std::vector<LoadedSample>& samples);

} // namespace s2c

#endif
