#include "s2c/evaluation.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace s2c {

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw DataError("srcc: length mismatch");
    if (pred.size() < 2) throw DataError("srcc: need at least 2 values");
    const auto rp = fractional_ranks(pred);
    const auto rt = fractional_ranks(truth);
    const double n = static_cast<double>(rp.size());
    const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
    const double mt = std::accumulate(rt.begin(), rt.end(), 0.0) / n;
    double cov = 0, vp = 0, vt = 0;
    for (std::size_t i = 0; i < rp.size(); ++i) {
        cov += (rp[i] - mp) * (rt[i] - mt);
        vp += (rp[i] - mp) * (rp[i] - mp);
        vt += (rt[i] - mt) * (rt[i] - mt);
    }
    if (vp == 0 || vt == 0) return 0.0;
    return cov / std::sqrt(vp * vt);
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t k) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    if (order.size() > k) order.resize(k);
    return order;
}

double acc_topk(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& truth,
                std::size_t k, std::size_t* skipped) {
    if (pred.size() != truth.size()) throw DataError("acc_topk: image counts differ");
    if (k == 0) throw UsageError("acc_topk: k must be >= 1");
    std::size_t used = 0, skip = 0;
    double hits = 0;
    for (std::size_t img = 0; img < pred.size(); ++img) {
        if (pred[img].size() != truth[img].size()) throw DataError("acc_topk: candidate counts differ");
        if (truth[img].size() < std::max<std::size_t>(k, kAccReturns)) {
            ++skip;
            continue;
        }
        const auto truth_top = top_indices(truth[img], k);
        const auto returns = top_indices(pred[img], kAccReturns);
        for (std::size_t r : returns)
            if (std::find(truth_top.begin(), truth_top.end(), r) != truth_top.end()) hits += 1;
        ++used;
    }
    if (skipped != nullptr) *skipped = skip;
    if (used == 0) return 0.0;
    return 100.0 * hits / (static_cast<double>(used) * kAccReturns);
}

std::size_t best_pred_rank_in_truth(std::span<const double> pred, std::span<const double> truth) {
    const auto best = top_indices(pred, 1).at(0);
    const auto order = top_indices(truth, truth.size());
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), best) - order.begin()) + 1;
}

EvalReport evaluate_scores(const std::vector<LoadedSample>& samples, const CandidateScorer& scorer) {
    EvalReport report;
    std::vector<std::vector<double>> truth;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& s : samples) {
        auto scores = scorer(s);
        if (scores.size() != s.record.candidates.size())
            throw DataError("image '" + s.record.image_id + "': scorer returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(s.record.candidates.size()) + " candidates");
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (std::isnan(scores[i]))
                throw NumericalError("image '" + s.record.image_id + "': candidate " + std::to_string(i) + " scored NaN");
        ImageEval e;
        e.image_id = s.record.image_id;
        e.srcc = srcc(scores, s.record.mos);
        e.best_pred_rank_in_truth = best_pred_rank_in_truth(scores, s.record.mos);
        report.per_image.push_back(e);
        report.predictions.push_back(std::move(scores));
        truth.push_back(s.record.mos);
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!samples.empty()) {
        double sum = 0;
        for (const auto& e : report.per_image) sum += e.srcc;
        report.srcc_mean = sum / static_cast<double>(samples.size());
        report.images_per_second = static_cast<double>(samples.size()) / std::max(report.seconds, 1e-9);
    }
    report.acc5 = acc_topk(report.predictions, truth, 5, &report.acc5_skipped);
    report.acc10 = acc_topk(report.predictions, truth, 10, &report.acc10_skipped);
    return report;
}

std::vector<RegionBox> sample_proposals(const LoadedSample& sample, Index n, bool allow_heuristic) {
    const auto& r = sample.record;
    const auto count = static_cast<std::size_t>(n);
    if (!r.proposals.empty()) return prepare_proposals(r.proposals, count, r.width, r.height);
    if (!allow_heuristic) throw DataError("image '" + r.image_id + "' has no proposals and the heuristic fallback is off");
    if (!sample.image) throw DataError("image '" + r.image_id + "' has no proposals and no pixels for the fallback");
    const auto found = heuristic_proposals(*sample.image, count);
    return prepare_proposals(found, count, r.width, r.height);
}

template <typename S>
EvalReport evaluate(const Model<S>& model, const std::vector<LoadedSample>& samples, bool allow_heuristic) {
    const std::size_t before = model.feature_passes();
    auto report = evaluate_scores(samples, [&](const LoadedSample& s) {
        const auto props = sample_proposals(s, model.config().proposals, allow_heuristic);
        return model.score_candidates(s.scene(), props, s.record.candidates);
    });
    report.feature_passes = model.feature_passes() - before;
    return report;
}

template EvalReport evaluate(const Model<float>&, const std::vector<LoadedSample>&, bool);
template EvalReport evaluate(const Model<double>&, const std::vector<LoadedSample>&, bool);

namespace {

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(9);
    o << v;
    return o.str();
}

} // namespace

std::string report_csv(const EvalReport& report) {
    std::ostringstream o;
    o << "image_id,srcc,best_pred_rank_in_truth\n";
    for (const auto& e : report.per_image) o << e.image_id << ',' << fmt(e.srcc) << ',' << e.best_pred_rank_in_truth << '\n';
    return o.str();
}

std::string report_summary_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["srcc"] = report.srcc_mean;
    j["acc5"] = report.acc5;
    j["acc10"] = report.acc10;
    j["images"] = report.per_image.size();
    j["acc5_skipped"] = report.acc5_skipped;
    j["acc10_skipped"] = report.acc10_skipped;
    j["feature_passes"] = report.feature_passes;
    j["acc_convention"] = kAccConvention;
    return j.dump(2) + "\n";
}

std::string scatter_csv(const EvalReport& report, const std::vector<LoadedSample>& samples) {
    std::ostringstream o;
    o << "image_id,candidate,pred,mos\n";
    for (std::size_t i = 0; i < samples.size() && i < report.predictions.size(); ++i)
        for (std::size_t c = 0; c < report.predictions[i].size(); ++c)
            o << samples[i].record.image_id << ',' << c << ',' << fmt(report.predictions[i][c]) << ','
              << fmt(samples[i].record.mos[c]) << '\n';
    return o.str();
}

} // namespace s2c
