#include "s2c/ablation.hpp"

#include <sstream>

namespace s2c {

AblationAxis parse_ablation_axis(const std::string& name) {
    if (name == "spatial") return AblationAxis::spatial;
    if (name == "proposals") return AblationAxis::proposals;
    if (name == "components") return AblationAxis::components;
    throw UsageError("unknown ablation axis '" + name + "' (expected spatial, proposals or components)");
}

std::string to_string(AblationAxis axis) {
    switch (axis) {
    case AblationAxis::spatial: return "spatial";
    case AblationAxis::proposals: return "proposals";
    default: return "components";
    }
}

std::vector<AblationSetting> ablation_grid(const ModelConfig& base, AblationAxis axis) {
    std::vector<AblationSetting> grid;
    if (axis == AblationAxis::spatial) {
        for (double eps : {0.1, 0.2, 0.3}) {
            auto m = base;
            m.aag.use_spatial = true;
            m.spatial = SpatialVariant::disdrop;
            m.eps = eps;
            std::ostringstream label;
            label << "disdrop eps=" << eps;
            grid.push_back({label.str(), m});
        }
        auto m = base;
        m.aag.use_spatial = true;
        m.spatial = SpatialVariant::disemb;
        grid.push_back({"disemb", m});
    } else if (axis == AblationAxis::proposals) {
        for (Index n : {8, 10, 12, 15}) {
            auto m = base;
            m.proposals = n;
            grid.push_back({"N=" + std::to_string(n), m});
        }
    } else {
        for (int mask = 0; mask < 8; ++mask) {
            auto m = base;
            m.aag.use_gate = mask & 4;
            m.aag.use_semantic = mask & 2;
            m.aag.use_spatial = mask & 1;
            const std::string label = std::string("FAG=") + (mask & 4 ? "1" : "0") + " Ma=" + (mask & 2 ? "1" : "0") +
                                      " Mp=" + (mask & 1 ? "1" : "0");
            grid.push_back({label, m});
        }
    }
    return grid;
}

template <typename S>
std::vector<AblationRow> ablation_run(const std::vector<AblationSetting>& grid, const std::vector<LoadedSample>& train_set,
                                      const std::vector<LoadedSample>& val_set, const std::vector<LoadedSample>& test_set,
                                      const TrainConfig& train_config, std::uint64_t model_seed,
                                      const std::function<void(const AblationRow&)>& on_row) {
    std::vector<AblationRow> rows;
    for (const auto& setting : grid) {
        Model<S> model(setting.model, model_seed);
        const auto result = train(model, train_set, val_set, train_config);
        AblationRow row;
        row.label = setting.label;
        row.best_epoch = result.best_epoch;
        for (const auto& e : result.history)
            if (e.epoch == result.best_epoch) {
                row.srcc = e.val_srcc;
                row.acc5 = e.val_acc5;
                row.acc10 = e.val_acc10;
            }
        if (!test_set.empty()) {
            const auto rep = evaluate(model, test_set, train_config.allow_heuristic);
            row.srcc = rep.srcc_mean;
            row.acc5 = rep.acc5;
            row.acc10 = rep.acc10;
        }
        rows.push_back(row);
        if (on_row) on_row(row);
    }
    return rows;
}

template std::vector<AblationRow> ablation_run<float>(const std::vector<AblationSetting>&,
                                                      const std::vector<LoadedSample>&,
                                                      const std::vector<LoadedSample>&, const std::vector<LoadedSample>&, const TrainConfig&,
                                                      std::uint64_t, const std::function<void(const AblationRow&)>&);
template std::vector<AblationRow> ablation_run<double>(const std::vector<AblationSetting>&,
                                                       const std::vector<LoadedSample>&,
                                                       const std::vector<LoadedSample>&, const std::vector<LoadedSample>&, const TrainConfig&,
                                                       std::uint64_t, const std::function<void(const AblationRow&)>&);

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream o;
    o.precision(9);
    o << "config,srcc,acc5,acc10,best_epoch\n";
    for (const auto& r : rows) o << r.label << ',' << r.srcc << ',' << r.acc5 << ',' << r.acc10 << ',' << r.best_epoch << '\n';
    return o.str();
}

} // namespace s2c
