#ifndef S2C_ABLATION_HPP
#define S2C_ABLATION_HPP

#include "s2c/training.hpp"

#include <functional>
#include <string>
#include <vector>

namespace s2c {

enum class AblationAxis { spatial, proposals, components };
AblationAxis parse_ablation_axis(const std::string& name);
std::string to_string(AblationAxis axis);

struct AblationSetting {
    std::string label;
    ModelConfig model;
};

/// spatial: DisDrop at eps 0.1/0.2/0.3 then DisEmb; proposals: N = 8, 10, 12, 15;
/// components: all eight gate / semantic / spatial on-off combinations.
std::vector<AblationSetting> ablation_grid(const ModelConfig& base, AblationAxis axis);

struct AblationRow {
    std::string label;
    double srcc = 0;
    double acc5 = 0;
    double acc10 = 0;
    int best_epoch = 0;
};

/// Trains every setting from the same model seed and training seed. The best
/// epoch is chosen on `val_set`. Metrics come from `test_set` scored with the
/// chosen parameters, or from the best validation epoch when `test_set` is empty.
template <typename S>
std::vector<AblationRow> ablation_run(const std::vector<AblationSetting>& grid, const std::vector<LoadedSample>& train_set,
                                      const std::vector<LoadedSample>& val_set, const std::vector<LoadedSample>& test_set,
                                      const TrainConfig& train_config, std::uint64_t model_seed,
                                      const std::function<void(const AblationRow&)>& on_row = {});

std::string ablation_csv(const std::vector<AblationRow>& rows);

} // namespace s2c

#endif
