#ifndef NSC_CONFIG_HPP
#define NSC_CONFIG_HPP

#include <string>

#include "nsc/training.hpp"

namespace nsc {

/// Everything a training run needs beyond the dataset bytes. Parsed from a
/// flat key=value file; unknown keys are rejected with their line number.
struct RunConfig {
    TrainConfig train;
    std::string arch = "mlp";
    std::string data_path;
    std::string eval_path;  // empty: split train_fraction off data
    std::string out_model = "model.nscm";
    std::string out_metrics = "metrics.txt";
    float train_fraction = 0.8f;
};

RunConfig parse_config_text(const std::string& text, const std::string& name);
RunConfig parse_config_file(const std::string& path);

}  // namespace nsc

#endif
