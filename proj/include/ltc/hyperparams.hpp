#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltc/codes.hpp"

namespace ltc {

enum class TrainMode { baseline, htc, ltc };

std::string_view to_string(TrainMode m);
TrainMode parse_mode(std::string_view s);

// Regularizer weights and optimizer settings. Defaults are the fine-grained
// classification settings: gamma=1, lambda=0.01, beta=0.1, L=512, SGD with
// momentum 0.9 and weight decay 1e-4, lr 0.001 / 0.01 / 0.1 for feature
// extractor / new heads / codes, decayed by 0.1 at epochs 40 and 70.
struct Hyperparams {
    double gamma = 1.0;
    double lambda = 0.01;
    double beta = 0.1;
    // Triplet margin. Unset means L, or L/2 when training on imbalanced data.
    std::optional<double> epsilon;
    double xi = 1.0;
    std::size_t code_length = 512;
    std::size_t num_classes = 0;

    double lr_feature = 0.001;
    double lr_new = 0.01;
    double lr_codes = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;

    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    std::vector<std::size_t> decay_epochs{40, 70};
    double decay_factor = 0.1;
    bool decay_codes = true;

    CodeActivation code_activation = CodeActivation::sign;
    SteMode ste = SteMode::clipped;

    std::uint64_t seed = 0;

    double margin(bool imbalanced) const {
        if (epsilon) return *epsilon;
        const auto len = static_cast<double>(code_length);
        return imbalanced ? len / 2.0 : len;
    }
};

} // namespace ltc
