#include <cmath>

#include "vadb/errors.hpp"
#include "vadb/training.hpp"

namespace vadb::train {

double lr_at_step(std::uint64_t step, std::uint64_t total_steps,
                  const PretrainConfig& cfg) {
    if (total_steps == 0) throw ConfigError("lr_at_step: total_steps is zero");
    if (step > total_steps) throw ConfigError("lr_at_step: step beyond total_steps");
    if (cfg.epochs < 1) throw ConfigError("lr_at_step: epochs must be positive");

    const std::uint64_t warmup_steps = static_cast<std::uint64_t>(
        std::llround(cfg.warmup_fraction * static_cast<double>(total_steps)));
    if (warmup_steps > 0 && step < warmup_steps) {
        return cfg.lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    std::uint64_t epoch = step * static_cast<std::uint64_t>(cfg.epochs) / total_steps;
    if (epoch >= static_cast<std::uint64_t>(cfg.epochs))
        epoch = static_cast<std::uint64_t>(cfg.epochs) - 1;
    return cfg.lr * std::pow(cfg.decay, static_cast<double>(epoch));
}

}  // namespace vadb::train
