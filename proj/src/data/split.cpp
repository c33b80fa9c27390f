#include "vadb/split.hpp"

#include "vadb/errors.hpp"
#include "vadb/nn/rng.hpp"

namespace vadb::data {

SplitResult split_train_val(std::vector<std::string> ids, std::uint64_t seed,
                            int train_parts, int val_parts) {
    if (train_parts < 1 || val_parts < 1)
        throw ConfigError("split: parts must be positive");
    const std::size_t n = ids.size();
    const std::size_t total = static_cast<std::size_t>(train_parts) + val_parts;
    if (n < total)
        throw ConfigError("split: need at least " + std::to_string(total) +
                          " entries for a " + std::to_string(train_parts) + ":" +
                          std::to_string(val_parts) + " split, got " + std::to_string(n));

    nn::Rng rng = nn::Rng::from_tag(seed, "split.train_val");
    rng.shuffle(ids);
    const std::size_t train_n = n * static_cast<std::size_t>(train_parts) / total;

    SplitResult out;
    out.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
    out.val_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n), ids.end());
    return out;
}

}  // namespace vadb::data
