#ifndef VADB_SPLIT_HPP
#define VADB_SPLIT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace vadb::data {

struct SplitResult {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
};

// Deterministic shuffled split; floor(N * train_parts / (train_parts +
// val_parts)) ids go to train, the rest to validation. Throws ConfigError
// when N is too small to honor the ratio.
SplitResult split_train_val(std::vector<std::string> ids, std::uint64_t seed,
                            int train_parts = 4, int val_parts = 1);

}  // namespace vadb::data

#endif
