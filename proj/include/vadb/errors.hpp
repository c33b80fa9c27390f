#ifndef VADB_ERRORS_HPP
#define VADB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vadb {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// A statistic has no defined value on this input (constant vector, too few
// pairable ratings, ...).
struct UndefinedStatError : Error {
    explicit UndefinedStatError(const std::string& what) : Error(what) {}
};

// Bootstrap produced too many degenerate resamples to report an interval.
struct UnstableStatError : Error {
    explicit UnstableStatError(const std::string& what) : Error(what) {}
};

// Training hit a non-finite loss; carries enough context to debug the step.
struct NanLossError : Error {
    NanLossError(const std::string& what, std::uint64_t step, std::string batch_ids,
                 double temperature)
        : Error(what), step(step), batch_ids(std::move(batch_ids)), temperature(temperature) {}
    std::uint64_t step;
    std::string batch_ids;
    double temperature;
};

}  // namespace vadb

#endif
