#ifndef VADB_AGREEMENT_HPP
#define VADB_AGREEMENT_HPP

#include <map>
#include <string>
#include <vector>

#include "vadb/annotations.hpp"

namespace vadb::data {

// items x raters, missing cells = -1, ratings in [1,10]
struct RatingsMatrix {
    int items = 0;
    int raters = 0;
    std::vector<int> values;  // row-major, items*raters

    int at(int item, int rater) const { return values[static_cast<std::size_t>(item) * raters + rater]; }
};

// Krippendorff's alpha with the ordinal difference metric, computed over the
// coincidence matrix. Units with fewer than two ratings are ignored; throws
// UndefinedStatError when fewer than two pairable values remain. Perfect
// agreement returns exactly 1.
double krippendorff_alpha_ordinal(const std::vector<std::vector<int>>& units);
double krippendorff_alpha_ordinal(const RatingsMatrix& m);

struct DimensionAgreement {
    double alpha = 0.0;
    int items = 0;           // units with >= 2 ratings
    int pairable_values = 0; // total ratings inside those units
    int raters = 0;          // distinct annotators seen for this dimension
};

struct AgreementReport {
    std::map<std::string, DimensionAgreement> by_dimension;
};

// Per-dimension agreement over a set of videos' rating lists. The coincidence
// construction only uses values within each unit, so rater identity is not
// required here; `raters` is informational.
AgreementReport agreement_from_ratings(
    const std::map<std::string, std::vector<std::vector<int>>>& units_by_dimension,
    const std::map<std::string, int>& raters_by_dimension);

}  // namespace vadb::data

#endif
