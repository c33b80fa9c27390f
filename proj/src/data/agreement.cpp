#include "vadb/agreement.hpp"

#include <array>

#include "vadb/errors.hpp"

namespace vadb::data {

namespace {
constexpr int kMinRating = 1;
constexpr int kMaxRating = 10;
constexpr int kCats = kMaxRating - kMinRating + 1;
}  // namespace

double krippendorff_alpha_ordinal(const std::vector<std::vector<int>>& units) {
    // coincidence matrix o[c][k] and its marginals n[c]
    std::array<std::array<double, kCats>, kCats> o{};
    std::array<double, kCats> marg{};
    double n = 0.0;

    for (const auto& unit : units) {
        const std::size_t m = unit.size();
        if (m < 2) continue;
        for (int v : unit) {
            if (v < kMinRating || v > kMaxRating)
                throw UndefinedStatError("alpha: rating outside [1,10]");
        }
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i) {
            marg[unit[i] - kMinRating] += 1.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                o[unit[i] - kMinRating][unit[j] - kMinRating] += w;
            }
        }
        n += static_cast<double>(m);
    }
    if (n < 2.0)
        throw UndefinedStatError("alpha: fewer than 2 pairable values");

    // ordinal distance: delta(c,k)^2 = (sum_{g=c..k} n_g - (n_c + n_k)/2)^2
    std::array<double, kCats + 1> cum{};
    for (int c = 0; c < kCats; ++c) cum[c + 1] = cum[c] + marg[c];
    auto delta2 = [&](int c, int k) {
        if (c > k) std::swap(c, k);
        const double between = cum[k + 1] - cum[c];
        const double d = between - (marg[c] + marg[k]) / 2.0;
        return d * d;
    };

    double d_obs = 0.0, d_exp = 0.0;
    for (int c = 0; c < kCats; ++c) {
        for (int k = 0; k < kCats; ++k) {
            if (c == k) continue;
            const double w = delta2(c, k);
            d_obs += o[c][k] * w;
            d_exp += marg[c] * marg[k] * w;
        }
    }
    d_obs /= n;
    d_exp /= n * (n - 1.0);

    if (d_exp == 0.0) return 1.0;  // single category everywhere: no disagreement possible
    return 1.0 - d_obs / d_exp;
}

double krippendorff_alpha_ordinal(const RatingsMatrix& m) {
    std::vector<std::vector<int>> units;
    units.reserve(static_cast<std::size_t>(m.items));
    for (int i = 0; i < m.items; ++i) {
        std::vector<int> u;
        for (int r = 0; r < m.raters; ++r) {
            const int v = m.at(i, r);
            if (v >= 0) u.push_back(v);
        }
        units.push_back(std::move(u));
    }
    return krippendorff_alpha_ordinal(units);
}

AgreementReport agreement_from_ratings(
    const std::map<std::string, std::vector<std::vector<int>>>& units_by_dimension,
    const std::map<std::string, int>& raters_by_dimension) {
    AgreementReport report;
    for (const auto& [dim, units] : units_by_dimension) {
        DimensionAgreement a;
        for (const auto& u : units) {
            if (u.size() >= 2) {
                ++a.items;
                a.pairable_values += static_cast<int>(u.size());
            }
        }
        auto it = raters_by_dimension.find(dim);
        a.raters = it == raters_by_dimension.end() ? 0 : it->second;
        a.alpha = krippendorff_alpha_ordinal(units);
        report.by_dimension[dim] = a;
    }
    return report;
}

}  // namespace vadb::data
