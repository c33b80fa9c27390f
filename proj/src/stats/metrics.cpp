#include "vadb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vadb/errors.hpp"

namespace vadb::stats {

namespace {

void require_paired(const PairedSample& s, std::size_t min_n) {
    if (s.predictions.size() != s.ground_truth.size())
        throw UndefinedStatError("metric: prediction/truth length mismatch");
    if (s.size() < min_n)
        throw UndefinedStatError("metric: need at least " + std::to_string(min_n) +
                                 " samples");
}

bool is_constant(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0]) return false;
    return true;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedStatError("correlation undefined for a constant vector");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double srcc(const PairedSample& s) {
    require_paired(s, 2);
    if (is_constant(s.predictions) || is_constant(s.ground_truth))
        throw UndefinedStatError("srcc undefined for a constant vector");
    return pearson(average_ranks(s.predictions), average_ranks(s.ground_truth));
}

double plcc(const PairedSample& s) {
    require_paired(s, 2);
    if (is_constant(s.predictions) || is_constant(s.ground_truth))
        throw UndefinedStatError("plcc undefined for a constant vector");
    return pearson(s.predictions, s.ground_truth);
}

double rmse(const PairedSample& s) {
    require_paired(s, 1);
    return std::sqrt(mse(s));
}

double mse(const PairedSample& s) {
    require_paired(s, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = s.predictions[i] - s.ground_truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(s.size());
}

double krcc(const PairedSample& s) {
    require_paired(s, 2);
    const std::size_t n = s.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = s.predictions[i] - s.predictions[j];
            const double dy = s.ground_truth[i] - s.ground_truth[j];
            if (dx == 0.0 && dy == 0.0) continue;  // tied in both: drops out of tau-b
            if (dx == 0.0) ++ties_x;
            else if (dy == 0.0) ++ties_y;
            else if ((dx > 0.0) == (dy > 0.0)) ++concordant;
            else ++discordant;
        }
    }
    const long long den_x = concordant + discordant + ties_y;  // pairs untied in x
    const long long den_y = concordant + discordant + ties_x;  // pairs untied in y
    if (den_x == 0 || den_y == 0)
        throw UndefinedStatError("krcc undefined: all pairs tied in one vector");
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(den_x) * static_cast<double>(den_y));
}

double binary_accuracy(const PairedSample& s, double threshold) {
    require_paired(s, 1);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool p = s.predictions[i] >= threshold;
        const bool t = s.ground_truth[i] >= threshold;
        agree += p == t;
    }
    return static_cast<double>(agree) / static_cast<double>(s.size());
}

}  // namespace vadb::stats
