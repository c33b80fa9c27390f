#include "vadb/cleaning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace vadb::data {

std::string exclusion_rule_name(ExclusionRule r) {
    switch (r) {
        case ExclusionRule::none: return "none";
        case ExclusionRule::too_few_raters: return "too_few_raters";
        case ExclusionRule::score_cleaning_left_too_few:
            return "score_cleaning_left_too_few";
        case ExclusionRule::too_few_distinct_tags: return "too_few_distinct_tags";
    }
    return "?";
}

namespace {

double mean_of(const std::vector<int>& ratings, const std::vector<std::size_t>& keep) {
    long long sum = 0;
    for (std::size_t i : keep) sum += ratings[i];
    return static_cast<double>(sum) / static_cast<double>(keep.size());
}

}  // namespace

std::vector<std::size_t> drop_squared_dev_outliers(const std::vector<int>& ratings,
                                                   std::vector<std::size_t> keep,
                                                   double limit) {
    bool removed = true;
    while (removed && !keep.empty()) {
        removed = false;
        const double mu = mean_of(ratings, keep);
        std::vector<std::size_t> next;
        next.reserve(keep.size());
        for (std::size_t i : keep) {
            const double d = ratings[i] - mu;
            if (d * d > limit) {
                removed = true;
            } else {
                next.push_back(i);
            }
        }
        keep.swap(next);
    }
    return keep;
}

std::vector<std::size_t> drop_max_spread_outliers(const std::vector<int>& ratings,
                                                  std::vector<std::size_t> keep,
                                                  int spread) {
    while (keep.size() >= 2) {
        int lo = ratings[keep[0]], hi = ratings[keep[0]];
        for (std::size_t i : keep) {
            lo = std::min(lo, ratings[i]);
            hi = std::max(hi, ratings[i]);
        }
        if (hi - lo <= spread) break;
        const double mu = mean_of(ratings, keep);
        std::size_t drop_pos = 0;
        double best_dev = -1.0;
        int best_val = 0;
        for (std::size_t p = 0; p < keep.size(); ++p) {
            const int r = ratings[keep[p]];
            const double d = std::abs(r - mu);
            if (d > best_dev || (d == best_dev && r > best_val)) {
                best_dev = d;
                best_val = r;
                drop_pos = p;
            }
        }
        keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(drop_pos));
    }
    return keep;
}

ScoreCleanResult clean_scores(const std::vector<int>& ratings, const CleaningConfig& cfg) {
    ScoreCleanResult res;
    if (static_cast<int>(ratings.size()) < cfg.min_raters) {
        res.excluded = true;
        res.rule = ExclusionRule::too_few_raters;
        return res;
    }
    std::vector<std::size_t> keep(ratings.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    keep = drop_squared_dev_outliers(ratings, std::move(keep), cfg.squared_dev_max);
    keep = drop_max_spread_outliers(ratings, std::move(keep), cfg.max_spread);
    if (static_cast<int>(keep.size()) < cfg.min_raters) {
        res.excluded = true;
        res.rule = ExclusionRule::score_cleaning_left_too_few;
        return res;
    }
    res.retained.reserve(keep.size());
    for (std::size_t i : keep) res.retained.push_back(ratings[i]);
    return res;
}

TagCleanResult clean_tags(const std::vector<std::vector<std::string>>& per_annotator_tags,
                          const std::map<std::string, int>* global_tag_counts) {
    std::map<std::string, int> counts;
    for (const auto& tags : per_annotator_tags) {
        std::set<std::string> uniq(tags.begin(), tags.end());
        for (const auto& t : uniq) ++counts[t];
    }

    TagCleanResult res;
    std::set<std::string> distinct;
    for (const auto& [tag, n] : counts) {
        if (n <= 1) continue;
        if (global_tag_counts) {
            auto it = global_tag_counts->find(tag);
            if (it != global_tag_counts->end() && it->second <= 1) continue;
        }
        distinct.insert(tag);
        for (int i = 0; i < n; ++i) res.retained.push_back(tag);
    }
    if (distinct.size() <= 2) {
        res.excluded = true;
        res.retained.clear();
    }
    return res;
}

namespace {

std::set<std::string> token_set(const std::string& s) {
    std::set<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.insert(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

}  // namespace

double token_jaccard(const std::string& a, const std::string& b) {
    const auto sa = token_set(a);
    const auto sb = token_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> clean_comments(const std::vector<std::string>& comments,
                                        double similarity_threshold) {
    std::vector<bool> dropped(comments.size(), false);
    for (std::size_t j = 1; j < comments.size(); ++j) {
        for (std::size_t i = 0; i < j && !dropped[j]; ++i) {
            if (token_jaccard(comments[i], comments[j]) > similarity_threshold)
                dropped[j] = true;
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < comments.size(); ++i)
        if (!dropped[i]) out.push_back(comments[i]);
    return out;
}

VideoCleanOutcome clean_video(const std::string& video_id,
                              std::optional<VideoCategory> category,
                              const std::map<std::string, std::vector<int>>& ratings_by_dim,
                              const std::vector<std::vector<std::string>>& per_annotator_tags,
                              const std::vector<std::string>& comments,
                              const CleaningConfig& cfg,
                              const std::map<std::string, int>* global_tag_counts) {
    VideoCleanOutcome out;
    out.entry.video_id = video_id;
    out.entry.category = category;

    for (const auto& [dim, ratings] : ratings_by_dim) {
        if (ratings.empty()) continue;  // absent dimension, never imputed
        const ScoreCleanResult r = clean_scores(ratings, cfg);
        if (r.excluded) {
            out.excluded = true;
            out.rule = r.rule;
            out.rule_dimension = dim;
            return out;
        }
        long long sum = 0;
        for (int v : r.retained) sum += v;
        out.entry.retained_ratings[dim] = r.retained;
        out.entry.mean_scores[dim] =
            static_cast<double>(sum) / static_cast<double>(r.retained.size());
    }

    const TagCleanResult tags = clean_tags(per_annotator_tags, global_tag_counts);
    if (tags.excluded) {
        out.excluded = true;
        out.rule = ExclusionRule::too_few_distinct_tags;
        return out;
    }
    out.entry.tags = tags.retained;
    out.entry.comments = clean_comments(comments, cfg.comment_similarity_threshold);
    return out;
}

}  // namespace vadb::data
