#ifndef VADB_CLEANING_HPP
#define VADB_CLEANING_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vadb/annotations.hpp"

namespace vadb::data {

struct CleaningConfig {
    int min_raters = 5;
    double squared_dev_max = 8.0;  // drop ratings with (r - mean)^2 above this
    int max_spread = 5;            // enforce max - min <= this
    double comment_similarity_threshold = 0.9;
};

enum class ExclusionRule {
    none,
    too_few_raters,               // rule (a)
    score_cleaning_left_too_few,  // rule (d), after (b)/(c) removals
    too_few_distinct_tags,        // tag rule
};

std::string exclusion_rule_name(ExclusionRule r);

struct ScoreCleanResult {
    bool excluded = false;
    ExclusionRule rule = ExclusionRule::none;
    std::vector<int> retained;  // survivors, original input order
};

// Applies in order: (a) rater-count floor, (b) squared-deviation passes to a
// fixed point, (c) spread reduction one rating at a time, (d) rater-count
// floor on the survivors.
ScoreCleanResult clean_scores(const std::vector<int>& ratings,
                              const CleaningConfig& cfg = {});

// Rule (b) in isolation: each pass computes the survivor mean and removes
// every rating whose squared deviation exceeds `limit`; repeats until a pass
// removes nothing. `keep` holds surviving indices into `ratings`, ascending.
std::vector<std::size_t> drop_squared_dev_outliers(const std::vector<int>& ratings,
                                                   std::vector<std::size_t> keep,
                                                   double limit);

// Rule (c) in isolation: while max - min > spread, removes the single rating
// with the largest |r - mean| (ties resolved toward the larger rating, first
// occurrence) and recomputes the mean.
std::vector<std::size_t> drop_max_spread_outliers(const std::vector<int>& ratings,
                                                  std::vector<std::size_t> keep,
                                                  int spread);

struct TagCleanResult {
    bool excluded = false;
    std::vector<std::string> retained;  // multiset, sorted
};

// Drops tags named only once across the video's annotators (and, when global
// counts are supplied, tags that occur exactly once in the whole dataset);
// excludes the video when at most two distinct tags remain.
TagCleanResult clean_tags(const std::vector<std::vector<std::string>>& per_annotator_tags,
                          const std::map<std::string, int>* global_tag_counts = nullptr);

// Lowercase whitespace-token Jaccard similarity; both-empty compares as 1.
double token_jaccard(const std::string& a, const std::string& b);

// Keeps input order; for any pair with similarity strictly above the
// threshold the later comment is dropped.
std::vector<std::string> clean_comments(const std::vector<std::string>& comments,
                                        double similarity_threshold = 0.9);

struct CleanVideoEntry {
    std::string video_id;
    std::optional<VideoCategory> category;
    std::map<std::string, double> mean_scores;
    std::map<std::string, std::vector<int>> retained_ratings;
    std::vector<std::string> comments;
    std::vector<std::string> tags;  // retained multiset, sorted
};

struct VideoCleanOutcome {
    bool excluded = false;
    ExclusionRule rule = ExclusionRule::none;
    std::string rule_dimension;  // dimension that fired a score rule, if any
    CleanVideoEntry entry;
};

// Cleans one video's ratings per dimension, tags and comments, and aggregates
// per-dimension means. Any score-rule or tag-rule exclusion excludes the
// whole video for score-supervised use.
VideoCleanOutcome clean_video(const std::string& video_id,
                              std::optional<VideoCategory> category,
                              const std::map<std::string, std::vector<int>>& ratings_by_dim,
                              const std::vector<std::vector<std::string>>& per_annotator_tags,
                              const std::vector<std::string>& comments,
                              const CleaningConfig& cfg = {},
                              const std::map<std::string, int>* global_tag_counts = nullptr);

}  // namespace vadb::data

#endif
