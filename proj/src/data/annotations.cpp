#include "vadb/annotations.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vadb/errors.hpp"

namespace vadb::data {

using nlohmann::json;

std::optional<VideoCategory> parse_category(const std::string& s) {
    if (s == "character") return VideoCategory::character;
    if (s == "scenery") return VideoCategory::scenery;
    if (s == "architecture") return VideoCategory::architecture;
    if (s == "food") return VideoCategory::food;
    return std::nullopt;
}

std::string category_name(VideoCategory c) {
    switch (c) {
        case VideoCategory::character: return "character";
        case VideoCategory::scenery: return "scenery";
        case VideoCategory::architecture: return "architecture";
        case VideoCategory::food: return "food";
    }
    return "?";
}

const std::vector<std::string>& general_dimensions() {
    static const std::vector<std::string> dims = {"Overall", "Com", "SS", "Lig",
                                                  "V&T",     "Col", "D&F"};
    return dims;
}

const std::vector<std::string>& character_dimensions() {
    static const std::vector<std::string> dims = {"Exp", "Mov", "Cos", "Mak"};
    return dims;
}

const std::vector<std::string>& report_dimension_order() {
    static const std::vector<std::string> dims = {"Overall", "V&T", "SS", "D&F",
                                                  "Lig",     "Com", "Col", "Mov",
                                                  "Mak",     "Cos", "Exp"};
    return dims;
}

bool is_known_dimension(const std::string& d) {
    const auto& g = general_dimensions();
    const auto& c = character_dimensions();
    return std::find(g.begin(), g.end(), d) != g.end() ||
           std::find(c.begin(), c.end(), d) != c.end();
}

bool is_character_dimension(const std::string& d) {
    const auto& c = character_dimensions();
    return std::find(c.begin(), c.end(), d) != c.end();
}

TagVocabulary::TagVocabulary(std::vector<Group> groups) : groups_(std::move(groups)) {
    std::set<std::string> seen;
    for (const auto& g : groups_)
        for (const auto& t : g.tags)
            if (!seen.insert(t).second)
                throw ConfigError("tag vocabulary: duplicate tag '" + t + "'");
}

TagVocabulary TagVocabulary::builtin() {
    return TagVocabulary({
        {"camera movement",
         {"static_shot", "pan", "tilt", "zoom_in", "zoom_out", "dolly",
          "tracking_shot", "crane_shot", "handheld", "aerial_shot", "orbit"}},
        {"composition",
         {"symmetric_composition", "centered_composition", "rule_of_thirds",
          "diagonal_composition", "leading_lines", "frame_within_frame",
          "golden_section", "foreground_interest", "negative_space", "low_angle",
          "high_angle", "eye_level"}},
        {"lighting",
         {"natural_light", "artificial_light", "backlight", "side_light",
          "top_light", "front_light", "soft_light", "hard_light", "silhouette",
          "low_key", "high_key"}},
    });
}

TagVocabulary TagVocabulary::from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<Group> groups;
    for (auto it = j.begin(); it != j.end(); ++it) {
        Group g;
        g.category = it.key();
        for (const auto& t : it.value()) g.tags.push_back(t.get<std::string>());
        groups.push_back(std::move(g));
    }
    return TagVocabulary(std::move(groups));
}

TagVocabulary TagVocabulary::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open tag vocabulary: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

bool TagVocabulary::contains(const std::string& tag) const {
    return category_of(tag).has_value();
}

std::optional<std::string> TagVocabulary::category_of(const std::string& tag) const {
    for (const auto& g : groups_)
        if (std::find(g.tags.begin(), g.tags.end(), tag) != g.tags.end())
            return g.category;
    return std::nullopt;
}

std::size_t TagVocabulary::size() const {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.tags.size();
    return n;
}

namespace {

// Returns empty reason on success.
std::string parse_record(const json& j, const TagVocabulary& vocab,
                         AnnotationRecord& out, std::vector<std::string>& warnings) {
    if (!j.is_object()) return "record is not an object";
    if (!j.contains("video_id") || !j["video_id"].is_string()) return "missing video_id";
    if (!j.contains("annotator_id") || !j["annotator_id"].is_string())
        return "missing annotator_id";
    out.video_id = j["video_id"].get<std::string>();
    out.annotator_id = j["annotator_id"].get<std::string>();

    if (j.contains("category")) {
        if (!j["category"].is_string()) return "category is not a string";
        out.category = parse_category(j["category"].get<std::string>());
        if (!out.category) return "unknown category '" + j["category"].get<std::string>() + "'";
    }
    if (j.contains("duration_s")) {
        if (!j["duration_s"].is_number()) return "duration_s is not a number";
        out.duration_s = j["duration_s"].get<double>();
        if (*out.duration_s < 5.0 || *out.duration_s > 20.0)
            warnings.push_back("video " + out.video_id + ": duration " +
                               std::to_string(*out.duration_s) + "s outside [5,20]");
    }

    if (j.contains("scores")) {
        if (!j["scores"].is_object()) return "scores is not an object";
        for (auto it = j["scores"].begin(); it != j["scores"].end(); ++it) {
            const std::string& dim = it.key();
            if (!is_known_dimension(dim)) return "unknown dimension '" + dim + "'";
            if (out.category && *out.category != VideoCategory::character &&
                is_character_dimension(dim))
                return "character dimension '" + dim + "' on " +
                       category_name(*out.category) + " video";
            if (!it.value().is_number_integer()) return "score not an integer";
            const long long s = it.value().get<long long>();
            if (s < 1 || s > 10) return "score out of range";
            out.scores[dim] = static_cast<int>(s);
        }
    }

    if (j.contains("comment")) {
        if (!j["comment"].is_string()) return "comment is not a string";
        out.comment = j["comment"].get<std::string>();
    }

    if (j.contains("tags")) {
        if (!j["tags"].is_array()) return "tags is not an array";
        std::set<std::string> uniq;
        for (const auto& t : j["tags"]) {
            if (!t.is_string()) return "tag is not a string";
            const std::string tag = t.get<std::string>();
            if (!vocab.contains(tag)) return "unknown tag '" + tag + "'";
            uniq.insert(tag);
        }
        out.tags.assign(uniq.begin(), uniq.end());
    }

    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::set<std::string> known = {
            "video_id", "annotator_id", "category", "duration_s",
            "scores",   "comment",      "tags"};
        if (!known.count(it.key())) return "unknown field '" + it.key() + "'";
    }
    return "";
}

}  // namespace

IngestResult ingest_annotations(std::istream& is, const TagVocabulary& vocab) {
    IngestResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            result.rejects.push_back({line_no, "malformed json", line});
            continue;
        }
        AnnotationRecord rec;
        const std::string reason = parse_record(j, vocab, rec, result.warnings);
        if (!reason.empty()) {
            result.rejects.push_back({line_no, reason, line});
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

IngestResult ingest_annotations(const std::filesystem::path& path,
                                const TagVocabulary& vocab) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open annotation file: " + path.string());
    return ingest_annotations(f, vocab);
}

}  // namespace vadb::data
