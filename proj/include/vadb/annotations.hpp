#ifndef VADB_ANNOTATIONS_HPP
#define VADB_ANNOTATIONS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vadb::data {

enum class VideoCategory { character, scenery, architecture, food };

std::optional<VideoCategory> parse_category(const std::string& s);
std::string category_name(VideoCategory c);

// Overall plus the six general attributes; every video carries these.
const std::vector<std::string>& general_dimensions();
// Expression, movement, costume, makeup; character videos only.
const std::vector<std::string>& character_dimensions();
// Column order used by agreement and metric tables.
const std::vector<std::string>& report_dimension_order();

bool is_known_dimension(const std::string& d);
bool is_character_dimension(const std::string& d);

// The 34 technical tags, grouped under camera movement / composition /
// lighting. The default list ships with the library; deployments with their
// own tag set can load a replacement from JSON.
class TagVocabulary {
public:
    struct Group {
        std::string category;
        std::vector<std::string> tags;
    };

    static TagVocabulary builtin();
    static TagVocabulary from_json(const std::string& text);
    static TagVocabulary from_file(const std::filesystem::path& path);

    bool contains(const std::string& tag) const;
    std::optional<std::string> category_of(const std::string& tag) const;
    std::size_t size() const;
    const std::vector<Group>& groups() const { return groups_; }

private:
    explicit TagVocabulary(std::vector<Group> groups);
    std::vector<Group> groups_;
};

struct VideoRecord {
    std::string video_id;
    std::optional<VideoCategory> category;
    std::optional<double> duration_s;
    std::string frame_source;  // path to packed frames or a frame directory
};

struct AnnotationRecord {
    std::string video_id;
    std::string annotator_id;
    std::optional<VideoCategory> category;
    std::optional<double> duration_s;
    std::map<std::string, int> scores;  // dimension -> rating in [1,10]
    std::optional<std::string> comment;
    std::vector<std::string> tags;  // deduplicated, sorted
};

struct RejectedRecord {
    std::size_t line_no = 0;
    std::string reason;
    std::string raw;
};

struct IngestResult {
    std::vector<AnnotationRecord> records;
    std::vector<RejectedRecord> rejects;
    std::vector<std::string> warnings;  // e.g. out-of-range durations
};

// Line-delimited JSON, one annotation per line, UTF-8. Malformed lines land
// in `rejects` with a reason; only an unreadable file is fatal.
IngestResult ingest_annotations(const std::filesystem::path& path,
                                const TagVocabulary& vocab = TagVocabulary::builtin());
IngestResult ingest_annotations(std::istream& is, const TagVocabulary& vocab);

}  // namespace vadb::data

#endif
