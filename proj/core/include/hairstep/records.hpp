#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hairstep/annotate.hpp"
#include "hairstep/metrics.hpp"

namespace hairstep::records {

namespace fs = std::filesystem;

// StrokeSet: {"imageId": "...", "strokes": [[[x, y], ...], ...]}
StrokeSet parse_strokes(const std::string& text);
StrokeSet read_strokes(const fs::path& path);
std::string format_strokes(const StrokeSet& strokes);

// One JSON object per line; field names follow the record types.
std::string format(const PairSample& s);
std::string format(const AnnotationAnswer& a);
std::string format(const AggregatedLabel& l);
std::string format(const MetricReport& r);

PairSample parse_pair_sample(const std::string& line);
AnnotationAnswer parse_answer(const std::string& line);
AggregatedLabel parse_label(const std::string& line);

/// Depth pair with its ordinal label, as consumed by evaluation:
/// {"pairId", "p1", "p2", "r"} and optionally "imageId" (otherwise taken
/// from the pair id prefix).
struct LabeledPair {
    std::string imageId;
    std::string pairId;
    PairLabel label;
};

LabeledPair parse_labeled_pair(const std::string& line);
std::string format(const LabeledPair& p);

/// Joins samples with valid aggregated labels on pairId.
std::vector<LabeledPair> join_labels(const std::vector<PairSample>& samples, const std::vector<AggregatedLabel>& labels);

/// Calls `onLine` for every non-blank line. Errors carry the byte offset of
/// the offending line.
void for_each_line(const std::string& text, const std::function<void(const std::string&, std::size_t offset)>& onLine);

template <typename T, typename Parse>
std::vector<T> read_jsonl(const fs::path& path, Parse parse);

std::string to_jsonl(const std::vector<std::string>& lines);

// SuperPixelMap: 16-bit label PNG plus sidecar {count, adjacency}.
void write_superpixels(const fs::path& pngPath, const SuperPixelMap& sp);
SuperPixelMap read_superpixels(const fs::path& pngPath);

std::string format_stats(const AggregationStats& s);

}  // namespace hairstep::records

#include "hairstep/io.hpp"

namespace hairstep::records {

template <typename T, typename Parse>
std::vector<T> read_jsonl(const fs::path& path, Parse parse) {
    std::vector<T> out;
    const std::string text = io::read_text(path);
    for_each_line(text, [&](const std::string& line, std::size_t offset) {
        try {
            out.push_back(parse(line));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what(), offset);
        }
    });
    return out;
}

}  // namespace hairstep::records
