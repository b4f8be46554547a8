#include "hairstep/records.hpp"

#include <unordered_map>

#include "json.hpp"

namespace hairstep::records {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
}

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ParseError(e.what(), 0);
    }
}

json pixel_json(Pixel p) { return json::array({p.x, p.y}); }

Pixel pixel_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("pixel must be [x, y]", 0);
    return {j[0].get<int>(), j[1].get<int>()};
}

/// Pair ids are strings; integer ids are accepted and stringified.
std::string id_from(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

StrokeSet parse_strokes(const std::string& text) {
    const json j = parse_json(text);
    return guarded([&] {
        StrokeSet s;
        s.imageId = j.value("imageId", std::string());
        for (const auto& stroke : j.at("strokes")) {
            std::vector<Vec2> pts;
            for (const auto& p : stroke) {
                if (!p.is_array() || p.size() != 2) throw ParseError("stroke point must be [x, y]", 0);
                pts.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            s.strokes.push_back(std::move(pts));
        }
        return s;
    });
}

StrokeSet read_strokes(const fs::path& path) {
    try {
        return parse_strokes(io::read_text(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

std::string format_strokes(const StrokeSet& strokes) {
    json arr = json::array();
    for (const auto& s : strokes.strokes) {
        json pts = json::array();
        for (const auto& p : s) pts.push_back({p.x(), p.y()});
        arr.push_back(pts);
    }
    return json{{"imageId", strokes.imageId}, {"strokes", arr}}.dump();
}

std::string format(const PairSample& s) {
    return json{{"pairId", s.pairId},
                {"p1", pixel_json(s.p1)},
                {"p2", pixel_json(s.p2)},
                {"superPixels", {s.superPixels.first, s.superPixels.second}}}
        .dump();
}

std::string format(const AnnotationAnswer& a) {
    return json{{"pairId", a.pairId}, {"groupId", a.groupId}, {"choice", to_string(a.choice)}, {"elapsed", a.elapsed}}.dump();
}

std::string format(const AggregatedLabel& l) { return json{{"pairId", l.pairId}, {"r", l.r}, {"valid", l.valid}}.dump(); }

std::string format(const MetricReport& r) {
    return json{{"imageId", r.imageId},
                {"hairSale", optional_json(r.hairSale)},
                {"hairSaleUndirected", optional_json(r.hairSaleUndirected)},
                {"hairRida", optional_json(r.hairRida)},
                {"iou", r.iou},
                {"pixelCount", r.pixelCount},
                {"pairCount", r.pairCount}}
        .dump();
}

PairSample parse_pair_sample(const std::string& line) {
    const json j = parse_json(line);
    return guarded([&] {
        PairSample s;
        s.pairId = id_from(j.at("pairId"));
        s.p1 = pixel_from(j.at("p1"));
        s.p2 = pixel_from(j.at("p2"));
        const auto& sp = j.at("superPixels");
        s.superPixels = {sp.at(0).get<int>(), sp.at(1).get<int>()};
        return s;
    });
}

AnnotationAnswer parse_answer(const std::string& line) {
    const json j = parse_json(line);
    return guarded([&] {
        AnnotationAnswer a;
        a.pairId = id_from(j.at("pairId"));
        a.groupId = j.at("groupId").get<int>();
        const auto choice = parse_choice(j.at("choice").get<std::string>());
        if (!choice) throw ParseError("choice must be RED, BLUE or UNSURE", 0);
        a.choice = *choice;
        a.elapsed = j.value("elapsed", 0.0);
        return a;
    });
}

AggregatedLabel parse_label(const std::string& line) {
    const json j = parse_json(line);
    return guarded([&] { return AggregatedLabel{id_from(j.at("pairId")), j.at("r").get<int>(), j.at("valid").get<bool>()}; });
}

LabeledPair parse_labeled_pair(const std::string& line) {
    const json j = parse_json(line);
    return guarded([&] {
        LabeledPair p;
        p.pairId = j.contains("pairId") ? id_from(j.at("pairId")) : std::string();
        p.imageId = j.contains("imageId") ? j.at("imageId").get<std::string>() : image_id_of(p.pairId);
        p.label.p1 = pixel_from(j.at("p1"));
        p.label.p2 = pixel_from(j.at("p2"));
        p.label.r = j.at("r").get<int>();
        if (p.label.r != 1 && p.label.r != -1) throw ParseError("r must be +1 or -1", 0);
        return p;
    });
}

std::string format(const LabeledPair& p) {
    return json{{"pairId", p.pairId}, {"imageId", p.imageId}, {"p1", pixel_json(p.label.p1)}, {"p2", pixel_json(p.label.p2)}, {"r", p.label.r}}
        .dump();
}

std::vector<LabeledPair> join_labels(const std::vector<PairSample>& samples, const std::vector<AggregatedLabel>& labels) {
    std::unordered_map<std::string, const AggregatedLabel*> byId;
    for (const auto& l : labels) byId[l.pairId] = &l;
    std::vector<LabeledPair> out;
    for (const auto& s : samples) {
        const auto it = byId.find(s.pairId);
        if (it == byId.end() || !it->second->valid) continue;
        out.push_back({image_id_of(s.pairId), s.pairId, PairLabel{s.p1, s.p2, it->second->r}});
    }
    return out;
}

void for_each_line(const std::string& text, const std::function<void(const std::string&, std::size_t)>& onLine) {
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            try {
                onLine(line, start);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), start + e.offset());
            }
        }
        start = end + 1;
    }
}

std::string to_jsonl(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

void write_superpixels(const fs::path& pngPath, const SuperPixelMap& sp) {
    io::write_labels(pngPath, sp.labels);
    json adj = json::array();
    for (const auto& [a, b] : sp.adjacency) adj.push_back({a, b});
    io::write_text(io::sidecar_path(pngPath), json{{"count", sp.count}, {"adjacency", adj}}.dump() + "\n");
}

SuperPixelMap read_superpixels(const fs::path& pngPath) {
    SuperPixelMap sp;
    sp.labels = io::read_labels(pngPath);
    const fs::path meta = io::sidecar_path(pngPath);
    const json j = [&] {
        try {
            return parse_json(io::read_text(meta));
        } catch (const ParseError& e) {
            throw ParseError(meta.string() + ": " + e.what(), e.offset());
        }
    }();
    guarded([&] {
        sp.count = j.at("count").get<int>();
        for (const auto& pr : j.at("adjacency")) sp.adjacency.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
        return 0;
    });
    return sp;
}

std::string format_stats(const AggregationStats& s) {
    return json{{"answered", s.answers},
                {"pairs", s.pairs},
                {"valid", s.valid},
                {"validFraction", s.validFraction},
                {"agreementRate", s.agreementRate},
                {"medianElapsed", s.medianElapsed}}
        .dump();
}

}  // namespace hairstep::records
