#include "service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>

#include "httplib.h"
#include "json.hpp"

#include "hairstep/errors.hpp"
#include "hairstep/io.hpp"
#include "hairstep/random.hpp"
#include "hairstep/records.hpp"

namespace hairstep::service {

using nlohmann::json;

AnnotationService::AnnotationService(std::vector<PairSample> pairs, fs::path logPath, ServiceOptions options)
    : pairs_(std::move(pairs)), logPath_(std::move(logPath)), options_(std::move(options)) {
    if (pairs_.empty()) throw InvalidInput("no pairs to annotate");
    for (std::size_t i = 0; i < pairs_.size(); ++i)
        if (!index_.emplace(pairs_[i].pairId, i).second) throw InvalidInput("duplicate pairId " + pairs_[i].pairId);

    for (int g = 0; g < kGroupCount; ++g) {
        auto& order = queues_[g].order;
        order.resize(pairs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(options_.seed * 1000003u + static_cast<std::uint64_t>(g + 1));
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    }
    replay();
    fd_ = ::open(logPath_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open " + logPath_.string() + ": " + std::strerror(errno));
}

AnnotationService::~AnnotationService() {
    if (fd_ >= 0) ::close(fd_);
}

void AnnotationService::replay() {
    if (!fs::exists(logPath_)) return;
    const std::string text = io::read_text(logPath_);
    std::size_t start = 0, goodEnd = 0;
    bool needNewline = false;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        const bool last = nl == std::string::npos;
        const std::string line = text.substr(start, (last ? text.size() : nl) - start);
        const std::size_t next = last ? text.size() : nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            start = goodEnd = next;
            continue;
        }
        AnnotationAnswer a;
        try {
            a = records::parse_answer(line);
        } catch (const ParseError& e) {
            // Only an unterminated final line can be the tail of an interrupted write.
            if (last) {
                droppedPartial_ = true;
                break;
            }
            throw ParseError(logPath_.string() + ": " + e.what(), start + e.offset());
        }
        const auto it = index_.find(a.pairId);
        if (it == index_.end()) throw ParseError(logPath_.string() + ": unknown pairId " + a.pairId, start);
        if (a.groupId < 1 || a.groupId > kGroupCount) throw ParseError(logPath_.string() + ": bad groupId", start);
        if (!queues_[a.groupId - 1].done.count(it->second)) apply(a, it->second);
        ++replayed_;
        needNewline = last;
        start = goodEnd = next;
    }
    if (goodEnd < text.size()) fs::resize_file(logPath_, goodEnd);
    if (needNewline) {
        std::FILE* f = std::fopen(logPath_.c_str(), "ab");
        if (!f) throw IoError("cannot open " + logPath_.string());
        std::fputc('\n', f);
        std::fclose(f);
    }
}

void AnnotationService::apply(const AnnotationAnswer& answer, std::size_t pairIndex) {
    auto& q = queues_[answer.groupId - 1];
    q.done.insert(pairIndex);
    q.leases.erase(pairIndex);
    answers_.push_back(answer);
}

void AnnotationService::append_line(const std::string& line) {
    const std::string data = line + "\n";
    std::size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(fd_, data.data() + written, data.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError("write failed: " + logPath_.string() + ": " + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw IoError("fsync failed: " + logPath_.string());
}

TaskView AnnotationService::view_of(std::size_t i) const {
    const auto& p = pairs_[i];
    const std::string image = image_id_of(p.pairId);
    const auto url = options_.imageUrls.find(image);
    return {p.pairId, url != options_.imageUrls.end() ? url->second : "/images/" + image + ".png", p.p1, p.p2};
}

std::optional<TaskView> AnnotationService::next_task(int group, Clock::time_point now) {
    if (group < 1 || group > kGroupCount) throw InvalidInput("group must be 1, 2 or 3");
    std::lock_guard lock(mutex_);
    auto& q = queues_[group - 1];
    while (q.cursor < q.order.size() && q.done.count(q.order[q.cursor])) ++q.cursor;
    const auto lease = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options_.leaseSeconds));
    for (std::size_t k = q.cursor; k < q.order.size(); ++k) {
        const std::size_t i = q.order[k];
        if (q.done.count(i)) continue;
        const auto it = q.leases.find(i);
        if (it != q.leases.end() && now - it->second < lease) continue;
        q.leases[i] = now;
        return view_of(i);
    }
    return std::nullopt;
}

Submit AnnotationService::submit(const AnnotationAnswer& answer) {
    if (answer.groupId < 1 || answer.groupId > kGroupCount) return Submit::BadGroup;
    std::lock_guard lock(mutex_);
    const auto it = index_.find(answer.pairId);
    if (it == index_.end()) return Submit::UnknownPair;
    if (queues_[answer.groupId - 1].done.count(it->second)) return Submit::Duplicate;
    append_line(records::format(answer));
    apply(answer, it->second);
    return Submit::Accepted;
}

AggregationStats AnnotationService::stats() const {
    std::lock_guard lock(mutex_);
    return aggregate_answers(answers_).second;
}

std::vector<AggregatedLabel> AnnotationService::aggregate() const {
    std::lock_guard lock(mutex_);
    return aggregate_answers(answers_).first;
}

std::size_t AnnotationService::answer_count() const {
    std::lock_guard lock(mutex_);
    return answers_.size();
}

std::map<std::string, std::string> image_urls(const fs::path& imagesDir, const std::vector<PairSample>& pairs) {
    std::map<std::string, std::string> out;
    for (const auto& p : pairs) {
        const std::string id = image_id_of(p.pairId);
        if (out.count(id)) continue;
        std::string file = id + ".png";
        for (const char* ext : {".png", ".jpg", ".jpeg"})
            if (fs::exists(imagesDir / (id + ext))) {
                file = id + ext;
                break;
            }
        out[id] = "/images/" + file;
    }
    return out;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

json pixel_json(Pixel p) { return json::array({p.x, p.y}); }

std::optional<AnnotationAnswer> parse_body(const std::string& body, std::string& why) {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        why = "body must be a JSON object";
        return std::nullopt;
    }
    AnnotationAnswer a;
    const auto id = j.find("pairId");
    if (id == j.end() || !(id->is_string() || id->is_number_integer())) {
        why = "pairId must be a string";
        return std::nullopt;
    }
    a.pairId = id->is_string() ? id->get<std::string>() : id->dump();
    const auto group = j.find("group");
    if (group == j.end() || !group->is_number_integer()) {
        why = "group must be an integer";
        return std::nullopt;
    }
    a.groupId = group->get<int>();
    const auto choice = j.find("choice");
    const auto parsed = choice != j.end() && choice->is_string() ? parse_choice(choice->get<std::string>()) : std::nullopt;
    if (!parsed) {
        why = "choice must be RED, BLUE or UNSURE";
        return std::nullopt;
    }
    a.choice = *parsed;
    const auto elapsed = j.find("elapsed");
    if (elapsed != j.end()) {
        if (!elapsed->is_number() || elapsed->get<double>() < 0.0) {
            why = "elapsed must be a non-negative number";
            return std::nullopt;
        }
        a.elapsed = elapsed->get<double>();
    }
    return a;
}

}  // namespace

int run_server(AnnotationService& service, const ServerOptions& options) {
    httplib::Server server;

    server.Get("/api/task", [&](const httplib::Request& req, httplib::Response& res) {
        int group = 0;
        try {
            group = std::stoi(req.get_param_value("group"));
        } catch (const std::exception&) {
        }
        if (group < 1 || group > kGroupCount) return send_error(res, 400, "group must be 1, 2 or 3");
        const auto task = service.next_task(group);
        if (!task) {
            res.status = 204;
            return;
        }
        send_json(res, 200,
                  json{{"pairId", task->pairId}, {"imageUrl", task->imageUrl}, {"p1", pixel_json(task->p1)}, {"p2", pixel_json(task->p2)}});
    });

    server.Post("/api/answer", [&](const httplib::Request& req, httplib::Response& res) {
        std::string why;
        const auto answer = parse_body(req.body, why);
        if (!answer) return send_error(res, 400, why);
        try {
            switch (service.submit(*answer)) {
                case Submit::Accepted:
                    return send_json(res, 200, json{{"ok", true}, {"answered", service.answer_count()}});
                case Submit::UnknownPair:
                    return send_error(res, 404, "unknown pairId " + answer->pairId);
                case Submit::Duplicate:
                    return send_error(res, 409, "pair already answered by this group");
                case Submit::BadGroup:
                    return send_error(res, 400, "group must be 1, 2 or 3");
            }
        } catch (const IoError& e) {
            return send_error(res, 500, e.what());
        }
    });

    server.Get("/api/stats", [&](const httplib::Request&, httplib::Response& res) {
        const auto s = service.stats();
        send_json(res, 200,
                  json{{"answered", s.answers}, {"pairs", s.pairs}, {"valid", s.valid}, {"agreementRate", s.agreementRate},
                       {"medianElapsed", s.medianElapsed}});
    });

    server.Get("/api/aggregate", [&](const httplib::Request&, httplib::Response& res) {
        std::string body;
        for (const auto& l : service.aggregate()) body += records::format(l) + "\n";
        res.set_content(body, "application/x-ndjson");
    });

    if (!options.imagesDir.empty() && !server.set_mount_point("/images", options.imagesDir.string()))
        throw IoError("cannot serve images from " + options.imagesDir.string());
    if (options.uiDir && !server.set_mount_point("/", options.uiDir->string()))
        throw IoError("cannot serve UI from " + options.uiDir->string());

    int port = options.port;
    if (port == 0) {
        port = server.bind_to_any_port(options.host);
        if (port < 0) throw IoError("cannot bind " + options.host);
    } else if (!server.bind_to_port(options.host, port)) {
        throw IoError("cannot bind " + options.host + ":" + std::to_string(port));
    }
    std::printf("listening on http://%s:%d\n", options.host.c_str(), port);
    std::fflush(stdout);
    return server.listen_after_bind() ? 0 : 2;
}

}  // namespace hairstep::service
