#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hairstep/annotate.hpp"

namespace hairstep::service {

namespace fs = std::filesystem;

struct TaskView {
    std::string pairId;
    std::string imageUrl;
    Pixel p1;
    Pixel p2;
};

enum class Submit { Accepted, UnknownPair, Duplicate, BadGroup };

struct ServiceOptions {
    std::uint64_t seed = 0;
    /// Seconds a handed-out task stays reserved for its group.
    double leaseSeconds = 120.0;
    /// imageId -> URL path served to the UI.
    std::map<std::string, std::string> imageUrls;
};

/// Depth-pair QA state: one shuffled queue per group, an append-only answer
/// log on disk, replayed at construction. Thread-safe.
class AnnotationService {
public:
    using Clock = std::chrono::steady_clock;

    AnnotationService(std::vector<PairSample> pairs, fs::path logPath, ServiceOptions options);
    ~AnnotationService();
    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    /// Next pair for `group` that it has not answered and that is not leased
    /// to another annotator of the same group. nullopt when drained.
    std::optional<TaskView> next_task(int group, Clock::time_point now = Clock::now());

    /// Appends to the log (flushed to disk) before returning Accepted.
    Submit submit(const AnnotationAnswer& answer);

    AggregationStats stats() const;
    std::vector<AggregatedLabel> aggregate() const;

    std::size_t answer_count() const;
    /// Lines recovered from the log at startup; a truncated last line is dropped.
    std::size_t replayed() const { return replayed_; }
    bool dropped_partial_line() const { return droppedPartial_; }

private:
    struct Queue {
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
        std::set<std::size_t> done;
        std::map<std::size_t, Clock::time_point> leases;
    };

    void replay();
    void append_line(const std::string& line);
    void apply(const AnnotationAnswer& answer, std::size_t pairIndex);
    TaskView view_of(std::size_t pairIndex) const;

    std::vector<PairSample> pairs_;
    std::map<std::string, std::size_t> index_;
    fs::path logPath_;
    ServiceOptions options_;
    Queue queues_[kGroupCount];
    std::vector<AnnotationAnswer> answers_;
    int fd_ = -1;
    std::size_t replayed_ = 0;
    bool droppedPartial_ = false;
    mutable std::mutex mutex_;
};

/// Maps image ids to "/images/<file>", picking the first existing
/// <id>.png, <id>.jpg or <id>.jpeg in `imagesDir` (".png" if none exists).
std::map<std::string, std::string> image_urls(const fs::path& imagesDir, const std::vector<PairSample>& pairs);

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    fs::path imagesDir;
    std::optional<fs::path> uiDir;
};

/// Blocks serving the HTTP API until the process is stopped. Prints
/// "listening on http://host:port" once bound (port 0 picks a free port).
int run_server(AnnotationService& service, const ServerOptions& options);

}  // namespace hairstep::service
