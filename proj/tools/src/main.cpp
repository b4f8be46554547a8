#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hairstep/annotate.hpp"
#include "hairstep/hair3d.hpp"
#include "hairstep/io.hpp"
#include "hairstep/metrics.hpp"
#include "hairstep/pipeline.hpp"
#include "hairstep/random.hpp"
#include "hairstep/records.hpp"
#include "hairstep/render.hpp"
#include "service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hairstep;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitInvalid = 4;

struct EmptyResult : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kFormats = R"(File formats:
  strand map   8-bit RGB PNG; R = mask, (G, B) = (dx/2 + 0.5, dy/2 + 0.5), +y down.
  depth map    16-bit gray PNG (0 = invalid, else 1 + round(v * 65534)) plus
               <name>.json sidecar {"d_near", "d_far", "width", "height"}.
  mask         8-bit gray PNG, nonzero = set.
  hair         little-endian int32 strandCount; per strand int32 vertexCount
               and vertexCount * float32 (x, y, z).
  camera       JSON {"fx","fy","cx","cy","extrinsics": 16 row-major world-to-camera,
               "width","height"}; camera axes x right, y down, z forward.
  volume       <base>.bin float32 occupancy per voxel then float32 (x, y, z)
               orientation per voxel (x fastest); <base>.json {"dims","bbox"}.
  roots        JSON {"roots": [{"position": [x,y,z], "direction": [x,y,z]}]}.
  strokes      JSON {"imageId", "strokes": [[[x, y], ...], ...]}.
  superpixels  16-bit label PNG (0 = off hair) plus sidecar {"count", "adjacency"}.
  pairs        JSON lines {"pairId": "<imageId>#<n>", "p1": [x,y], "p2": [x,y],
               "superPixels": [a, b]}.
  answers      JSON lines {"pairId", "groupId", "choice": RED|BLUE|UNSURE, "elapsed"}.
  labels       JSON lines {"pairId", "r", "valid"}.
  labeled      JSON lines {"pairId", "imageId", "p1", "p2", "r"}.
Exit codes: 0 ok, 1 usage, 2 I/O or unreadable input, 3 empty result, 4 invalid input.
Environment: HAIRSTEP_PORT overrides the default port of `serve`.)";

Vec3 vec3_of(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) ensure_dir(file.parent_path());
}

template <typename T>
std::vector<std::string> formatted(const std::vector<T>& items) {
    std::vector<std::string> lines;
    lines.reserve(items.size());
    for (const auto& i : items) lines.push_back(records::format(i));
    return lines;
}

/// Name of a file with the given compound suffix, e.g. "a.strand.png" -> "a".
std::optional<std::string> stem_with_suffix(const fs::path& p, const std::string& suffix) {
    const std::string name = p.filename().string();
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
        return std::nullopt;
    return name.substr(0, name.size() - suffix.size());
}

std::vector<std::string> stems_in(const fs::path& dir, const std::string& suffix) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (const auto s = stem_with_suffix(e.path(), suffix); s && e.is_regular_file()) out.push_back(*s);
    std::sort(out.begin(), out.end());
    return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

struct RenderArgs {
    fs::path hair, camera, out;
    std::string name = "render";
    double lineWidth = 1.0;
};

void write_render(const RenderOutput& r, const fs::path& dir, const std::string& name) {
    io::write_strand_map(dir / (name + ".strand.png"), r.strandMap);
    io::write_depth_map(dir / (name + ".depth.png"), r.depth);
    io::write_mask(dir / (name + ".mask.png"), r.mask);
}

int run_render(const RenderArgs& a) {
    const auto model = read_hair(a.hair);
    const auto cam = read_camera(a.camera);
    RenderParams p;
    p.lineWidth = a.lineWidth;
    const auto r = render_hair(model, cam, p);
    ensure_dir(a.out);
    write_render(r, a.out, a.name);
    std::printf("%s\n", json{{"pixels", count_set(r.mask)},
                             {"dNear", r.depth.dNear},
                             {"dFar", r.depth.dFar},
                             {"degenerateSegments", r.degenerateSegments}}
                            .dump()
                            .c_str());
    if (r.empty) throw EmptyResult("nothing of the model is in front of the camera");
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    fs::path pred, gt, out;
    std::optional<fs::path> pairs;
};

int run_eval(const EvalArgs& a) {
    std::map<std::string, std::vector<PairLabel>> pairsByImage;
    if (a.pairs)
        for (const auto& p : records::read_jsonl<records::LabeledPair>(*a.pairs, records::parse_labeled_pair))
            pairsByImage[p.imageId].push_back(p.label);

    const auto gtStems = stems_in(a.gt, ".strand.png");
    const auto predStems = stems_in(a.pred, ".strand.png");
    std::vector<std::string> unmatched;
    std::set_symmetric_difference(gtStems.begin(), gtStems.end(), predStems.begin(), predStems.end(),
                                  std::back_inserter(unmatched));
    std::vector<std::string> matched;
    std::set_intersection(gtStems.begin(), gtStems.end(), predStems.begin(), predStems.end(), std::back_inserter(matched));
    if (matched.empty()) throw EmptyResult("no prediction matches a ground-truth file");

    std::vector<MetricReport> reports;
    std::vector<std::pair<std::string, std::string>> failed;
    for (const auto& name : matched) {
        try {
            const auto pred = io::read_strand_map(a.pred / (name + ".strand.png"));
            const auto gt = io::read_strand_map(a.gt / (name + ".strand.png"));
            std::optional<DepthMap> depth;
            const auto pairs = pairsByImage.find(name);
            const fs::path depthPath = a.pred / (name + ".depth.png");
            if (pairs != pairsByImage.end() && fs::exists(depthPath)) depth = io::read_depth_map(depthPath);
            auto r = evaluate_image(pred, gt, depth ? &*depth : nullptr,
                                    pairs != pairsByImage.end() ? pairs->second : std::vector<PairLabel>{});
            r.imageId = name;
            reports.push_back(std::move(r));
        } catch (const std::exception& e) {
            failed.emplace_back(name, e.what());
        }
    }

    ensure_dir(a.out);
    io::write_text(a.out / "metrics.jsonl", records::to_jsonl(formatted(reports)));
    std::string failedText;
    for (const auto& [name, why] : failed) failedText += name + "\t" + why + "\n";
    io::write_text(a.out / "failed.txt", failedText);
    std::string unmatchedText;
    for (const auto& name : unmatched) unmatchedText += name + "\n";
    io::write_text(a.out / "unmatched.txt", unmatchedText);

    auto mean = [&](auto field) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : reports)
            if (const std::optional<double> v = field(r)) {
                sum += *v;
                ++n;
            }
        return n ? std::optional(sum / static_cast<double>(n)) : std::nullopt;
    };
    const std::optional<double> means[] = {
        mean([](const MetricReport& r) { return r.hairSale; }),
        mean([](const MetricReport& r) { return r.hairSaleUndirected; }),
        mean([](const MetricReport& r) { return r.hairRida; }),
        mean([](const MetricReport& r) { return std::optional(r.iou); }),
    };
    std::string csv = "images,failed,unmatched,hairSale,hairSaleUndirected,hairRida,iou\n";
    csv += std::to_string(reports.size()) + "," + std::to_string(failed.size()) + "," + std::to_string(unmatched.size());
    for (const auto& m : means) {
        char buf[64] = "";
        if (m) std::snprintf(buf, sizeof buf, "%.17g", *m);
        csv += std::string(",") + buf;
    }
    io::write_text(a.out / "summary.csv", csv + "\n");

    std::printf("%s\n", json{{"images", reports.size()},
                             {"failed", failed.size()},
                             {"unmatched", unmatched.size()},
                             {"hairSale", optional_json(means[0])},
                             {"hairSaleUndirected", optional_json(means[1])},
                             {"hairRida", optional_json(means[2])},
                             {"iou", optional_json(means[3])}}
                            .dump()
                            .c_str());
    if (reports.empty()) throw EmptyResult("every matched image failed to load");
    return 0;
}

// ---------------------------------------------------------------------------
// annotation pipeline
// ---------------------------------------------------------------------------

struct StrokesArgs {
    fs::path strokes, mask, out;
    std::optional<fs::path> sparseOut;
};

int run_strokes2map(const StrokesArgs& a) {
    const auto strokes = records::read_strokes(a.strokes);
    const auto mask = io::read_mask(a.mask);
    const auto ras = rasterize_strokes(strokes, mask);
    if (ras.skipped > 0) std::fprintf(stderr, "warning: %d stroke(s) drew no pixel\n", ras.skipped);
    const auto r = interpolate_strand_map(ras.sparse, mask);
    for (const auto& p : r.unconstrainedComponents)
        std::fprintf(stderr, "warning: mask component at (%d, %d) has no stroke; filled from the nearest one\n", p.x, p.y);
    ensure_parent(a.out);
    io::write_strand_map(a.out, r.dense);
    if (a.sparseOut) {
        ensure_parent(*a.sparseOut);
        io::write_strand_map(*a.sparseOut, ras.sparse);
    }
    return 0;
}

struct SuperpixelArgs {
    fs::path image, hairMask, out;
    std::optional<fs::path> faceMask;
    SuperPixelParams params;
};

int run_superpixels(const SuperpixelArgs& a) {
    const auto image = io::read_gray(a.image);
    const auto hair = io::read_mask(a.hairMask);
    const Mask face = a.faceMask ? io::read_mask(*a.faceMask) : Mask(hair.width(), hair.height(), 0);
    const auto sp = generate_superpixels(image, hair, face, a.params);
    ensure_parent(a.out);
    records::write_superpixels(a.out, sp);
    std::printf("%s\n", json{{"count", sp.count}, {"adjacency", sp.adjacency.size()}}.dump().c_str());
    return 0;
}

struct SampleArgs {
    fs::path superpixels, out;
    std::string imageId;
    int perAdjacency = 1;
    std::uint64_t seed = 0;
};

int run_sample_pairs(const SampleArgs& a) {
    const auto sp = records::read_superpixels(a.superpixels);
    std::string id = a.imageId;
    if (id.empty()) {
        id = a.superpixels.filename().string();
        id = id.substr(0, id.find('.'));
    }
    const auto pairs = sample_pairs(sp, a.perAdjacency, a.seed, id);
    if (pairs.empty()) throw EmptyResult("no adjacent super-pixels to sample from");
    ensure_parent(a.out);
    io::write_text(a.out, records::to_jsonl(formatted(pairs)));
    std::printf("%s\n", json{{"pairs", pairs.size()}, {"seed", a.seed}}.dump().c_str());
    return 0;
}

struct AggregateArgs {
    fs::path answers, out;
    std::optional<fs::path> stats, pairs, labeledOut;
};

int run_aggregate(const AggregateArgs& a) {
    const auto answers = records::read_jsonl<AnnotationAnswer>(a.answers, records::parse_answer);
    if (answers.empty()) throw EmptyResult("no answers in " + a.answers.string());
    const auto [labels, stats] = aggregate_answers(answers);
    ensure_parent(a.out);
    io::write_text(a.out, records::to_jsonl(formatted(labels)));
    if (a.stats) {
        ensure_parent(*a.stats);
        io::write_text(*a.stats, records::format_stats(stats) + "\n");
    }
    if (a.labeledOut) {
        if (!a.pairs) throw InvalidInput("--labeled-out needs --pairs");
        const auto samples = records::read_jsonl<PairSample>(*a.pairs, records::parse_pair_sample);
        ensure_parent(*a.labeledOut);
        io::write_text(*a.labeledOut, records::to_jsonl(formatted(records::join_labels(samples, labels))));
    }
    std::printf("%s\n", records::format_stats(stats).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// 3D
// ---------------------------------------------------------------------------

struct FieldsArgs {
    fs::path hair, out;
    int resolution = 128;
    double radius = ClosedLoopParams{}.radius;
    double padding = 0.05;
    std::vector<double> bbox;
};

int run_strands2fields(const FieldsArgs& a) {
    const auto model = read_hair(a.hair);
    const Box3 box = a.bbox.empty() ? bounding_cube(model, a.padding)
                                    : Box3{Vec3(a.bbox[0], a.bbox[1], a.bbox[2]), Vec3(a.bbox[3], a.bbox[4], a.bbox[5])};
    const auto r = strands_to_fields(model, {a.resolution, a.resolution, a.resolution}, box, a.radius);
    if (r.report.clampedPoints)
        std::fprintf(stderr, "warning: %zu strand point(s) outside the box were clamped\n", r.report.clampedPoints);
    if (!r.report.degenerateVoxels.empty())
        std::fprintf(stderr, "warning: %zu voxel(s) had cancelling tangents\n", r.report.degenerateVoxels.size());
    ensure_parent(a.out);
    write_volume(a.out, r.grid);
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < r.grid.voxel_count(); ++i) occupied += r.grid.occupied(i);
    std::printf("%s\n", json{{"occupied", occupied}, {"voxels", r.grid.voxel_count()}}.dump().c_str());
    return 0;
}

struct GrowArgs {
    fs::path volume, out;
    std::optional<fs::path> roots, rootsFrom;
    std::size_t scalp = 0;
    std::vector<double> scalpCenter{0.0, 0.0, 0.0};
    double scalpRadius = 0.5;
    double maxPolar = 75.0;
    std::optional<std::uint64_t> seed;
    GrowParams params;
};

int run_grow(const GrowArgs& a) {
    const int sources = (a.roots ? 1 : 0) + (a.rootsFrom ? 1 : 0) + (a.scalp > 0 ? 1 : 0);
    if (sources != 1) throw InvalidInput("give exactly one of --roots, --roots-from, --scalp");
    if (a.scalp > 0 && !a.seed) throw InvalidInput("--scalp needs --seed");
    const auto grid = read_volume(a.volume);
    std::vector<Root> roots;
    if (a.roots) roots = read_roots(*a.roots);
    else if (a.rootsFrom) roots = roots_from_model(read_hair(*a.rootsFrom));
    else roots = hemisphere_scalp_roots(vec3_of(a.scalpCenter), a.scalpRadius, a.scalp, a.maxPolar, *a.seed);
    const auto r = grow_strands(grid, roots, a.params);
    if (!r.skippedRoots.empty()) std::fprintf(stderr, "warning: %zu root(s) grew no strand\n", r.skippedRoots.size());
    if (r.model.strands.empty()) throw EmptyResult("no strands grown");
    ensure_parent(a.out);
    write_hair(a.out, r.model);
    std::printf("%s\n", json{{"strands", r.model.strands.size()},
                             {"vertices", r.model.vertex_count()},
                             {"skippedRoots", r.skippedRoots.size()},
                             {"flips", r.flips}}
                            .dump()
                            .c_str());
    return 0;
}

struct WigArgs {
    fs::path out;
    WigParams params;
    std::uint64_t seed = 0;
};

int run_synth_wig(const WigArgs& a) {
    const auto model = make_procedural_wig(a.params, a.seed);
    ensure_parent(a.out);
    write_hair(a.out, model);
    std::printf("%s\n", json{{"strands", model.strands.size()}, {"vertices", model.vertex_count()}, {"seed", a.seed}}.dump().c_str());
    return 0;
}

struct CameraArgs {
    fs::path out;
    std::vector<double> target{0.0, -0.1, 0.0};
    double distance = 3.0, azimuth = 0.0, elevation = 0.0, fov = 35.0;
    int width = 256, height = 256;
    int views = 0;
    std::vector<double> azimuthRange{-45.0, 45.0};
    std::vector<double> elevationRange{-15.0, 30.0};
    std::optional<std::uint64_t> seed;
};

int run_camera(const CameraArgs& a) {
    if (a.views == 0) {
        const auto cam = Camera::orbit(vec3_of(a.target), a.distance, a.azimuth, a.elevation, a.fov, a.width, a.height);
        validate(cam);
        ensure_parent(a.out);
        write_camera(a.out, cam);
        return 0;
    }
    if (!a.seed) throw InvalidInput("--views needs --seed");
    ensure_dir(a.out);
    Rng rng(*a.seed);
    for (int k = 0; k < a.views; ++k) {
        const double az = rng.uniform(a.azimuthRange[0], a.azimuthRange[1]);
        const double el = rng.uniform(a.elevationRange[0], a.elevationRange[1]);
        const auto cam = Camera::orbit(vec3_of(a.target), a.distance, az, el, a.fov, a.width, a.height);
        char name[32];
        std::snprintf(name, sizeof name, "cam_%03d.json", k);
        write_camera(a.out / name, cam);
    }
    return 0;
}

struct ClosedLoopArgs {
    std::uint64_t seed = 0;
    std::size_t strands = WigParams{}.strands;
    int size = 256;
    ClosedLoopParams params;
    std::optional<fs::path> out;
};

int run_closed_loop_cmd(const ClosedLoopArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    WigParams wp;
    wp.strands = a.strands;
    const auto wig = make_procedural_wig(wp, a.seed);
    const auto cam = Camera::orbit(Vec3(0.0, -0.1, 0.0), 3.0, 0.0, 0.0, 35.0, a.size, a.size);
    const auto r = run_closed_loop(wig, cam, a.params);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json report{{"seed", a.seed},
                      {"resolution", a.params.resolution},
                      {"hairSale", optional_json(r.hairSale)},
                      {"iou", r.iou},
                      {"grownStrands", r.grown.strands.size()},
                      {"skippedRoots", r.skippedRoots},
                      {"seconds", seconds}};
    if (a.out) {
        ensure_dir(*a.out);
        write_hair(*a.out / "original.data", wig);
        write_hair(*a.out / "grown.data", r.grown);
        write_camera(*a.out / "camera.json", cam);
        write_render(r.original, *a.out, "original");
        write_render(r.regrown, *a.out, "regrown");
        io::write_text(*a.out / "report.json", report.dump() + "\n");
    }
    std::printf("%s\n", report.dump().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// serve
// ---------------------------------------------------------------------------

struct ServeArgs {
    fs::path images, pairs, state;
    std::optional<fs::path> uiDir;
    std::string host = "127.0.0.1";
    std::optional<int> port;
    std::uint64_t seed = 0;
    double lease = 120.0;
};

int default_port() {
    if (const char* env = std::getenv("HAIRSTEP_PORT")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            throw InvalidInput(std::string("HAIRSTEP_PORT is not a port number: ") + env);
        }
    }
    return 8080;
}

int run_serve(const ServeArgs& a) {
    auto pairs = records::read_jsonl<PairSample>(a.pairs, records::parse_pair_sample);
    if (!fs::is_directory(a.images)) throw IoError("not a directory: " + a.images.string());
    if (a.uiDir && !fs::is_directory(*a.uiDir)) throw IoError("not a directory: " + a.uiDir->string());
    service::ServiceOptions opts;
    opts.seed = a.seed;
    opts.leaseSeconds = a.lease;
    opts.imageUrls = service::image_urls(a.images, pairs);
    ensure_parent(a.state);
    service::AnnotationService svc(std::move(pairs), a.state, opts);
    std::fprintf(stderr, "replayed %zu answer(s) from %s%s; queue seed %llu\n", svc.replayed(), a.state.c_str(),
                 svc.dropped_partial_line() ? " (dropped a truncated last line)" : "",
                 static_cast<unsigned long long>(a.seed));
    service::ServerOptions so;
    so.host = a.host;
    so.port = a.port ? *a.port : default_port();
    so.imagesDir = a.images;
    so.uiDir = a.uiDir;
    return service::run_server(svc, so);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hairstep: strand/depth map representation, annotation, rendering, 3D fields and metrics"};
    app.footer(kFormats);
    app.require_subcommand(1);
    std::function<int()> run;

    RenderArgs render;
    auto* cRender = app.add_subcommand("render", "Render a strand model to strand map, depth map and mask");
    cRender->add_option("--hair", render.hair, "Strand file")->required();
    cRender->add_option("--camera", render.camera, "Camera JSON")->required();
    cRender->add_option("--out", render.out, "Output directory")->required();
    cRender->add_option("--name", render.name, "Output name: <name>.strand.png, <name>.depth.png/.json, <name>.mask.png");
    cRender->add_option("--line-width", render.lineWidth, "Line width in pixels")->check(CLI::PositiveNumber);
    cRender->callback([&] { run = [&] { return run_render(render); }; });

    EvalArgs eval;
    auto* cEval = app.add_subcommand("eval", "Score predicted strand/depth maps against ground truth");
    cEval->add_option("--pred", eval.pred, "Directory of <name>.strand.png and optional <name>.depth.png")->required();
    cEval->add_option("--gt", eval.gt, "Directory of <name>.strand.png")->required();
    cEval->add_option("--pairs", eval.pairs, "Labeled pairs (JSON lines); imageId matches <name>");
    cEval->add_option("--out", eval.out, "Writes metrics.jsonl, summary.csv, failed.txt, unmatched.txt")->required();
    cEval->callback([&] { run = [&] { return run_eval(eval); }; });

    StrokesArgs strokes;
    auto* cStrokes = app.add_subcommand("strokes2map", "Rasterize strokes and interpolate a dense strand map");
    cStrokes->add_option("--strokes", strokes.strokes, "Stroke JSON")->required();
    cStrokes->add_option("--mask", strokes.mask, "Hair mask PNG")->required();
    cStrokes->add_option("--out", strokes.out, "Dense strand map PNG")->required();
    cStrokes->add_option("--sparse-out", strokes.sparseOut, "Also write the rasterized strokes");
    cStrokes->callback([&] { run = [&] { return run_strokes2map(strokes); }; });

    SuperpixelArgs sp;
    auto* cSp = app.add_subcommand("superpixels", "Segment the hair region into super-pixels");
    cSp->add_option("--image", sp.image, "Portrait (gray or RGB PNG)")->required();
    cSp->add_option("--hair-mask", sp.hairMask, "Hair mask PNG")->required();
    cSp->add_option("--face-mask", sp.faceMask, "Face mask PNG (scales the count)");
    cSp->add_option("--out", sp.out, "Label PNG; adjacency goes to the .json sidecar")->required();
    cSp->add_option("--density", sp.params.density, "Hair pixels per super-pixel")->check(CLI::PositiveNumber);
    cSp->add_option("--compactness", sp.params.compactness, "Spatial weight")->check(CLI::PositiveNumber);
    cSp->add_option("--iterations", sp.params.iterations, "k-means iterations")->check(CLI::PositiveNumber);
    cSp->add_option("--seed", sp.params.seed, "Random seed")->required();
    cSp->callback([&] { run = [&] { return run_superpixels(sp); }; });

    SampleArgs sample;
    auto* cSample = app.add_subcommand("sample-pairs", "Sample depth-comparison pairs across adjacent super-pixels");
    cSample->add_option("--superpixels", sample.superpixels, "Label PNG written by `superpixels`")->required();
    cSample->add_option("--per-adjacency", sample.perAdjacency, "Pairs per adjacent super-pixel pair")->check(CLI::PositiveNumber);
    cSample->add_option("--image-id", sample.imageId, "Pair id prefix (default: label file name up to the first dot)");
    cSample->add_option("--out", sample.out, "Pairs JSON lines")->required();
    cSample->add_option("--seed", sample.seed, "Random seed")->required();
    cSample->callback([&] { run = [&] { return run_sample_pairs(sample); }; });

    AggregateArgs agg;
    auto* cAgg = app.add_subcommand("aggregate", "Three-group consensus labels from QA answers");
    cAgg->add_option("--answers", agg.answers, "Answers JSON lines")->required();
    cAgg->add_option("--out", agg.out, "Labels JSON lines")->required();
    cAgg->add_option("--stats", agg.stats, "Write aggregation statistics JSON");
    cAgg->add_option("--pairs", agg.pairs, "Pairs JSON lines, for --labeled-out");
    cAgg->add_option("--labeled-out", agg.labeledOut, "Valid labels joined with pair pixels");
    cAgg->callback([&] { run = [&] { return run_aggregate(agg); }; });

    FieldsArgs fields;
    auto* cFields = app.add_subcommand("strands2fields", "Voxelize strands into occupancy and orientation fields");
    cFields->add_option("--hair", fields.hair, "Strand file")->required();
    cFields->add_option("--out", fields.out, "Volume .bin path (.json written alongside)")->required();
    cFields->add_option("--res", fields.resolution, "Voxels per axis")->check(CLI::Range(1, 1024));
    cFields->add_option("--radius", fields.radius, "Dilation radius in voxel edges")->check(CLI::NonNegativeNumber);
    cFields->add_option("--padding", fields.padding, "Padding of the automatic bounding cube")->check(CLI::NonNegativeNumber);
    cFields->add_option("--bbox", fields.bbox, "x0,y0,z0,x1,y1,z1 (default: bounding cube of the model)")
        ->delimiter(',')
        ->expected(6);
    cFields->callback([&] { run = [&] { return run_strands2fields(fields); }; });

    GrowArgs grow;
    auto* cGrow = app.add_subcommand("grow", "Grow strands through an orientation field");
    cGrow->add_option("--volume", grow.volume, "Volume .bin")->required();
    cGrow->add_option("--roots", grow.roots, "Roots JSON");
    cGrow->add_option("--roots-from", grow.rootsFrom, "Use the first vertex and direction of each strand in this file");
    cGrow->add_option("--scalp", grow.scalp, "Number of roots on a hemispherical scalp");
    cGrow->add_option("--scalp-center", grow.scalpCenter, "x,y,z")->delimiter(',')->expected(3);
    cGrow->add_option("--scalp-radius", grow.scalpRadius)->check(CLI::PositiveNumber);
    cGrow->add_option("--max-polar", grow.maxPolar, "Scalp cap half-angle in degrees");
    cGrow->add_option("--seed", grow.seed, "Random seed (required with --scalp)");
    cGrow->add_option("--step", grow.params.step, "Step length; 0 = half a voxel edge")->check(CLI::NonNegativeNumber);
    cGrow->add_option("--threshold", grow.params.occThreshold, "Occupancy threshold");
    cGrow->add_option("--max-steps", grow.params.maxSteps)->check(CLI::PositiveNumber);
    cGrow->add_option("--inertia", grow.params.inertia)->check(CLI::Range(0.0, 1.0));
    cGrow->add_option("--out", grow.out, "Strand file")->required();
    cGrow->callback([&] { run = [&] { return run_grow(grow); }; });

    WigArgs wig;
    auto* cWig = app.add_subcommand("synth-wig", "Write a procedural hairstyle");
    cWig->add_option("--out", wig.out, "Strand file")->required();
    cWig->add_option("--strands", wig.params.strands)->check(CLI::PositiveNumber);
    cWig->add_option("--segments", wig.params.segments)->check(CLI::PositiveNumber);
    cWig->add_option("--segment-length", wig.params.segmentLength)->check(CLI::PositiveNumber);
    cWig->add_option("--head-radius", wig.params.headRadius)->check(CLI::PositiveNumber);
    cWig->add_option("--curl", wig.params.curl)->check(CLI::NonNegativeNumber);
    cWig->add_option("--seed", wig.seed, "Random seed")->required();
    cWig->callback([&] { run = [&] { return run_synth_wig(wig); }; });

    CameraArgs camera;
    auto* cCam = app.add_subcommand("camera", "Write an orbit camera, or --views random ones, looking at a target");
    cCam->add_option("--out", camera.out, "Camera JSON")->required();
    cCam->add_option("--target", camera.target, "x,y,z")->delimiter(',')->expected(3);
    cCam->add_option("--distance", camera.distance)->check(CLI::PositiveNumber);
    cCam->add_option("--azimuth", camera.azimuth, "Degrees about +y, 0 = from +z");
    cCam->add_option("--elevation", camera.elevation, "Degrees above the xz plane");
    cCam->add_option("--fov", camera.fov, "Vertical field of view, degrees")->check(CLI::Range(1.0, 179.0));
    cCam->add_option("--width", camera.width)->check(CLI::PositiveNumber);
    cCam->add_option("--height", camera.height)->check(CLI::PositiveNumber);
    cCam->add_option("--views", camera.views, "Random views; --out is then a directory of cam_NNN.json")->check(CLI::NonNegativeNumber);
    cCam->add_option("--azimuth-range", camera.azimuthRange, "lo,hi degrees for random views")->delimiter(',')->expected(2);
    cCam->add_option("--elevation-range", camera.elevationRange, "lo,hi degrees for random views")->delimiter(',')->expected(2);
    cCam->add_option("--seed", camera.seed, "Random seed (required with --views)");
    cCam->callback([&] { run = [&] { return run_camera(camera); }; });

    ClosedLoopArgs loop;
    auto* cLoop = app.add_subcommand("closed-loop", "Wig -> fields -> grow -> render -> compare");
    cLoop->add_option("--seed", loop.seed, "Wig seed")->required();
    cLoop->add_option("--strands", loop.strands)->check(CLI::PositiveNumber);
    cLoop->add_option("--res", loop.params.resolution, "Voxels per axis")->check(CLI::Range(2, 1024));
    cLoop->add_option("--radius", loop.params.radius, "Dilation radius in voxel edges")->check(CLI::NonNegativeNumber);
    cLoop->add_option("--size", loop.size, "Render size in pixels")->check(CLI::PositiveNumber);
    cLoop->add_option("--out", loop.out, "Write models, camera, renders and report.json here");
    cLoop->callback([&] { run = [&] { return run_closed_loop_cmd(loop); }; });

    ServeArgs serve;
    auto* cServe = app.add_subcommand("serve", "Serve depth-pair QA tasks over HTTP");
    cServe->add_option("--images", serve.images, "Directory of <imageId>.png|jpg")->required();
    cServe->add_option("--pairs", serve.pairs, "Pairs JSON lines")->required();
    cServe->add_option("--state", serve.state, "Answer log (JSON lines, created if absent)")->required();
    cServe->add_option("--ui-dir", serve.uiDir, "Static UI files served at /");
    cServe->add_option("--host", serve.host);
    cServe->add_option("--port", serve.port, "Default 8080 or $HAIRSTEP_PORT; 0 picks a free port")->check(CLI::Range(0, 65535));
    cServe->add_option("--lease", serve.lease, "Seconds a task stays reserved")->check(CLI::PositiveNumber);
    cServe->add_option("--seed", serve.seed, "Queue shuffle seed")->required();
    cServe->callback([&] { run = [&] { return run_serve(serve); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        return run();
    } catch (const EmptyResult& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitEmpty;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const hairstep::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    }
}
