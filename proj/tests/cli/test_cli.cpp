#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"

#include "hairstep/annotate.hpp"
#include "hairstep/hair3d.hpp"
#include "hairstep/io.hpp"
#include "hairstep/records.hpp"
#include "hairstep/render.hpp"

using namespace hairstep;
using hairstep::testing::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Runs the CLI with stderr merged into the captured output.
Result run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + quote(HAIRSTEP_BIN) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string p(const fs::path& path) { return quote(path.string()); }

/// Last line of output parsed as JSON.
json last_json(const std::string& out) {
    std::istringstream in(out);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty() && line[0] == '{') last = line;
    return json::parse(last);
}

std::string file_bytes(const fs::path& path) {
    const auto b = io::read_bytes(path);
    return {b.begin(), b.end()};
}

/// A wig and a camera written to `dir`.
void write_scene(const fs::path& dir, std::uint64_t seed = 5, int size = 96) {
    write_hair(dir / "wig.data", hairstep::testing::test_wig(seed, 300));
    write_camera(dir / "cam.json", hairstep::testing::front_camera(size));
}

// Child process running `hairstep serve`; stdout is read until the listening line.
class Server {
public:
    Server(const std::vector<std::string>& args, const std::vector<std::string>& env = {}) {
        int fds[2];
        if (pipe(fds) != 0) throw std::runtime_error("pipe");
        pid_ = fork();
        if (pid_ == 0) {
            dup2(fds[1], STDOUT_FILENO);
            close(fds[0]);
            close(fds[1]);
            for (const auto& e : env) putenv(const_cast<char*>(e.c_str()));
            std::vector<char*> argv{const_cast<char*>(HAIRSTEP_BIN), const_cast<char*>("serve")};
            for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execv(HAIRSTEP_BIN, argv.data());
            _exit(127);
        }
        close(fds[1]);
        out_ = fdopen(fds[0], "r");
        char line[256];
        if (!fgets(line, sizeof line, out_)) throw std::runtime_error("server exited before listening");
        const std::string s(line);
        const auto colon = s.rfind(':');
        port_ = std::stoi(s.substr(colon + 1));
    }

    ~Server() { kill_hard(); }

    void kill_hard() {
        if (pid_ <= 0) return;
        kill(pid_, SIGKILL);
        waitpid(pid_, nullptr, 0);
        fclose(out_);
        pid_ = -1;
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_connection_timeout(5);
        c.set_read_timeout(10);
        return c;
    }

    int port() const { return port_; }

private:
    pid_t pid_ = -1;
    FILE* out_ = nullptr;
    int port_ = 0;
};

struct QaFixture {
    TempDir dir;
    fs::path pairs, state, images;

    explicit QaFixture(int pairCount = 4) {
        images = dir / "images";
        fs::create_directories(images);
        io::write_mask(images / "face.png", Mask(8, 8, 1));
        std::vector<std::string> lines;
        for (int i = 0; i < pairCount; ++i)
            lines.push_back(records::format(PairSample{"face#" + std::to_string(i), {i, 0}, {i, 1}, {1, 2}}));
        pairs = dir / "pairs.jsonl";
        io::write_text(pairs, records::to_jsonl(lines));
        state = dir / "answers.jsonl";
    }

    std::vector<std::string> args(const std::string& port = "0") const {
        return {"--images", images.string(), "--pairs", pairs.string(), "--state", state.string(), "--seed", "11", "--port", port};
    }
};

std::string answer(const std::string& id, int group, const std::string& choice, double elapsed = 1.5) {
    return json{{"pairId", id}, {"group", group}, {"choice", choice}, {"elapsed", elapsed}}.dump();
}

}  // namespace

// ---------------------------------------------------------------------------
// Usage and exit codes
// ---------------------------------------------------------------------------

TEST(Cli, HelpDocumentsFormats) {
    const auto r = run_cli("--help");
    EXPECT_EQ(r.code, 0);
    for (const char* word : {"strand map", "depth map", "camera", "volume", "answers", "HAIRSTEP_PORT", "Exit codes"})
        EXPECT_NE(r.out.find(word), std::string::npos) << word;
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run_cli("").code, 1);
    EXPECT_EQ(run_cli("render --hair x").code, 1);
    EXPECT_EQ(run_cli("no-such-command").code, 1);
}

TEST(Cli, RandomizedCommandsRequireSeed) {
    TempDir dir;
    EXPECT_EQ(run_cli("synth-wig --out " + p(dir / "w.data")).code, 1);
    EXPECT_EQ(run_cli("sample-pairs --superpixels a.png --out b.jsonl").code, 1);
    EXPECT_EQ(run_cli("superpixels --image a --hair-mask b --out c").code, 1);
    EXPECT_EQ(run_cli("closed-loop").code, 1);
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

TEST(CliRender, WritesThreeConsistentFiles) {
    TempDir dir;
    write_scene(dir.path());
    const auto r = run_cli("render --hair " + p(dir / "wig.data") + " --camera " + p(dir / "cam.json") + " --out " +
                            p(dir / "out") + " --name v0");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto strand = io::read_strand_map(dir / "out" / "v0.strand.png");
    const auto depth = io::read_depth_map(dir / "out" / "v0.depth.png");
    const auto mask = io::read_mask(dir / "out" / "v0.mask.png");
    EXPECT_TRUE(fs::exists(dir / "out" / "v0.depth.json"));
    EXPECT_GT(count_set(mask), 0u);
    EXPECT_EQ(depth.valid, mask);
    for (std::size_t i = 0; i < mask.size(); ++i) EXPECT_EQ(on_mask(strand.at_index(i)), mask.at_index(i) != 0);
}

TEST(CliRender, MissingCameraNamesPath) {
    TempDir dir;
    write_scene(dir.path());
    const auto missing = dir / "nope.json";
    const auto r = run_cli("render --hair " + p(dir / "wig.data") + " --camera " + p(missing) + " --out " + p(dir / "o"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find(missing.string()), std::string::npos) << r.out;
}

TEST(CliRender, RerunsAreByteIdentical) {
    TempDir dir;
    write_scene(dir.path());
    const std::string base = "render --hair " + p(dir / "wig.data") + " --camera " + p(dir / "cam.json") + " --out ";
    ASSERT_EQ(run_cli(base + p(dir / "a")).code, 0);
    ASSERT_EQ(run_cli(base + p(dir / "b")).code, 0);
    for (const char* f : {"render.strand.png", "render.depth.png", "render.depth.json", "render.mask.png"})
        EXPECT_EQ(file_bytes(dir / "a" / f), file_bytes(dir / "b" / f)) << f;
}

TEST(CliRender, RandomViewsAreSeeded) {
    TempDir dir;
    const std::string args = "camera --views 3 --azimuth-range -30,30 --elevation-range 0,10 --seed 5 --out ";
    ASSERT_EQ(run_cli(args + p(dir / "a")).code, 0);
    ASSERT_EQ(run_cli(args + p(dir / "b")).code, 0);
    for (const char* f : {"cam_000.json", "cam_001.json", "cam_002.json"}) {
        EXPECT_EQ(file_bytes(dir / "a" / f), file_bytes(dir / "b" / f));
        EXPECT_NO_THROW(validate(read_camera(dir / "a" / f)));
    }
    EXPECT_NE(file_bytes(dir / "a" / "cam_000.json"), file_bytes(dir / "a" / "cam_001.json"));
    EXPECT_EQ(run_cli("camera --views 2 --out " + p(dir / "c")).code, 4);
}

TEST(CliRender, BehindCameraIsEmptyResult) {
    TempDir dir;
    write_hair(dir / "wig.data", hairstep::testing::test_wig(1, 50));
    write_camera(dir / "cam.json", Camera::look_at(Vec3(0, 0, 3), Vec3(0, 0, 6), Vec3::UnitY(), 35, 32, 32));
    EXPECT_EQ(run_cli("render --hair " + p(dir / "wig.data") + " --camera " + p(dir / "cam.json") + " --out " + p(dir / "o")).code, 3);
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

namespace {

/// Renders three views into `dir` and returns labeled pairs consistent with
/// the rendered depth.
std::vector<records::LabeledPair> render_views(const fs::path& dir) {
    const auto wig = hairstep::testing::test_wig(9, 300);
    std::vector<records::LabeledPair> pairs;
    Rng rng(3);
    for (int v = 0; v < 3; ++v) {
        const auto cam = Camera::orbit(Vec3(0, -0.1, 0), 3.0, 25.0 * v, 0, 35, 64, 64);
        const auto r = render_hair(wig, cam);
        const std::string name = "view" + std::to_string(v);
        io::write_strand_map(dir / (name + ".strand.png"), r.strandMap);
        io::write_depth_map(dir / (name + ".depth.png"), r.depth);
        std::vector<Pixel> on;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (r.mask(x, y)) on.push_back({x, y});
        for (int k = 0; k < 40; ++k) {
            const Pixel a = on[rng.index(on.size())], b = on[rng.index(on.size())];
            const double da = std::round(r.depth.values[a] * 65534), db = std::round(r.depth.values[b] * 65534);
            if (da == db) continue;
            pairs.push_back({name, name + "#" + std::to_string(k), {a, b, da > db ? 1 : -1}});
        }
    }
    return pairs;
}

std::vector<json> read_records(const fs::path& path) {
    std::vector<json> out;
    records::for_each_line(io::read_text(path), [&](const std::string& l, std::size_t) { out.push_back(json::parse(l)); });
    return out;
}

}  // namespace

TEST(CliEval, PredictionEqualToGroundTruthIsPerfect) {
    TempDir dir;
    fs::create_directories(dir / "gt");
    const auto pairs = render_views(dir / "gt");
    std::vector<std::string> lines;
    for (const auto& lp : pairs) lines.push_back(records::format(lp));
    io::write_text(dir / "pairs.jsonl", records::to_jsonl(lines));
    const auto r = run_cli("eval --pred " + p(dir / "gt") + " --gt " + p(dir / "gt") + " --pairs " + p(dir / "pairs.jsonl") +
                            " --out " + p(dir / "ev"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto recs = read_records(dir / "ev" / "metrics.jsonl");
    ASSERT_EQ(recs.size(), 3u);
    for (const auto& rec : recs) {
        EXPECT_EQ(rec["hairSale"].get<double>(), 0.0);
        EXPECT_EQ(rec["hairRida"].get<double>(), 1.0);
        EXPECT_EQ(rec["iou"].get<double>(), 1.0);
        EXPECT_GT(rec["pairCount"].get<int>(), 0);
    }
}

TEST(CliEval, CorruptFileListedAsFailed) {
    TempDir dir;
    fs::create_directories(dir / "gt");
    render_views(dir / "gt");
    fs::create_directories(dir / "pred");
    for (const auto& e : fs::directory_iterator(dir / "gt")) fs::copy_file(e.path(), dir / "pred" / e.path().filename());
    io::write_text(dir / "pred" / "view1.strand.png", "garbage");
    const auto r = run_cli("eval --pred " + p(dir / "pred") + " --gt " + p(dir / "gt") + " --out " + p(dir / "ev"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(read_records(dir / "ev" / "metrics.jsonl").size(), 2u);
    EXPECT_EQ(io::read_text(dir / "ev" / "failed.txt").rfind("view1\t", 0), 0u);
}

TEST(CliEval, SummaryIsMeanOfRecords) {
    TempDir dir;
    fs::create_directories(dir / "gt");
    fs::create_directories(dir / "pred");
    const auto wig = hairstep::testing::test_wig(2, 300), other = hairstep::testing::test_wig(3, 300);
    for (int v = 0; v < 4; ++v) {
        const auto cam = Camera::orbit(Vec3(0, -0.1, 0), 3.0, 20.0 * v, 5, 35, 48, 48);
        const std::string name = "img" + std::to_string(v);
        io::write_strand_map(dir / "gt" / (name + ".strand.png"), render_hair(wig, cam).strandMap);
        io::write_strand_map(dir / "pred" / (name + ".strand.png"), render_hair(other, cam).strandMap);
    }
    io::write_strand_map(dir / "pred" / "extra.strand.png", StrandMap(4, 4));
    const auto r = run_cli("eval --pred " + p(dir / "pred") + " --gt " + p(dir / "gt") + " --out " + p(dir / "ev"));
    ASSERT_EQ(r.code, 0) << r.out;
    double sale = 0, iou = 0;
    const auto recs = read_records(dir / "ev" / "metrics.jsonl");
    ASSERT_EQ(recs.size(), 4u);
    for (const auto& rec : recs) {
        sale += rec["hairSale"].get<double>();
        iou += rec["iou"].get<double>();
    }
    const std::string csv = io::read_text(dir / "ev" / "summary.csv");
    std::istringstream in(csv.substr(csv.find('\n') + 1));
    std::vector<std::string> cells;
    for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(cells[0], "4");
    EXPECT_EQ(cells[2], "1");
    EXPECT_NEAR(std::stod(cells[3]), sale / 4, 1e-12);
    EXPECT_NEAR(std::stod(cells[6]), iou / 4, 1e-12);
    EXPECT_EQ(io::read_text(dir / "ev" / "unmatched.txt"), "extra\n");
}

TEST(CliEval, NoMatchesExitsThree) {
    TempDir dir;
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    io::write_strand_map(dir / "a" / "x.strand.png", StrandMap(4, 4));
    io::write_strand_map(dir / "b" / "y.strand.png", StrandMap(4, 4));
    EXPECT_EQ(run_cli("eval --pred " + p(dir / "a") + " --gt " + p(dir / "b") + " --out " + p(dir / "ev")).code, 3);
}

// ---------------------------------------------------------------------------
// annotation pipeline
// ---------------------------------------------------------------------------

TEST(CliPipeline, ParallelStrokesGiveConstantAngle) {
    TempDir dir;
    io::write_mask(dir / "mask.png", Mask(40, 30, 1));
    const double c = std::cos(30.0 / 180.0 * std::numbers::pi), s = std::sin(30.0 / 180.0 * std::numbers::pi);
    StrokeSet strokes{"x", {{Vec2(2, 2), Vec2(2 + 20 * c, 2 + 20 * s)}, {Vec2(10, 12), Vec2(10 + 20 * c, 12 + 20 * s)}}};
    io::write_text(dir / "strokes.json", records::format_strokes(strokes));
    const auto r = run_cli("strokes2map --strokes " + p(dir / "strokes.json") + " --mask " + p(dir / "mask.png") + " --out " +
                            p(dir / "dense.png"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto dense = decode_strand_map(io::read_strand_map(dir / "dense.png"));
    // 8-bit storage adds < 0.5 degrees.
    for (std::size_t i = 0; i < dense.mask.size(); ++i) {
        ASSERT_TRUE(dense.mask.at_index(i));
        const Vec2 d = dense.directions.at_index(i);
        EXPECT_NEAR(std::atan2(d.y(), d.x()) * 180 / std::numbers::pi, 30.0, 0.5);
    }
}

TEST(CliPipeline, SuperpixelsPairsAggregateChain) {
    TempDir dir;
    GrayImage img(48, 48, 0.0);
    Mask hair(48, 48, 0), face(48, 48, 0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            img(x, y) = 0.5 + 0.4 * std::sin(x * 0.3) * std::cos(y * 0.2);
            hair(x, y) = y < 30;
            face(x, y) = y >= 30 && x > 12 && x < 36;
        }
    io::write_gray(dir / "portrait.png", img);
    io::write_mask(dir / "hair.png", hair);
    io::write_mask(dir / "face.png", face);
    const std::string spArgs = "superpixels --image " + p(dir / "portrait.png") + " --hair-mask " + p(dir / "hair.png") +
                               " --face-mask " + p(dir / "face.png") + " --density 20 --seed 4 --out ";
    ASSERT_EQ(run_cli(spArgs + p(dir / "sp.png")).code, 0);
    ASSERT_EQ(run_cli(spArgs + p(dir / "sp2.png")).code, 0);
    EXPECT_EQ(file_bytes(dir / "sp.png"), file_bytes(dir / "sp2.png"));

    const std::string pairArgs = "sample-pairs --superpixels " + p(dir / "sp.png") + " --per-adjacency 2 --image-id portrait --seed 9 --out ";
    ASSERT_EQ(run_cli(pairArgs + p(dir / "pairs.jsonl")).code, 0);
    ASSERT_EQ(run_cli(pairArgs + p(dir / "pairs2.jsonl")).code, 0);
    EXPECT_EQ(file_bytes(dir / "pairs.jsonl"), file_bytes(dir / "pairs2.jsonl"));
    const auto samples = records::read_jsonl<PairSample>(dir / "pairs.jsonl", records::parse_pair_sample);
    ASSERT_FALSE(samples.empty());

    // Every group says RED for the first pair; groups disagree on the second.
    std::vector<std::string> lines;
    for (int g = 1; g <= 3; ++g) {
        lines.push_back(records::format(AnnotationAnswer{samples[0].pairId, g, Choice::Red, 2.0}));
        lines.push_back(records::format(AnnotationAnswer{samples[1].pairId, g, g == 2 ? Choice::Blue : Choice::Red, 3.0}));
    }
    io::write_text(dir / "answers.jsonl", records::to_jsonl(lines));
    const auto r = run_cli("aggregate --answers " + p(dir / "answers.jsonl") + " --out " + p(dir / "labels.jsonl") +
                            " --pairs " + p(dir / "pairs.jsonl") + " --labeled-out " + p(dir / "labeled.jsonl"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto labels = records::read_jsonl<AggregatedLabel>(dir / "labels.jsonl", records::parse_label);
    ASSERT_EQ(labels.size(), 2u);
    EXPECT_TRUE(labels[0].valid);
    EXPECT_EQ(labels[0].r, 1);
    EXPECT_FALSE(labels[1].valid);
    const auto labeled = records::read_jsonl<records::LabeledPair>(dir / "labeled.jsonl", records::parse_labeled_pair);
    ASSERT_EQ(labeled.size(), 1u);
    EXPECT_EQ(labeled[0].imageId, "portrait");
    EXPECT_EQ(labeled[0].label.p1, samples[0].p1);
    EXPECT_EQ(last_json(r.out)["valid"].get<int>(), 1);
}

TEST(CliPipeline, GrowOnEmptyGridExitsThree) {
    TempDir dir;
    write_volume(dir / "empty.bin", VolumeGrid({8, 8, 8}, Box3{Vec3::Constant(-1), Vec3::Constant(1)}));
    write_roots(dir / "roots.json", {{Vec3(0, 0, 0), Vec3(0, 1, 0)}, {Vec3(0.5, 0, 0), Vec3(0, 1, 0)}});
    const auto r = run_cli("grow --volume " + p(dir / "empty.bin") + " --roots " + p(dir / "roots.json") + " --out " + p(dir / "g.data"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("no strands grown"), std::string::npos) << r.out;
}

TEST(CliPipeline, ClosedLoopThroughFiles) {
    // wig -> fields -> grow -> render both -> eval, all through the CLI.
    TempDir dir;
    ASSERT_EQ(run_cli("synth-wig --seed 42 --out " + p(dir / "wig.data")).code, 0);
    ASSERT_EQ(run_cli("camera --width 256 --height 256 --out " + p(dir / "cam.json")).code, 0);
    ASSERT_EQ(run_cli("strands2fields --hair " + p(dir / "wig.data") + " --res 128 --out " + p(dir / "vol.bin")).code, 0);
    ASSERT_EQ(run_cli("grow --volume " + p(dir / "vol.bin") + " --roots-from " + p(dir / "wig.data") + " --out " + p(dir / "grown.data")).code, 0);
    for (const char* m : {"wig", "grown"})
        ASSERT_EQ(run_cli("render --hair " + p(dir / (std::string(m) + ".data")) + " --camera " + p(dir / "cam.json") + " --out " +
                           p(dir / m) + " --name view")
                      .code,
                  0);
    const auto r = run_cli("eval --pred " + p(dir / "grown") + " --gt " + p(dir / "wig") + " --out " + p(dir / "ev"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto summary = last_json(r.out);
    EXPECT_LT(summary["hairSale"].get<double>(), 20.0);
    EXPECT_GT(summary["iou"].get<double>(), 0.7);
}

TEST(CliPipeline, SeededCommandsAreReproducible) {
    TempDir dir;
    ASSERT_EQ(run_cli("synth-wig --seed 8 --strands 100 --out " + p(dir / "a.data")).code, 0);
    ASSERT_EQ(run_cli("synth-wig --seed 8 --strands 100 --out " + p(dir / "b.data")).code, 0);
    EXPECT_EQ(file_bytes(dir / "a.data"), file_bytes(dir / "b.data"));
    ASSERT_EQ(run_cli("strands2fields --hair " + p(dir / "a.data") + " --res 24 --out " + p(dir / "v.bin")).code, 0);
    const std::string grow = "grow --volume " + p(dir / "v.bin") + " --scalp 50 --seed 3 --out ";
    ASSERT_EQ(run_cli(grow + p(dir / "g1.data")).code, 0);
    ASSERT_EQ(run_cli(grow + p(dir / "g2.data")).code, 0);
    EXPECT_EQ(file_bytes(dir / "g1.data"), file_bytes(dir / "g2.data"));
    EXPECT_EQ(run_cli("grow --volume " + p(dir / "v.bin") + " --scalp 50 --out " + p(dir / "g3.data")).code, 4);
}

// ---------------------------------------------------------------------------
// serve
// ---------------------------------------------------------------------------

TEST(CliServe, ConsensusOfThreeGroups) {
    QaFixture qa(1);
    Server server(qa.args());
    auto c = server.client();
    for (int g = 1; g <= 3; ++g) {
        const auto task = c.Get("/api/task?group=" + std::to_string(g));
        ASSERT_TRUE(task);
        ASSERT_EQ(task->status, 200);
        const auto t = json::parse(task->body);
        EXPECT_EQ(t["pairId"], "face#0");
        EXPECT_EQ(t["imageUrl"], "/images/face.png");
        EXPECT_EQ(t["p1"], json::array({0, 0}));
        const auto res = c.Post("/api/answer", answer("face#0", g, "RED"), "application/json");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 200);
        EXPECT_EQ(c.Get("/api/task?group=" + std::to_string(g))->status, 204);
    }
    const auto agg = c.Get("/api/aggregate");
    ASSERT_TRUE(agg);
    const auto label = records::parse_label(agg->body.substr(0, agg->body.find('\n')));
    EXPECT_TRUE(label.valid);
    EXPECT_EQ(label.r, 1);
    const auto stats = json::parse(c.Get("/api/stats")->body);
    EXPECT_EQ(stats["answered"], 3);
    EXPECT_EQ(stats["valid"], 1);
    EXPECT_EQ(stats["agreementRate"], 1.0);
    EXPECT_EQ(stats["medianElapsed"], 1.5);
    EXPECT_EQ(c.Get("/images/face.png")->status, 200);
}

TEST(CliServe, ErrorStatuses) {
    QaFixture qa;
    Server server(qa.args());
    auto c = server.client();
    ASSERT_EQ(c.Post("/api/answer", answer("face#1", 2, "BLUE"), "application/json")->status, 200);
    const std::string before = c.Get("/api/stats")->body;
    const std::string log = io::read_text(qa.state);
    EXPECT_EQ(c.Post("/api/answer", answer("face#1", 2, "RED"), "application/json")->status, 409);
    EXPECT_EQ(c.Get("/api/stats")->body, before);
    EXPECT_EQ(io::read_text(qa.state), log);
    EXPECT_EQ(c.Post("/api/answer", answer("face#99", 1, "RED"), "application/json")->status, 404);
    EXPECT_EQ(c.Post("/api/answer", "{not json", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/api/answer", answer("face#2", 1, "GREEN"), "application/json")->status, 400);
    EXPECT_EQ(c.Post("/api/answer", answer("face#2", 4, "RED"), "application/json")->status, 400);
    EXPECT_EQ(c.Post("/api/answer", R"({"pairId":"face#2","group":1})", "application/json")->status, 400);
    EXPECT_EQ(c.Get("/api/task?group=0")->status, 400);
    EXPECT_EQ(c.Get("/api/task")->status, 400);
}

TEST(CliServe, NoPairServedTwiceToOneGroupConcurrently) {
    QaFixture qa(5);
    Server server(qa.args());
    auto c = server.client();
    std::set<std::string> seen;
    for (int k = 0; k < 5; ++k) {
        const auto t = c.Get("/api/task?group=1");
        ASSERT_EQ(t->status, 200);
        EXPECT_TRUE(seen.insert(json::parse(t->body)["pairId"]).second);
    }
    // Every pair is leased to group 1; group 2 still sees all of them.
    EXPECT_EQ(c.Get("/api/task?group=1")->status, 204);
    EXPECT_EQ(c.Get("/api/task?group=2")->status, 200);
}

TEST(CliServe, KillAndRestartPreservesState) {
    QaFixture qa(6);
    std::string statsBefore, aggregateBefore;
    {
        Server server(qa.args());
        auto c = server.client();
        const char* choices[] = {"RED", "BLUE", "UNSURE"};
        for (int k = 0; k < 10; ++k) {
            const int g = 1 + k % 3;
            const auto t = c.Get("/api/task?group=" + std::to_string(g));
            ASSERT_EQ(t->status, 200);
            const std::string id = json::parse(t->body)["pairId"];
            ASSERT_EQ(c.Post("/api/answer", answer(id, g, choices[k % 2], 0.5 + k), "application/json")->status, 200);
        }
        statsBefore = c.Get("/api/stats")->body;
        aggregateBefore = c.Get("/api/aggregate")->body;
        server.kill_hard();
    }
    // A write interrupted mid-line leaves a partial record behind.
    {
        std::ofstream f(qa.state, std::ios::app);
        f << R"({"pairId":"face#5","groupId":3,"cho)";
    }
    Server server(qa.args());
    auto c = server.client();
    EXPECT_EQ(c.Get("/api/stats")->body, statsBefore);
    EXPECT_EQ(c.Get("/api/aggregate")->body, aggregateBefore);
    // Answered pairs are not served again, and new answers append cleanly.
    const auto t = c.Get("/api/task?group=1");
    ASSERT_EQ(t->status, 200);
    const std::string id = json::parse(t->body)["pairId"];
    ASSERT_EQ(c.Post("/api/answer", answer(id, 1, "RED"), "application/json")->status, 200);
    EXPECT_EQ(json::parse(c.Get("/api/stats")->body)["answered"], 11);
    server.kill_hard();
    EXPECT_EQ(records::read_jsonl<AnnotationAnswer>(qa.state, records::parse_answer).size(), 11u);
}

TEST(CliServe, PortFromEnvironment) {
    QaFixture qa;
    auto args = qa.args();
    args.resize(args.size() - 2);  // drop --port
    Server server(args, {"HAIRSTEP_PORT=0"});
    EXPECT_GT(server.port(), 0);
    EXPECT_EQ(server.client().Get("/api/stats")->status, 200);
}

TEST(CliServe, ServesUiDirectory) {
    QaFixture qa;
    fs::create_directories(qa.dir / "ui");
    io::write_text(qa.dir / "ui" / "index.html", "<html>qa</html>");
    auto args = qa.args();
    args.push_back("--ui-dir");
    args.push_back((qa.dir / "ui").string());
    Server server(args);
    const auto r = server.client().Get("/index.html");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->body, "<html>qa</html>");
}

TEST(CliServe, MissingPairsFileIsIoError) {
    TempDir dir;
    const auto r = run_cli("serve --images " + p(dir.path()) + " --pairs " + p(dir / "none.jsonl") + " --state " +
                            p(dir / "s.jsonl") + " --seed 1 --port 0");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("none.jsonl"), std::string::npos);
}
