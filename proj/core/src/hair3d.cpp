#include "hairstep/hair3d.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <numbers>

#include <Eigen/Geometry>

#include "json.hpp"

#include "hairstep/io.hpp"
#include "hairstep/random.hpp"

namespace hairstep {

using nlohmann::json;

std::size_t HairModel::vertex_count() const {
    std::size_t n = 0;
    for (const auto& s : strands) n += s.points.size();
    return n;
}

void validate(const HairModel& model) {
    if (model.strands.empty()) throw InvalidInput("hair model has no strands");
    for (std::size_t i = 0; i < model.strands.size(); ++i) {
        const auto& pts = model.strands[i].points;
        if (pts.size() < 2) throw InvalidInput("strand " + std::to_string(i) + " has fewer than 2 points");
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (!pts[j].allFinite()) throw InvalidInput("strand " + std::to_string(i) + " has a non-finite point");
            if (j > 0 && pts[j] == pts[j - 1])
                throw InvalidInput("strand " + std::to_string(i) + " repeats point " + std::to_string(j));
        }
    }
}

// ---------------------------------------------------------------------------
// Strand file
// ---------------------------------------------------------------------------

namespace {

std::int32_t read_i32(const std::vector<char>& bytes, std::size_t& offset, const char* what) {
    if (bytes.size() - offset < 4) throw ParseError(std::string("truncated hair file: expected ") + what, offset);
    std::int32_t v;
    std::memcpy(&v, bytes.data() + offset, 4);
    offset += 4;
    return v;
}

}  // namespace

HairModel parse_hair(const std::vector<char>& bytes) {
    std::size_t offset = 0;
    const std::int32_t count = read_i32(bytes, offset, "strand count");
    if (count < 0) throw ParseError("negative strand count", 0);
    HairModel model;
    model.strands.reserve(static_cast<std::size_t>(count));
    for (std::int32_t s = 0; s < count; ++s) {
        const std::size_t header = offset;
        if (bytes.size() - offset < 4)
            throw ParseError("hair file declares " + std::to_string(count) + " strands but ends after " +
                                 std::to_string(s),
                             offset);
        const std::int32_t n = read_i32(bytes, offset, "vertex count");
        if (n < 0) throw ParseError("negative vertex count in strand " + std::to_string(s), header);
        const std::size_t need = static_cast<std::size_t>(n) * 12;
        if (bytes.size() - offset < need)
            throw ParseError("strand " + std::to_string(s) + " declares " + std::to_string(n) +
                                 " vertices but the file is truncated",
                             offset);
        Strand strand;
        strand.points.resize(static_cast<std::size_t>(n));
        for (auto& p : strand.points) {
            float xyz[3];
            std::memcpy(xyz, bytes.data() + offset, 12);
            offset += 12;
            p = Vec3f(xyz[0], xyz[1], xyz[2]);
        }
        model.strands.push_back(std::move(strand));
    }
    if (offset != bytes.size()) throw ParseError("trailing bytes after last strand", offset);
    return model;
}

std::vector<char> serialize_hair(const HairModel& model) {
    std::vector<char> out;
    out.reserve(4 + model.strands.size() * 4 + model.vertex_count() * 12);
    auto put = [&](const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        out.insert(out.end(), c, c + n);
    };
    const auto count = static_cast<std::int32_t>(model.strands.size());
    put(&count, 4);
    for (const auto& s : model.strands) {
        const auto n = static_cast<std::int32_t>(s.points.size());
        put(&n, 4);
        for (const auto& p : s.points) {
            const float xyz[3] = {p.x(), p.y(), p.z()};
            put(xyz, 12);
        }
    }
    return out;
}

HairModel read_hair(const std::filesystem::path& path) { return parse_hair(io::read_bytes(path)); }

void write_hair(const std::filesystem::path& path, const HairModel& model) {
    const auto bytes = serialize_hair(model);
    io::write_bytes(path, bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// VolumeGrid
// ---------------------------------------------------------------------------

VolumeGrid::VolumeGrid(std::array<int, 3> d, Box3 box) : dims(d), bbox(box) {
    if (d[0] <= 0 || d[1] <= 0 || d[2] <= 0) throw InvalidInput("volume dims must be positive");
    if (!((box.max.array() > box.min.array()).all())) throw InvalidInput("volume bbox is empty");
    const std::size_t n = static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
    occupancy.assign(n, 0.0f);
    orientation.assign(n, Vec3f::Zero());
}

Vec3 VolumeGrid::voxel_size() const {
    return (bbox.max - bbox.min).cwiseQuotient(Vec3(dims[0], dims[1], dims[2]));
}

Vec3 VolumeGrid::center(int x, int y, int z) const {
    return bbox.min + (Vec3(x, y, z) + Vec3::Constant(0.5)).cwiseProduct(voxel_size());
}

std::array<int, 3> VolumeGrid::cell_of(const Vec3& p) const {
    const Vec3 g = (p - bbox.min).cwiseQuotient(voxel_size());
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(std::floor(g[a])), 0, dims[static_cast<std::size_t>(a)] - 1);
    return c;
}

void validate(const VolumeGrid& grid) {
    if (grid.dims[0] <= 0 || grid.dims[1] <= 0 || grid.dims[2] <= 0) throw InvalidInput("volume dims must be positive");
    if (!((grid.bbox.max.array() > grid.bbox.min.array()).all())) throw InvalidInput("volume bbox is empty");
    const std::size_t n = static_cast<std::size_t>(grid.dims[0]) * static_cast<std::size_t>(grid.dims[1]) *
                          static_cast<std::size_t>(grid.dims[2]);
    if (grid.occupancy.size() != n || grid.orientation.size() != n) throw InvalidInput("volume storage size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        const float o = grid.occupancy[i];
        if (!(o >= 0.0f && o <= 1.0f)) throw InvalidInput("occupancy outside [0, 1] at voxel " + std::to_string(i));
        const float len = grid.orientation[i].norm();
        if (o >= 0.5f ? std::abs(len - 1.0f) > 1e-4f : len != 0.0f)
            throw InvalidInput("orientation invariant broken at voxel " + std::to_string(i));
    }
}

FieldBuildResult strands_to_fields(const HairModel& model, std::array<int, 3> dims, const Box3& bbox, double radius) {
    if (!(radius >= 0.0)) throw InvalidInput("strands_to_fields: radius must be >= 0");
    FieldBuildResult out{VolumeGrid(dims, bbox), {}};
    VolumeGrid& grid = out.grid;
    const Vec3 vs = grid.voxel_size();
    const double edge = vs.minCoeff();
    const double spacing = 0.5 * edge;
    const double r2 = radius * radius * edge * edge;
    const int reach = static_cast<int>(std::ceil(radius * edge / vs.minCoeff())) + 1;

    std::vector<Vec3> tangentSum(grid.voxel_count(), Vec3::Zero());
    std::vector<std::uint8_t> hit(grid.voxel_count(), 0);

    auto splat = [&](const Vec3& p, const Vec3& t) {
        const auto c = grid.cell_of(p);
        const std::size_t ci = grid.index(c[0], c[1], c[2]);
        hit[ci] = 1;
        tangentSum[ci] += t;
        if (radius <= 0.0) return;
        for (int dz = -reach; dz <= reach; ++dz)
            for (int dy = -reach; dy <= reach; ++dy)
                for (int dx = -reach; dx <= reach; ++dx) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
                    if (!grid.in_range(x, y, z)) continue;
                    if ((grid.center(x, y, z) - p).squaredNorm() > r2) continue;
                    const std::size_t i = grid.index(x, y, z);
                    hit[i] = 1;
                    tangentSum[i] += t;
                }
    };

    for (const auto& strand : model.strands) {
        std::vector<Vec3> pts;
        pts.reserve(strand.points.size());
        for (const auto& pf : strand.points) {
            const Vec3 p = pf.cast<double>();
            const Vec3 q = p.cwiseMax(bbox.min).cwiseMin(bbox.max);
            if (q != p) ++out.report.clampedPoints;
            pts.push_back(q);
        }
        for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
            const Vec3 seg = pts[j + 1] - pts[j];
            const double len = seg.norm();
            if (len <= 0.0) continue;
            const Vec3 t = seg / len;
            const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
            for (int k = 0; k < n; ++k) splat(pts[j] + seg * (static_cast<double>(k) / n), t);
            if (j + 2 == pts.size()) splat(pts[j + 1], t);
        }
    }

    std::deque<std::size_t> queue;
    std::vector<std::int64_t> source(grid.voxel_count(), -1);
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        if (!hit[i]) continue;
        grid.occupancy[i] = 1.0f;
        const double len = tangentSum[i].norm();
        if (len >= 1e-6) {
            grid.orientation[i] = (tangentSum[i] / len).cast<float>();
            source[i] = static_cast<std::int64_t>(i);
            queue.push_back(i);
        } else {
            out.report.degenerateVoxels.push_back(i);
        }
    }

    if (!out.report.degenerateVoxels.empty()) {
        // Nearest oriented voxel by breadth-first distance over the grid.
        const int nx = grid.dims[0], ny = grid.dims[1];
        while (!queue.empty()) {
            const std::size_t i = queue.front();
            queue.pop_front();
            const int x = static_cast<int>(i % static_cast<std::size_t>(nx));
            const int y = static_cast<int>((i / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
            const int z = static_cast<int>(i / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));
            const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
            for (const auto& o : nb) {
                if (!grid.in_range(x + o[0], y + o[1], z + o[2])) continue;
                const std::size_t j = grid.index(x + o[0], y + o[1], z + o[2]);
                if (source[j] >= 0) continue;
                source[j] = source[i];
                queue.push_back(j);
            }
        }
        for (const std::size_t i : out.report.degenerateVoxels)
            grid.orientation[i] = source[i] >= 0 ? grid.orientation[static_cast<std::size_t>(source[i])] : Vec3f::UnitZ();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<std::size_t> boundary_voxels(const VolumeGrid& grid) {
    std::vector<std::size_t> out;
    for (int z = 0; z < grid.dims[2]; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x) {
                const bool occ = grid.occupied(grid.index(x, y, z));
                const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
                for (const auto& o : nb) {
                    if (!grid.in_range(x + o[0], y + o[1], z + o[2])) continue;
                    if (grid.occupied(grid.index(x + o[0], y + o[1], z + o[2])) != occ) {
                        out.push_back(grid.index(x, y, z));
                        break;
                    }
                }
            }
    return out;
}

SampleResult sample_points(const VolumeGrid& grid, double surfaceBand, std::size_t n, std::uint64_t seed) {
    if (n % 2 != 0) throw InvalidInput("sample_points: n must be even");
    if (!(surfaceBand >= 0.0)) throw InvalidInput("sample_points: surfaceBand must be >= 0");
    Rng rng(seed);
    const Vec3 vs = grid.voxel_size();
    const double edge = vs.minCoeff();

    auto label = [&](const Vec3& p) {
        SamplePoint s{p, 0, Vec3::Zero()};
        const auto c = grid.cell_of(p);
        const std::size_t i = grid.index(c[0], c[1], c[2]);
        if (grid.occupied(i)) {
            s.occLabel = 1;
            s.orientLabel = grid.orientation[i].cast<double>();
        }
        return s;
    };

    SampleResult out;
    out.points.reserve(n);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const Vec3 u(rng.uniform(), rng.uniform(), rng.uniform());
        out.points.push_back(label(grid.bbox.min + u.cwiseProduct(grid.bbox.max - grid.bbox.min)));
    }
    out.uniformCount = n / 2;

    const std::vector<std::size_t> boundary = boundary_voxels(grid);
    if (boundary.empty()) {
        out.surfaceFallback = true;
        for (std::size_t k = 0; k < n / 2; ++k) {
            const Vec3 u(rng.uniform(), rng.uniform(), rng.uniform());
            out.points.push_back(label(grid.bbox.min + u.cwiseProduct(grid.bbox.max - grid.bbox.min)));
        }
        out.uniformCount = n;
        return out;
    }

    std::vector<std::array<int, 3>> offsets;
    const int reach = static_cast<int>(std::ceil(surfaceBand * edge / vs.minCoeff()));
    for (int dz = -reach; dz <= reach; ++dz)
        for (int dy = -reach; dy <= reach; ++dy)
            for (int dx = -reach; dx <= reach; ++dx)
                if (Vec3(dx, dy, dz).cwiseProduct(vs).norm() <= surfaceBand * edge + 1e-12) offsets.push_back({dx, dy, dz});

    std::vector<std::uint8_t> inBand(grid.voxel_count(), 0);
    const auto nx = static_cast<std::size_t>(grid.dims[0]), ny = static_cast<std::size_t>(grid.dims[1]);
    for (const std::size_t b : boundary) {
        const int x = static_cast<int>(b % nx), y = static_cast<int>((b / nx) % ny), z = static_cast<int>(b / (nx * ny));
        for (const auto& o : offsets)
            if (grid.in_range(x + o[0], y + o[1], z + o[2])) inBand[grid.index(x + o[0], y + o[1], z + o[2])] = 1;
    }
    std::vector<std::size_t> band;
    for (std::size_t i = 0; i < inBand.size(); ++i)
        if (inBand[i]) band.push_back(i);

    for (std::size_t k = 0; k < n / 2; ++k) {
        const std::size_t v = band[rng.index(band.size())];
        const int x = static_cast<int>(v % nx), y = static_cast<int>((v / nx) % ny), z = static_cast<int>(v / (nx * ny));
        const Vec3 corner = grid.bbox.min + Vec3(x, y, z).cwiseProduct(vs);
        const Vec3 u(rng.uniform(), rng.uniform(), rng.uniform());
        out.points.push_back(label(corner + u.cwiseProduct(vs)));
    }
    return out;
}

std::optional<FieldSample> trilinear_sample(const VolumeGrid& grid, const Vec3& p) {
    if (!p.allFinite() || !grid.bbox.contains(p)) return std::nullopt;
    const Vec3 g = (p - grid.bbox.min).cwiseQuotient(grid.voxel_size()) - Vec3::Constant(0.5);
    int i0[3], i1[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const int n = grid.dims[static_cast<std::size_t>(a)];
        const double c = std::clamp(g[a], 0.0, static_cast<double>(n - 1));
        i0[a] = std::min(static_cast<int>(std::floor(c)), std::max(n - 2, 0));
        i1[a] = std::min(i0[a] + 1, n - 1);
        f[a] = n == 1 ? 0.0 : c - i0[a];
    }
    FieldSample s;
    Vec3 blend = Vec3::Zero();
    for (int corner = 0; corner < 8; ++corner) {
        const int bx = corner & 1, by = (corner >> 1) & 1, bz = (corner >> 2) & 1;
        const double w = (bx ? f[0] : 1.0 - f[0]) * (by ? f[1] : 1.0 - f[1]) * (bz ? f[2] : 1.0 - f[2]);
        if (w == 0.0) continue;
        const std::size_t i = grid.index(bx ? i1[0] : i0[0], by ? i1[1] : i0[1], bz ? i1[2] : i0[2]);
        s.occupancy += w * grid.occupancy[i];
        blend += w * grid.orientation[i].cast<double>();
    }
    const double len = blend.norm();
    if (len >= 1e-6) s.orientation = blend / len;
    return s;
}

// ---------------------------------------------------------------------------
// Growing
// ---------------------------------------------------------------------------

GrowResult grow_strands(const VolumeGrid& grid, const std::vector<Root>& roots, const GrowParams& params) {
    const double step = params.step > 0.0 ? params.step : 0.5 * grid.voxel_size().minCoeff();
    if (!(params.occThreshold > 0.0 && params.occThreshold < 1.0)) throw InvalidInput("grow_strands: occThreshold must be in (0, 1)");
    if (!(params.inertia >= 0.0 && params.inertia <= 1.0)) throw InvalidInput("grow_strands: inertia must be in [0, 1]");
    if (params.maxSteps < 1) throw InvalidInput("grow_strands: maxSteps must be >= 1");

    GrowResult out;
    for (std::size_t r = 0; r < roots.size(); ++r) {
        Vec3 p = roots[r].position;
        const auto s0 = trilinear_sample(grid, p);
        if (!s0 || s0->occupancy < params.occThreshold || s0->orientation.isZero()) {
            out.skippedRoots.push_back(r);
            continue;
        }
        Vec3 prev = roots[r].direction;
        prev = prev.norm() > 1e-12 ? Vec3(prev.normalized()) : s0->orientation;

        Strand strand;
        strand.points.push_back(p.cast<float>());
        FieldSample here = *s0;
        for (int k = 0; k < params.maxSteps; ++k) {
            Vec3 o = here.orientation;
            if (o.isZero()) break;
            if (o.dot(prev) < 0.0) {
                o = -o;
                ++out.flips;
            }
            Vec3 d = params.inertia * prev + (1.0 - params.inertia) * o;
            d = d.norm() > 1e-12 ? Vec3(d.normalized()) : o;
            const Vec3 next = p + step * d;
            const auto s = trilinear_sample(grid, next);
            if (!s || s->occupancy < params.occThreshold) break;
            const Vec3f nf = next.cast<float>();
            if (nf == strand.points.back()) break;
            strand.points.push_back(nf);
            p = next;
            prev = d;
            here = *s;
        }
        if (strand.points.size() < 2) {
            out.skippedRoots.push_back(r);
            continue;
        }
        out.model.strands.push_back(std::move(strand));
    }
    return out;
}

std::vector<Root> roots_from_model(const HairModel& model) {
    std::vector<Root> roots;
    roots.reserve(model.strands.size());
    for (const auto& s : model.strands) {
        if (s.points.size() < 2) continue;
        const Vec3 a = s.points[0].cast<double>(), b = s.points[1].cast<double>();
        roots.push_back({a, (b - a).normalized()});
    }
    return roots;
}

std::vector<Root> hemisphere_scalp_roots(const Vec3& center, double radius, std::size_t count, double maxPolarDeg,
                                         std::uint64_t seed) {
    Rng rng(seed);
    const double cosMax = std::cos(maxPolarDeg * std::numbers::pi / 180.0);
    std::vector<Root> roots;
    roots.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double cosT = rng.uniform(cosMax, 1.0);
        const double sinT = std::sqrt(std::max(0.0, 1.0 - cosT * cosT));
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec3 n(sinT * std::cos(phi), cosT, sinT * std::sin(phi));
        roots.push_back({center + radius * n, n});
    }
    return roots;
}

namespace {

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-element array", 0);
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json parse_or_throw(const std::string& text, const std::filesystem::path& path) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
}

}  // namespace

std::vector<Root> read_roots(const std::filesystem::path& path) {
    const json j = parse_or_throw(io::read_text(path), path);
    std::vector<Root> roots;
    try {
        for (const auto& r : j.at("roots")) {
            Root root{vec3_from(r.at("position")), vec3_from(r.at("direction"))};
            if (!(root.direction.norm() > 0.0)) throw ParseError(path.string() + ": root direction is zero", 0);
            root.direction.normalize();
            roots.push_back(root);
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    return roots;
}

void write_roots(const std::filesystem::path& path, const std::vector<Root>& roots) {
    json arr = json::array();
    for (const auto& r : roots) arr.push_back({{"position", to_json(r.position)}, {"direction", to_json(r.direction)}});
    io::write_text(path, json{{"roots", arr}}.dump() + "\n");
}

void write_volume(const std::filesystem::path& binPath, const VolumeGrid& grid) {
    std::vector<float> raw;
    raw.reserve(grid.voxel_count() * 4);
    raw.insert(raw.end(), grid.occupancy.begin(), grid.occupancy.end());
    for (const auto& o : grid.orientation) {
        raw.push_back(o.x());
        raw.push_back(o.y());
        raw.push_back(o.z());
    }
    io::write_bytes(binPath, raw.data(), raw.size() * sizeof(float));
    const json header = {{"dims", grid.dims},
                         {"bbox", {{"min", to_json(grid.bbox.min)}, {"max", to_json(grid.bbox.max)}}}};
    io::write_text(io::sidecar_path(binPath), header.dump(2) + "\n");
}

VolumeGrid read_volume(const std::filesystem::path& binPath) {
    const auto headerPath = io::sidecar_path(binPath);
    const json header = parse_or_throw(io::read_text(headerPath), headerPath);
    std::array<int, 3> dims{};
    Box3 box;
    try {
        dims = header.at("dims").get<std::array<int, 3>>();
        box = {vec3_from(header.at("bbox").at("min")), vec3_from(header.at("bbox").at("max"))};
    } catch (const json::exception& e) {
        throw ParseError(headerPath.string() + ": " + e.what(), 0);
    }
    VolumeGrid grid(dims, box);
    const std::vector<char> bytes = io::read_bytes(binPath);
    const std::size_t n = grid.voxel_count();
    if (bytes.size() != n * 16)
        throw ParseError(binPath.string() + ": expected " + std::to_string(n * 16) + " bytes", std::min(bytes.size(), n * 16));
    std::memcpy(grid.occupancy.data(), bytes.data(), n * 4);
    for (std::size_t i = 0; i < n; ++i) {
        float xyz[3];
        std::memcpy(xyz, bytes.data() + n * 4 + i * 12, 12);
        grid.orientation[i] = Vec3f(xyz[0], xyz[1], xyz[2]);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Procedural wig
// ---------------------------------------------------------------------------

HairModel make_procedural_wig(const WigParams& params, std::uint64_t seed) {
    if (params.strands == 0 || params.segments < 1) throw InvalidInput("make_procedural_wig: empty wig requested");
    Rng rng(seed);
    const std::vector<Root> roots =
        hemisphere_scalp_roots(Vec3::Zero(), params.headRadius, params.strands, params.maxPolarDeg, rng.next());
    const double clearance = params.headRadius + 0.02;
    const Vec3 down(0.0, -1.0, 0.0);

    HairModel model;
    model.strands.reserve(params.strands);
    for (const auto& root : roots) {
        // Smooth per-strand bend: a random perpendicular that slowly rotates.
        Vec3 side = root.direction.cross(Vec3(rng.normal(), rng.normal(), rng.normal()));
        if (side.norm() < 1e-9) side = root.direction.unitOrthogonal();
        side.normalize();
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double freq = rng.uniform(0.1, 0.3);
        const double gravity = rng.uniform(0.08, 0.16);
        const double length = params.segmentLength * rng.uniform(0.85, 1.15);

        Strand s;
        Vec3 p = root.position;
        Vec3 dir = root.direction;
        s.points.push_back(p.cast<float>());
        for (int k = 0; k < params.segments; ++k) {
            dir = (dir + gravity * down + params.curl * 0.2 * std::sin(phase + freq * k) * side).normalized();
            Vec3 next = p + length * dir;
            if (next.norm() < clearance) next = next.normalized() * clearance;
            if ((next - p).norm() < 1e-6) break;
            dir = (next - p).normalized();
            p = next;
            s.points.push_back(p.cast<float>());
        }
        if (s.points.size() >= 2) model.strands.push_back(std::move(s));
    }
    return model;
}

}  // namespace hairstep
