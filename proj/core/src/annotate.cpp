#include "hairstep/annotate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hairstep/random.hpp"

namespace hairstep {

namespace {

constexpr std::array<std::array<int, 2>, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

Rgb encode_direction(const Vec2& d) {
    return {1.0, std::clamp(d.x() / 2.0 + 0.5, 0.0, 1.0), std::clamp(d.y() / 2.0 + 0.5, 0.0, 1.0)};
}

template <typename Visit>
void bresenham(Pixel a, Pixel b, Visit&& visit) {
    const int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
    const int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    Pixel p = a;
    while (true) {
        visit(p);
        if (p == b) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            p.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            p.y += sy;
        }
    }
}

/// 4-connected components of `mask`; labels 0 off mask, 1..n on mask.
int label_components(const Mask& mask, Grid<int>& comp) {
    comp = Grid<int>(mask.width(), mask.height(), 0);
    int n = 0;
    std::vector<Pixel> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || comp(x, y)) continue;
            ++n;
            comp(x, y) = n;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                for (const auto& o : kNeighbors4) {
                    const Pixel q{p.x + o[0], p.y + o[1]};
                    if (mask.contains(q) && mask[q] && !comp[q]) {
                        comp[q] = n;
                        stack.push_back(q);
                    }
                }
            }
        }
    }
    return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Strokes
// ---------------------------------------------------------------------------

RasterizedStrokes rasterize_strokes(const StrokeSet& strokes, const Mask& mask) {
    if (strokes.strokes.empty()) throw InvalidInput("rasterize_strokes: no strokes");
    RasterizedStrokes out{StrandMap(mask.width(), mask.height(), kBackground), 0};

    for (const auto& stroke : strokes.strokes) {
        // Drop vertices that round onto the previous kept vertex.
        std::vector<Vec2> pts;
        std::vector<Pixel> px;
        for (const Vec2& p : stroke) {
            if (!p.allFinite()) continue;
            const Pixel q{static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y()))};
            if (!px.empty() && px.back() == q) continue;
            pts.push_back(p);
            px.push_back(q);
        }
        if (px.size() < 2) {
            ++out.skipped;
            continue;
        }

        std::vector<Vec2> segDir(px.size() - 1);
        for (std::size_t i = 0; i + 1 < px.size(); ++i) segDir[i] = (pts[i + 1] - pts[i]).normalized();

        int written = 0;
        auto put = [&](Pixel p, const Vec2& d) {
            if (!mask.contains(p) || !mask[p]) return;
            out.sparse[p] = encode_direction(d);
            ++written;
        };
        for (std::size_t i = 0; i + 1 < px.size(); ++i)
            bresenham(px[i], px[i + 1], [&](Pixel p) {
                if (p != px[i] && p != px[i + 1]) put(p, segDir[i]);
            });
        for (std::size_t i = 0; i < px.size(); ++i) {
            Vec2 t;
            if (i == 0) {
                t = segDir.front();
            } else if (i + 1 == px.size()) {
                t = segDir.back();
            } else {
                t = segDir[i - 1] + segDir[i];
                t = t.norm() > 1e-9 ? Vec2(t.normalized()) : segDir[i - 1];
            }
            put(px[i], t);
        }
        if (written == 0) ++out.skipped;
    }
    return out;
}

InterpolationResult interpolate_strand_map(const StrandMap& sparse, const Mask& mask) {
    require_same_shape(sparse, mask, "interpolate_strand_map");
    const int w = mask.width(), h = mask.height();

    Grid<int> comp;
    const int nComp = label_components(mask, comp);

    // Constraints: sparse mask pixels inside the hair mask.
    Grid<std::uint8_t> fixed(w, h, 0);
    DirectionField value(w, h, Vec2::Zero());
    std::vector<std::uint8_t> compConstrained(static_cast<std::size_t>(nComp) + 1, 0);
    std::vector<Pixel> sources;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y) || !on_mask(sparse(x, y))) continue;
            Vec2 d = raw_direction(sparse(x, y));
            if (d.norm() < 1e-9) continue;
            fixed(x, y) = 1;
            value(x, y) = d.normalized();
            compConstrained[static_cast<std::size_t>(comp(x, y))] = 1;
            sources.push_back({x, y});
        }
    }
    if (sources.empty()) throw InvalidInput("interpolate_strand_map: no constraint pixel inside the mask");

    // Unknowns: free pixels of constrained components.
    Grid<int> unknown(w, h, -1);
    std::vector<Pixel> unknowns;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask(x, y) && !fixed(x, y) && compConstrained[static_cast<std::size_t>(comp(x, y))]) {
                unknown(x, y) = static_cast<int>(unknowns.size());
                unknowns.push_back({x, y});
            }

    if (!unknowns.empty()) {
        const auto n = static_cast<Eigen::Index>(unknowns.size());
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(unknowns.size() * 5);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Pixel p = unknowns[static_cast<std::size_t>(i)];
            double degree = 0.0;
            for (const auto& o : kNeighbors4) {
                const Pixel q{p.x + o[0], p.y + o[1]};
                if (!mask.contains(q) || !mask[q]) continue;  // zero flux across the mask boundary
                degree += 1.0;
                if (fixed[q])
                    rhs.row(i) += value[q].transpose();
                else
                    triplets.emplace_back(i, unknown[q], -1.0);
            }
            triplets.emplace_back(i, i, degree);
        }
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
        if (solver.info() != Eigen::Success) throw InvalidInput("interpolate_strand_map: Laplace system is singular");
        const Eigen::MatrixXd sol = solver.solve(rhs);
        for (Eigen::Index i = 0; i < n; ++i) value[unknowns[static_cast<std::size_t>(i)]] = sol.row(i).transpose();
    }

    // Nearest constraint over the whole image grid (multi-source BFS); used
    // for unconstrained components and for cancelled directions.
    Grid<int> nearest(w, h, -1);
    {
        std::deque<Pixel> queue;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            nearest[sources[s]] = static_cast<int>(s);
            queue.push_back(sources[s]);
        }
        while (!queue.empty()) {
            const Pixel p = queue.front();
            queue.pop_front();
            for (const auto& o : kNeighbors4) {
                const Pixel q{p.x + o[0], p.y + o[1]};
                if (nearest.contains(q) && nearest[q] < 0) {
                    nearest[q] = nearest[p];
                    queue.push_back(q);
                }
            }
        }
    }

    InterpolationResult out{StrandMap(w, h, kBackground), {}};
    std::vector<std::uint8_t> reported(static_cast<std::size_t>(nComp) + 1, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const auto c = static_cast<std::size_t>(comp(x, y));
            Vec2 d = value(x, y);
            if (!compConstrained[c]) {
                if (!reported[c]) {
                    reported[c] = 1;
                    out.unconstrainedComponents.push_back({x, y});
                }
                d = value[sources[static_cast<std::size_t>(nearest(x, y))]];
            } else if (d.norm() < 1e-9) {
                d = value[sources[static_cast<std::size_t>(nearest(x, y))]];
            }
            out.dense(x, y) = encode_direction(d.normalized());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Super-pixels
// ---------------------------------------------------------------------------

int superpixel_target_count(std::size_t hairArea, std::size_t faceArea, double density) {
    if (!(density > 0.0)) throw InvalidInput("superpixels: density must be positive");
    const double base = static_cast<double>(hairArea) / density;
    const double scaled = faceArea > 0 ? static_cast<double>(hairArea) / static_cast<double>(faceArea) * base : base;
    const double k = std::max(2.0, std::round(scaled));
    return static_cast<int>(std::min(k, static_cast<double>(hairArea)));
}

std::vector<std::pair<int, int>> superpixel_adjacency(const Grid<int>& labels) {
    std::set<std::pair<int, int>> adj;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const int a = labels(x, y);
            if (a == 0) continue;
            if (x + 1 < labels.width()) {
                const int b = labels(x + 1, y);
                if (b != 0 && b != a) adj.insert({std::min(a, b), std::max(a, b)});
            }
            if (y + 1 < labels.height()) {
                const int b = labels(x, y + 1);
                if (b != 0 && b != a) adj.insert({std::min(a, b), std::max(a, b)});
            }
        }
    }
    return {adj.begin(), adj.end()};
}

namespace {

struct Center {
    double intensity;
    double x;
    double y;
};

/// Region bookkeeping for the connectivity pass: pixel lists per region id.
class Regions {
public:
    Regions(const Mask& mask, const Grid<int>& cluster) : id_(mask.width(), mask.height(), -1) {
        std::vector<Pixel> stack;
        for (int y = 0; y < mask.height(); ++y) {
            for (int x = 0; x < mask.width(); ++x) {
                if (!mask(x, y) || id_(x, y) >= 0) continue;
                const int r = static_cast<int>(pixels_.size());
                pixels_.emplace_back();
                id_(x, y) = r;
                stack.push_back({x, y});
                while (!stack.empty()) {
                    const Pixel p = stack.back();
                    stack.pop_back();
                    pixels_[static_cast<std::size_t>(r)].push_back(p);
                    for (const auto& o : kNeighbors4) {
                        const Pixel q{p.x + o[0], p.y + o[1]};
                        if (mask.contains(q) && mask[q] && id_[q] < 0 && cluster[q] == cluster[p]) {
                            id_[q] = r;
                            stack.push_back(q);
                        }
                    }
                }
            }
        }
        for (std::size_t r = 0; r < pixels_.size(); ++r) alive_.insert({pixels_[r].size(), static_cast<int>(r)});
    }

    std::size_t count() const { return alive_.size(); }

    /// Merges the smallest mergeable regions into their neighbours until
    /// `target` regions remain or nothing can be merged.
    void merge_down(std::size_t target) {
        std::set<int> isolated;
        while (alive_.size() - isolated.size() > 0 && alive_.size() > target) {
            auto it = alive_.begin();
            while (it != alive_.end() && isolated.count(it->second)) ++it;
            if (it == alive_.end()) break;
            const int r = it->second;
            std::map<int, int> border;
            for (const Pixel p : pixels_[static_cast<std::size_t>(r)])
                for (const auto& o : kNeighbors4) {
                    const Pixel q{p.x + o[0], p.y + o[1]};
                    if (id_.contains(q) && id_[q] >= 0 && id_[q] != r) ++border[id_[q]];
                }
            if (border.empty()) {
                isolated.insert(r);
                continue;
            }
            int into = border.begin()->first;
            for (const auto& [nb, len] : border)
                if (len > border[into]) into = nb;
            absorb(into, r);
        }
    }

    /// Splits the largest regions in two connected halves until `target`
    /// regions exist or every region is a single pixel.
    void split_up(std::size_t target) {
        while (alive_.size() < target) {
            const auto [size, r] = *alive_.rbegin();
            if (size < 2) break;
            split(r);
        }
    }

    Grid<int> labels() const {
        Grid<int> out(id_.width(), id_.height(), 0);
        std::unordered_map<int, int> relabel;
        for (int y = 0; y < id_.height(); ++y)
            for (int x = 0; x < id_.width(); ++x) {
                const int r = id_(x, y);
                if (r < 0) continue;
                auto [it, inserted] = relabel.try_emplace(r, static_cast<int>(relabel.size()) + 1);
                out(x, y) = it->second;
            }
        return out;
    }

private:
    void absorb(int into, int from) {
        auto& src = pixels_[static_cast<std::size_t>(from)];
        auto& dst = pixels_[static_cast<std::size_t>(into)];
        alive_.erase({src.size(), from});
        alive_.erase({dst.size(), into});
        for (const Pixel p : src) id_[p] = into;
        dst.insert(dst.end(), src.begin(), src.end());
        src.clear();
        alive_.insert({dst.size(), into});
    }

    std::vector<Pixel> bfs_order(int r, Pixel start) const {
        std::vector<Pixel> order{start};
        Grid<std::uint8_t> seen(id_.width(), id_.height(), 0);
        seen[start] = 1;
        for (std::size_t i = 0; i < order.size(); ++i)
            for (const auto& o : kNeighbors4) {
                const Pixel q{order[i].x + o[0], order[i].y + o[1]};
                if (id_.contains(q) && id_[q] == r && !seen[q]) {
                    seen[q] = 1;
                    order.push_back(q);
                }
            }
        return order;
    }

    void split(int r) {
        auto& px = pixels_[static_cast<std::size_t>(r)];
        const Pixel first = *std::min_element(px.begin(), px.end());
        // Double sweep: start from a peripheral pixel.
        const Pixel start = bfs_order(r, first).back();
        const std::vector<Pixel> order = bfs_order(r, start);
        const std::size_t half = order.size() / 2;

        const int fresh = static_cast<int>(pixels_.size());
        pixels_.emplace_back();
        alive_.erase({px.size(), r});
        for (std::size_t i = half; i < order.size(); ++i) id_[order[i]] = fresh;

        // The BFS prefix is connected; the remainder may not be. Keep its
        // largest component and hand the rest back to the prefix, which
        // touches every remainder piece.
        std::vector<std::vector<Pixel>> pieces;
        Grid<std::uint8_t> seen(id_.width(), id_.height(), 0);
        for (std::size_t i = half; i < order.size(); ++i) {
            if (seen[order[i]]) continue;
            pieces.emplace_back();
            std::vector<Pixel> stack{order[i]};
            seen[order[i]] = 1;
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                pieces.back().push_back(p);
                for (const auto& o : kNeighbors4) {
                    const Pixel q{p.x + o[0], p.y + o[1]};
                    if (id_.contains(q) && id_[q] == fresh && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        std::size_t keep = 0;
        for (std::size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].size() > pieces[keep].size()) keep = i;

        std::vector<Pixel> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (i == keep) continue;
            for (const Pixel p : pieces[i]) id_[p] = r;
            prefix.insert(prefix.end(), pieces[i].begin(), pieces[i].end());
        }
        px = std::move(prefix);
        pixels_[static_cast<std::size_t>(fresh)] = std::move(pieces[keep]);
        alive_.insert({px.size(), r});
        alive_.insert({pixels_[static_cast<std::size_t>(fresh)].size(), fresh});
    }

    Grid<int> id_;
    std::vector<std::vector<Pixel>> pixels_;
    std::set<std::pair<std::size_t, int>> alive_;
};

}  // namespace

SuperPixelMap generate_superpixels(const GrayImage& image, const Mask& hairMask, const Mask& faceMask,
                                   const SuperPixelParams& params) {
    require_same_shape(image, hairMask, "generate_superpixels");
    require_same_shape(hairMask, faceMask, "generate_superpixels");
    const std::size_t hairArea = count_set(hairMask);
    if (hairArea == 0) throw InvalidInput("generate_superpixels: empty hair mask");
    const int k = superpixel_target_count(hairArea, count_set(faceMask), params.density);

    std::vector<Pixel> hair;
    hair.reserve(hairArea);
    int minX = hairMask.width(), minY = hairMask.height(), maxX = -1, maxY = -1;
    for (int y = 0; y < hairMask.height(); ++y)
        for (int x = 0; x < hairMask.width(); ++x)
            if (hairMask(x, y)) {
                hair.push_back({x, y});
                minX = std::min(minX, x);
                maxX = std::max(maxX, x);
                minY = std::min(minY, y);
                maxY = std::max(maxY, y);
            }

    const double step = std::sqrt(static_cast<double>(hairArea) / k);
    auto feature = [&](Pixel p) { return Center{image[p] * 100.0, static_cast<double>(p.x), static_cast<double>(p.y)}; };

    // Seeds: regular grid over the hair bounding box, thinned or topped up
    // with seeded random hair pixels to exactly k.
    Rng rng(params.seed);
    std::vector<Pixel> seeds;
    std::set<Pixel> used;
    for (double gy = minY + step / 2.0; gy <= maxY + 0.5; gy += step)
        for (double gx = minX + step / 2.0; gx <= maxX + 0.5; gx += step) {
            const Pixel p{static_cast<int>(std::floor(gx)), static_cast<int>(std::floor(gy))};
            if (hairMask.contains(p) && hairMask[p] && used.insert(p).second) seeds.push_back(p);
        }
    while (seeds.size() > static_cast<std::size_t>(k)) {
        const auto i = rng.index(seeds.size());
        seeds.erase(seeds.begin() + static_cast<std::ptrdiff_t>(i));
    }
    while (seeds.size() < static_cast<std::size_t>(k)) {
        const Pixel p = hair[rng.index(hair.size())];
        if (used.insert(p).second) seeds.push_back(p);
    }

    std::vector<Center> centers;
    for (const Pixel p : seeds) centers.push_back(feature(p));

    const double m2 = params.compactness * params.compactness / (step * step);
    Grid<int> cluster(hairMask.width(), hairMask.height(), -1);
    Grid<double> best(hairMask.width(), hairMask.height(), 0.0);
    const int window = static_cast<int>(std::ceil(2.0 * step));
    for (int iter = 0; iter < std::max(1, params.iterations); ++iter) {
        std::fill(best.data().begin(), best.data().end(), std::numeric_limits<double>::infinity());
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const Center& cc = centers[c];
            const int x0 = std::max(0, static_cast<int>(std::floor(cc.x)) - window);
            const int x1 = std::min(hairMask.width() - 1, static_cast<int>(std::ceil(cc.x)) + window);
            const int y0 = std::max(0, static_cast<int>(std::floor(cc.y)) - window);
            const int y1 = std::min(hairMask.height() - 1, static_cast<int>(std::ceil(cc.y)) + window);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!hairMask(x, y)) continue;
                    const double di = image(x, y) * 100.0 - cc.intensity;
                    const double dx = x - cc.x, dy = y - cc.y;
                    const double d = di * di + m2 * (dx * dx + dy * dy);
                    if (d < best(x, y)) {
                        best(x, y) = d;
                        cluster(x, y) = static_cast<int>(c);
                    }
                }
        }
        // Pixels outside every window go to the spatially nearest center.
        for (const Pixel p : hair) {
            if (std::isfinite(best[p])) continue;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.size(); ++c) {
                const double dx = p.x - centers[c].x, dy = p.y - centers[c].y;
                if (dx * dx + dy * dy < bd) {
                    bd = dx * dx + dy * dy;
                    cluster[p] = static_cast<int>(c);
                }
            }
            best[p] = bd;
        }
        std::vector<Center> sum(centers.size(), Center{0, 0, 0});
        std::vector<std::size_t> members(centers.size(), 0);
        for (const Pixel p : hair) {
            const auto c = static_cast<std::size_t>(cluster[p]);
            const Center f = feature(p);
            sum[c].intensity += f.intensity;
            sum[c].x += f.x;
            sum[c].y += f.y;
            ++members[c];
        }
        for (std::size_t c = 0; c < centers.size(); ++c)
            if (members[c])
                centers[c] = {sum[c].intensity / members[c], sum[c].x / members[c], sum[c].y / members[c]};
    }

    Regions regions(hairMask, cluster);
    regions.merge_down(static_cast<std::size_t>(k));
    regions.split_up(static_cast<std::size_t>(k));

    SuperPixelMap out;
    out.labels = regions.labels();
    out.count = static_cast<int>(regions.count());
    out.adjacency = superpixel_adjacency(out.labels);
    return out;
}

// ---------------------------------------------------------------------------
// Pairs and answers
// ---------------------------------------------------------------------------

std::vector<PairSample> sample_pairs(const SuperPixelMap& sp, int perAdjacency, std::uint64_t seed,
                                     const std::string& imageId) {
    if (perAdjacency < 1) throw InvalidInput("sample_pairs: perAdjacency must be >= 1");
    std::vector<std::vector<Pixel>> members(static_cast<std::size_t>(sp.count) + 1);
    for (int y = 0; y < sp.labels.height(); ++y)
        for (int x = 0; x < sp.labels.width(); ++x) {
            const int l = sp.labels(x, y);
            if (l < 0 || l > sp.count) throw InvalidInput("sample_pairs: label out of range");
            if (l > 0) members[static_cast<std::size_t>(l)].push_back({x, y});
        }

    Rng rng(seed);
    std::vector<PairSample> out;
    out.reserve(sp.adjacency.size() * static_cast<std::size_t>(perAdjacency));
    for (const auto& [a, b] : sp.adjacency) {
        const auto& ma = members.at(static_cast<std::size_t>(a));
        const auto& mb = members.at(static_cast<std::size_t>(b));
        if (ma.empty() || mb.empty()) throw InvalidInput("sample_pairs: adjacency refers to an empty super-pixel");
        for (int n = 0; n < perAdjacency; ++n) {
            PairSample s;
            s.pairId = imageId + "#" + std::to_string(out.size());
            s.p1 = ma[rng.index(ma.size())];
            s.p2 = mb[rng.index(mb.size())];
            s.superPixels = {a, b};
            if (rng.coin()) {
                std::swap(s.p1, s.p2);
                std::swap(s.superPixels.first, s.superPixels.second);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::string image_id_of(const std::string& pairId) {
    const auto pos = pairId.rfind('#');
    return pos == std::string::npos ? pairId : pairId.substr(0, pos);
}

const char* to_string(Choice c) {
    switch (c) {
        case Choice::Red: return "RED";
        case Choice::Blue: return "BLUE";
        case Choice::Unsure: return "UNSURE";
    }
    return "UNSURE";
}

std::optional<Choice> parse_choice(const std::string& s) {
    if (s == "RED") return Choice::Red;
    if (s == "BLUE") return Choice::Blue;
    if (s == "UNSURE") return Choice::Unsure;
    return std::nullopt;
}

std::pair<std::vector<AggregatedLabel>, AggregationStats> aggregate_answers(const std::vector<AnnotationAnswer>& answers) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::array<std::optional<Choice>, kGroupCount>> byPair;
    std::vector<double> elapsed;
    elapsed.reserve(answers.size());
    for (const auto& a : answers) {
        if (a.groupId < 1 || a.groupId > kGroupCount)
            throw InvalidInput("aggregate_answers: group id must be 1..3 (pair " + a.pairId + ")");
        auto [it, inserted] = byPair.try_emplace(a.pairId);
        if (inserted) order.push_back(a.pairId);
        auto& slot = it->second[static_cast<std::size_t>(a.groupId - 1)];
        if (slot)
            throw InvalidInput("aggregate_answers: duplicate answer for pair " + a.pairId + " group " +
                               std::to_string(a.groupId));
        slot = a.choice;
        elapsed.push_back(a.elapsed);
    }

    std::vector<AggregatedLabel> labels;
    labels.reserve(order.size());
    AggregationStats stats;
    stats.answers = answers.size();
    std::size_t complete = 0;
    for (const auto& id : order) {
        const auto& g = byPair.at(id);
        AggregatedLabel label{id, 0, false};
        const bool all = g[0] && g[1] && g[2];
        if (all) {
            ++complete;
            if (*g[0] != Choice::Unsure && *g[0] == *g[1] && *g[1] == *g[2]) {
                label.valid = true;
                label.r = *g[0] == Choice::Red ? 1 : -1;
            }
        }
        stats.valid += label.valid;
        labels.push_back(std::move(label));
    }
    stats.pairs = order.size();
    stats.validFraction = stats.pairs ? static_cast<double>(stats.valid) / static_cast<double>(stats.pairs) : 0.0;
    stats.agreementRate = complete ? static_cast<double>(stats.valid) / static_cast<double>(complete) : 0.0;
    if (!elapsed.empty()) {
        std::sort(elapsed.begin(), elapsed.end());
        const std::size_t m = elapsed.size() / 2;
        stats.medianElapsed = elapsed.size() % 2 ? elapsed[m] : 0.5 * (elapsed[m - 1] + elapsed[m]);
    }
    return {std::move(labels), stats};
}

}  // namespace hairstep
