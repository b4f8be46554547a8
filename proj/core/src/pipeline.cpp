#include "hairstep/pipeline.hpp"

#include <limits>

namespace hairstep {

Box3 bounding_cube(const HairModel& model, double padding) {
    validate(model);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& s : model.strands)
        for (const auto& p : s.points) {
            lo = lo.cwiseMin(p.cast<double>());
            hi = hi.cwiseMax(p.cast<double>());
        }
    const Vec3 c = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo).maxCoeff() + padding;
    return {c - Vec3::Constant(half), c + Vec3::Constant(half)};
}

ClosedLoopResult run_closed_loop(const HairModel& model, const Camera& cam, const ClosedLoopParams& params) {
    if (params.resolution < 2) throw InvalidInput("resolution must be >= 2");
    ClosedLoopResult r;
    r.original = render_hair(model, cam, params.render);
    const int n = params.resolution;
    auto fields = strands_to_fields(model, {n, n, n}, bounding_cube(model, params.padding), params.radius);
    r.fieldReport = std::move(fields.report);
    auto grown = grow_strands(fields.grid, roots_from_model(model), params.grow);
    r.skippedRoots = grown.skippedRoots.size();
    r.grown = std::move(grown.model);
    if (r.grown.strands.empty()) throw InvalidInput("no strand could be grown");
    r.regrown = render_hair(r.grown, cam, params.render);
    r.hairSale = hair_sale(r.regrown.strandMap, r.original.strandMap).value;
    r.iou = compute_iou(r.regrown.mask, r.original.mask);
    return r;
}

}  // namespace hairstep
