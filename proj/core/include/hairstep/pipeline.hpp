#pragma once

#include <cstdint>

#include "hairstep/hair3d.hpp"
#include "hairstep/metrics.hpp"
#include "hairstep/render.hpp"

namespace hairstep {

struct ClosedLoopParams {
    int resolution = 128;
    /// Voxelization radius in voxel edges.
    double radius = 1.5;
    /// Box padding around the model bounds, canonical units.
    double padding = 0.05;
    GrowParams grow;
    RenderParams render;
};

struct ClosedLoopResult {
    RenderOutput original;
    RenderOutput regrown;
    HairModel grown;
    FieldBuildReport fieldReport;
    std::size_t skippedRoots = 0;
    std::optional<double> hairSale;
    double iou = 0.0;
};

/// Axis-aligned cube enclosing the model, grown by `padding`.
Box3 bounding_cube(const HairModel& model, double padding);

/// Renders `model`, voxelizes it, regrows it from its own roots, renders the
/// result with the same camera and compares the two renders.
ClosedLoopResult run_closed_loop(const HairModel& model, const Camera& cam, const ClosedLoopParams& params = {});

}  // namespace hairstep
