#pragma once

// Force-direction glyphs: a uniform-length arrow aimed at the disc
// barycenter, a force-plane disc at its tip, isolines on the disc surface
// and a fading trajectory strip.

#include "spineviz/dataset.hpp"
#include "spineviz/geometry.hpp"
#include "spineviz/math.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spineviz {

inline constexpr double kForceEpsilon = 1e-9;  // N

struct GlyphConfig {
    double spacing = 0.5;
    double length = 12.0;            // L, mm; see glyph_length()
    double gap_ratio = 0.25;         // tip clearance from the barycenter, in L
    double plane_ratio = 0.8;        // plane radius, in L
    double visible_spacing = 0.15;   // arrows show only above this spacing
    double window = 0.5;             // trajectory window, s
    int isoline_levels = 5;
};

struct ForcePlane {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitY();
    Vec3 u = Vec3::UnitX();  // in-plane basis
    Vec3 v = Vec3::UnitZ();
    double radius = 0.0;

    friend bool operator==(const ForcePlane& a, const ForcePlane& b) {
        return a.center == b.center && a.normal == b.normal && a.u == b.u && a.v == b.v && a.radius == b.radius;
    }
};

struct TrajectorySample {
    double time = 0.0;
    Vec3 direction = Vec3::UnitY();  // unit
    Vec3 tip = Vec3::Zero();
};

struct TrajectoryStrip {
    // Quad j joins arrow segment j to segment j + 1:
    // (tail_j, tip_j, tip_j+1, tail_j+1).
    std::vector<std::array<Vec3, 4>> quads;
    std::vector<std::array<double, 4>> opacity;
    double swept_angle = 0.0;  // degrees

    bool empty() const noexcept { return quads.empty(); }
    friend bool operator==(const TrajectoryStrip& a, const TrajectoryStrip& b) {
        return a.quads == b.quads && a.opacity == b.opacity && a.swept_angle == b.swept_angle;
    }
};

struct ForceGlyph {
    std::string disc;
    double time = 0.0;
    bool visible = false;
    bool has_force = false;          // |f_local| >= epsilon
    Vec3 barycenter = Vec3::Zero();
    Vec3 local_force = Vec3::Zero();
    Vec3 direction = Vec3::Zero();   // unit, points toward the barycenter
    Vec3 tail = Vec3::Zero();
    Vec3 tip = Vec3::Zero();
    ForcePlane plane;
    IsolineSet isolines;
    TrajectoryStrip trajectory;
    std::optional<double> shear_angle;  // degrees, against the disc axis
};

// Arrow length shared by every glyph of a dataset: 1.5 x the mean radius of
// its disc meshes (mean vertex distance from the barycenter). 12 mm when no
// disc mesh exists.
double glyph_length(const SimulationDataset& dataset);

// f_local = phi^T f_global; the geometry is built in the disc's rest frame.
ForceGlyph build_glyph(const std::string& disc, const Mesh& disc_mesh, const Vec3& f_global, const Quat& phi,
                       double t, const GlyphConfig& config);

// Angle between f and -axis in degrees; nullopt when |f| < epsilon. Throws
// ParameterError if |axis| is not 1 within 1e-9.
std::optional<double> shear_angle(const Vec3& f, const Vec3& axis);

// Mean of the caudal vertebra's cranial endplate normal and the cranial
// vertebra's caudal endplate normal (flipped), both taken from faces whose
// normals lie within 45 degrees of the inter-barycenter direction. Falls
// back to that direction when a mesh has no such faces.
Vec3 disc_axis(const Mesh& cranial, const Mesh& caudal);

// Ruled strip over the samples inside [t - window, t]; opacity fades
// linearly from 1 at t to 0 at t - window. Fewer than two samples give an
// empty strip.
TrajectoryStrip trajectory_surface(const std::vector<TrajectorySample>& samples, double length, double t,
                                   double window);

// Rotation of a disc at tick k: slerp midpoint of its two vertebrae.
Quat disc_rotation(const SimulationDataset& dataset, const StructureRef& disc, std::size_t tick);

// Expansion offset of a disc (midway between its expanded vertebrae).
Vec3 disc_expansion(const SimulationDataset& dataset, const StructureRef& disc, double spacing);

// One glyph per disc with a force vector column and a mesh, at the tick
// nearest to t. Disc meshes are moved by their expansion offset first.
std::vector<ForceGlyph> build_glyphs(const SimulationDataset& dataset, double t, const GlyphConfig& config);

}  // namespace spineviz
