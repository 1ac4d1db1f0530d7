#pragma once

#include "spineviz/dataset.hpp"
#include "spineviz/math.hpp"

#include <array>
#include <vector>

namespace spineviz {

// Force expressed in the fixed (rest) frame of the structure it acts on.
struct LocalForce {
    Vec3 global;
    Mat3 rotation;
    Vec3 local;
};

// Maps a global force into the structure frame: rotation^T * f.
// Throws FrameError if `rotation` deviates from a proper orthonormal matrix
// by more than 1e-6.
Vec3 to_local_force(const Vec3& f, const Mat3& rotation);
Vec3 to_local_force(const Vec3& f, const Quat& rotation);
LocalForce make_local_force(const Vec3& f, const Quat& rotation);

// Mean of the unique vertex positions; throws GeometryError on an empty mesh.
Vec3 barycenter(const Mesh& mesh);

// Unnormalized face normal from the triangle winding.
Vec3 face_normal(const Mesh& mesh, std::size_t triangle);

struct Edge {
    int a = 0;  // a < b
    int b = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Silhouette edges seen along `view_dir` (pointing from the mesh toward the
// viewer). A face front-faces iff n . v > 0; n . v == 0 counts as back-facing.
// An interior edge is a silhouette edge iff its faces disagree; a boundary
// edge iff its single face front-faces. Sorted ascending.
std::vector<Edge> silhouette(const Mesh& mesh, const Vec3& view_dir);

struct IsolineSet {
    Vec3 direction = Vec3::UnitY();
    Vec3 origin = Vec3::Zero();
    std::vector<double> levels;
    // polylines[i] traces the mesh/plane intersection at levels[i]; closed
    // loops repeat their first point at the end.
    std::vector<std::vector<std::vector<Vec3>>> polylines;

    bool empty() const noexcept { return levels.empty(); }
};

// Planar level sets of s(v) = (v - origin) . direction at `n_levels` values
// spaced evenly strictly inside [min s, max s]. Empty when the mesh is flat
// along `direction` (extent < 1e-6 mm).
IsolineSet isolines(const Mesh& mesh, const Vec3& origin, const Vec3& direction, int n_levels);

// Frontal-plane (x, y) convex hull of the mesh vertices, counter-clockwise.
std::vector<Point2> projected_outline(const Mesh& mesh);

}  // namespace spineviz
