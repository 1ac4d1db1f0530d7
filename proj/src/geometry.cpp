#include "spineviz/geometry.hpp"

#include "spineviz/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace spineviz {
namespace {

constexpr double kFrameTolerance = 1e-6;
constexpr double kFlatExtent = 1e-6;

using Key = std::tuple<double, double, double>;

Key key_of(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

// Maps every vertex to the first vertex sharing its exact position.
std::vector<int> canonical_vertices(const Mesh& mesh) {
    std::map<Key, int> first;
    std::vector<int> out(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        out[i] = first.emplace(key_of(mesh.vertices[i]), static_cast<int>(i)).first->second;
    }
    return out;
}

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Vec3 to_local_force(const Vec3& f, const Mat3& rotation) {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= kFrameTolerance) || !(std::abs(rotation.determinant() - 1.0) <= kFrameTolerance)) {
        throw FrameError("rotation is not proper orthonormal (deviation " + std::to_string(ortho) + ")");
    }
    return rotation.transpose() * f;
}

Vec3 to_local_force(const Vec3& f, const Quat& rotation) {
    return to_local_force(f, rotation.normalized().toRotationMatrix());
}

LocalForce make_local_force(const Vec3& f, const Quat& rotation) {
    const Mat3 r = rotation.normalized().toRotationMatrix();
    return {f, r, to_local_force(f, r)};
}

Vec3 barycenter(const Mesh& mesh) {
    if (mesh.vertices.empty()) {
        throw GeometryError("barycenter of an empty mesh");
    }
    std::set<Key> seen;
    Vec3 sum = Vec3::Zero();
    for (const auto& v : mesh.vertices) {
        if (seen.insert(key_of(v)).second) {
            sum += v;
        }
    }
    return sum / static_cast<double>(seen.size());
}

Vec3 face_normal(const Mesh& mesh, std::size_t triangle) {
    const auto& t = mesh.triangles[triangle];
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
    return (b - a).cross(c - a);
}

std::vector<Edge> silhouette(const Mesh& mesh, const Vec3& view_dir) {
    const auto canon = canonical_vertices(mesh);
    // edge -> (front-facing count, back-facing count)
    std::map<Edge, std::pair<int, int>> faces;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
        const bool front = face_normal(mesh, f).dot(view_dir) > 0.0;
        const auto& t = mesh.triangles[f];
        for (int k = 0; k < 3; ++k) {
            const Edge e = make_edge(canon[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])],
                                     canon[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])]);
            auto& counts = faces[e];
            (front ? counts.first : counts.second) += 1;
        }
    }
    std::vector<Edge> out;
    for (const auto& [e, counts] : faces) {
        const int total = counts.first + counts.second;
        const bool boundary_front = total == 1 && counts.first == 1;
        const bool disagree = total >= 2 && counts.first > 0 && counts.second > 0;
        if (boundary_front || disagree) {
            out.push_back(e);
        }
    }
    return out;
}

IsolineSet isolines(const Mesh& mesh, const Vec3& origin, const Vec3& direction, int n_levels) {
    if (n_levels < 1) {
        throw ParameterError("isolines: n_levels must be at least 1");
    }
    if (!(std::abs(direction.norm() - 1.0) <= 1e-9)) {
        throw ParameterError("isolines: direction must be a unit vector");
    }
    IsolineSet set;
    set.direction = direction;
    set.origin = origin;
    if (mesh.vertices.empty()) {
        return set;
    }
    std::vector<double> s(mesh.vertices.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = (mesh.vertices[i] - origin).dot(direction);
    }
    const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi - lo < kFlatExtent) {
        return set;
    }
    const auto canon = canonical_vertices(mesh);

    for (int k = 0; k < n_levels; ++k) {
        const double level = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(n_levels + 1);
        set.levels.push_back(level);

        // Crossing points keyed by the mesh edge they lie on, so neighbouring
        // triangles weld onto the same point.
        std::map<Edge, Vec3> points;
        std::map<Edge, std::vector<Edge>> adjacency;
        auto crossing = [&](int a, int b) {
            Edge e = make_edge(canon[static_cast<std::size_t>(a)], canon[static_cast<std::size_t>(b)]);
            // A vertex lying exactly on the level is shared by every edge through it.
            if (s[static_cast<std::size_t>(e.a)] == level) {
                e = Edge{e.a, e.a};
            } else if (s[static_cast<std::size_t>(e.b)] == level) {
                e = Edge{e.b, e.b};
            }
            if (!points.contains(e)) {
                const Vec3& pa = mesh.vertices[static_cast<std::size_t>(e.a)];
                const Vec3& pb = mesh.vertices[static_cast<std::size_t>(e.b)];
                const double sa = s[static_cast<std::size_t>(e.a)];
                const double sb = s[static_cast<std::size_t>(e.b)];
                const double t = e.a == e.b ? 0.0 : (level - sa) / (sb - sa);
                points.emplace(e, pa + t * (pb - pa));
            }
            return e;
        };
        for (const auto& tri : mesh.triangles) {
            std::vector<Edge> hits;
            for (int j = 0; j < 3; ++j) {
                const int a = tri[static_cast<std::size_t>(j)];
                const int b = tri[static_cast<std::size_t>((j + 1) % 3)];
                const bool above_a = s[static_cast<std::size_t>(a)] > level;
                const bool above_b = s[static_cast<std::size_t>(b)] > level;
                if (above_a != above_b) {
                    hits.push_back(crossing(a, b));
                }
            }
            if (hits.size() == 2 && !(hits[0] == hits[1])) {
                adjacency[hits[0]].push_back(hits[1]);
                adjacency[hits[1]].push_back(hits[0]);
            }
        }

        std::vector<std::vector<Vec3>> lines;
        std::set<std::pair<Edge, Edge>> used;
        auto segment_key = [](Edge a, Edge b) { return a < b ? std::pair{a, b} : std::pair{b, a}; };
        auto walk = [&](Edge start) {
            std::vector<Vec3> line{points.at(start)};
            Edge cur = start;
            for (;;) {
                bool advanced = false;
                for (const Edge& next : adjacency[cur]) {
                    if (used.insert(segment_key(cur, next)).second) {
                        line.push_back(points.at(next));
                        cur = next;
                        advanced = true;
                        break;
                    }
                }
                if (!advanced) break;
            }
            if (line.size() >= 2) lines.push_back(std::move(line));
        };
        // Open chains start at odd-degree nodes; the rest are loops.
        for (const auto& [node, nbrs] : adjacency) {
            if (nbrs.size() % 2 == 1) walk(node);
        }
        for (const auto& [node, nbrs] : adjacency) {
            for (const Edge& n : nbrs) {
                if (!used.contains(segment_key(node, n))) {
                    walk(node);
                    break;
                }
            }
        }
        set.polylines.push_back(std::move(lines));
    }
    return set;
}

std::vector<Point2> projected_outline(const Mesh& mesh) {
    std::vector<Point2> pts;
    pts.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) {
        pts.push_back({v.x(), v.y()});
    }
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        return pts;
    }
    auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace spineviz
