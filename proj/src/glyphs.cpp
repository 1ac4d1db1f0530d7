#include "spineviz/glyphs.hpp"

#include "spineviz/errors.hpp"
#include "spineviz/layout.hpp"

#include <algorithm>
#include <cmath>

namespace spineviz {
namespace {

constexpr double kDefaultLength = 12.0;
const double kEndplateCos = std::cos(kPi / 4.0);

double mean_radius(const Mesh& mesh) {
    const Vec3 c = barycenter(mesh);
    double sum = 0.0;
    for (const auto& v : mesh.vertices) {
        sum += (v - c).norm();
    }
    return sum / static_cast<double>(mesh.vertices.size());
}

// Area-weighted mean normal over faces within 45 degrees of `toward`.
std::optional<Vec3> endplate_normal(const Mesh& mesh, const Vec3& toward) {
    Vec3 sum = Vec3::Zero();
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
        const Vec3 n = face_normal(mesh, f);  // |n| = 2 * area
        const double len = n.norm();
        if (len > 0.0 && n.dot(toward) > kEndplateCos * len) {
            sum += n;
        }
    }
    if (sum.norm() <= 0.0) {
        return std::nullopt;
    }
    return sum.normalized();
}

Quat vertebra_rotation(const SimulationDataset& dataset, const std::string& id, std::size_t tick) {
    if (!dataset.kinematics) {
        return Quat::Identity();
    }
    const auto& track = *dataset.kinematics;
    const auto body = track.body_index(id);
    if (!body || track.rows() == 0) {
        return Quat::Identity();
    }
    return track.pose(std::min(tick, track.rows() - 1), *body).rotation;
}

double vertebra_drop(const SimulationDataset& dataset, const std::string& id, double spacing) {
    const auto i = dataset.registry.vertebra_index(id);
    return i ? static_cast<double>(*i) * std::clamp(spacing, 0.0, 1.0) * kExpansionGap : 0.0;
}

}  // namespace

double glyph_length(const SimulationDataset& dataset) {
    double sum = 0.0;
    int count = 0;
    for (const auto* ref : dataset.registry.of_kind(StructureKind::Disc)) {
        if (const Mesh* mesh = dataset.mesh(ref->id)) {
            sum += mean_radius(*mesh);
            ++count;
        }
    }
    return count > 0 ? 1.5 * sum / count : kDefaultLength;
}

ForceGlyph build_glyph(const std::string& disc, const Mesh& disc_mesh, const Vec3& f_global, const Quat& phi,
                       double t, const GlyphConfig& config) {
    ForceGlyph g;
    g.disc = disc;
    g.time = t;
    g.barycenter = barycenter(disc_mesh);
    g.local_force = to_local_force(f_global, phi);
    const double magnitude = g.local_force.norm();
    g.has_force = std::isfinite(magnitude) && magnitude >= kForceEpsilon;
    if (!g.has_force) {
        return g;
    }
    const double length = config.length;
    g.direction = g.local_force / magnitude;
    g.tip = g.barycenter - g.direction * (config.gap_ratio * length);
    g.tail = g.tip - g.direction * length;
    g.plane.center = g.tip;
    g.plane.normal = g.direction;
    g.plane.u = any_orthonormal(g.direction);
    g.plane.v = g.direction.cross(g.plane.u);
    g.plane.radius = config.plane_ratio * length;
    g.visible = config.spacing > config.visible_spacing;
    g.isolines = isolines(disc_mesh, g.barycenter, g.direction, config.isoline_levels);
    return g;
}

std::optional<double> shear_angle(const Vec3& f, const Vec3& axis) {
    if (std::abs(axis.norm() - 1.0) > 1e-9) {
        throw ParameterError("shear_angle: disc axis must be a unit vector");
    }
    const double n = f.norm();
    if (!(n >= kForceEpsilon)) {
        return std::nullopt;
    }
    const double c = std::clamp((f / n).dot(-axis), -1.0, 1.0);
    return radians_to_degrees(std::acos(c));
}

Vec3 disc_axis(const Mesh& cranial, const Mesh& caudal) {
    const Vec3 up = (barycenter(cranial) - barycenter(caudal)).normalized();
    const Vec3 lower = endplate_normal(caudal, up).value_or(up);
    const Vec3 upper = -endplate_normal(cranial, -up).value_or(-up);
    const Vec3 sum = lower + upper;
    return sum.norm() > 0.0 ? sum.normalized() : up;
}

TrajectoryStrip trajectory_surface(const std::vector<TrajectorySample>& samples, double length, double t,
                                   double window) {
    TrajectoryStrip strip;
    std::vector<const TrajectorySample*> in;
    for (const auto& s : samples) {
        if (s.time <= t && s.time >= t - window) {
            in.push_back(&s);
        }
    }
    if (in.size() < 2) {
        return strip;
    }
    auto fade = [&](double ts) { return window > 0.0 ? std::clamp(1.0 - (t - ts) / window, 0.0, 1.0) : 1.0; };
    for (std::size_t j = 0; j + 1 < in.size(); ++j) {
        const auto& a = *in[j];
        const auto& b = *in[j + 1];
        strip.quads.push_back({a.tip - a.direction * length, a.tip, b.tip, b.tip - b.direction * length});
        const double oa = fade(a.time);
        const double ob = fade(b.time);
        strip.opacity.push_back({oa, oa, ob, ob});
        const double c = std::clamp(a.direction.normalized().dot(b.direction.normalized()), -1.0, 1.0);
        strip.swept_angle += radians_to_degrees(std::acos(c));
    }
    return strip;
}

Quat disc_rotation(const SimulationDataset& dataset, const StructureRef& disc, std::size_t tick) {
    const Quat a = vertebra_rotation(dataset, disc.cranial, tick);
    const Quat b = vertebra_rotation(dataset, disc.caudal, tick);
    return a.slerp(0.5, b).normalized();
}

Vec3 disc_expansion(const SimulationDataset& dataset, const StructureRef& disc, double spacing) {
    const double drop =
        0.5 * (vertebra_drop(dataset, disc.cranial, spacing) + vertebra_drop(dataset, disc.caudal, spacing));
    return Vec3(0.0, -drop, 0.0);
}

std::vector<ForceGlyph> build_glyphs(const SimulationDataset& dataset, double t, const GlyphConfig& config) {
    std::vector<ForceGlyph> out;
    const ValueMatrix* forces = dataset.matrix(Attribute::ForceVector);
    if (forces == nullptr || forces->rows() == 0) {
        return out;
    }
    const auto& times = forces->times();
    const std::size_t k = snap_tick(times, t);
    const double tk = times[k];
    for (const auto* ref : dataset.registry.of_kind(StructureKind::Disc)) {
        const auto col = forces->column_index(ref->id);
        const Mesh* rest_mesh = dataset.mesh(ref->id);
        if (!col || rest_mesh == nullptr) {
            continue;
        }
        Mesh mesh = *rest_mesh;
        const Vec3 offset = disc_expansion(dataset, *ref, config.spacing);
        for (auto& v : mesh.vertices) {
            v += offset;
        }
        auto force_at = [&](std::size_t row) {
            return forces->missing(row, *col) ? Vec3::Zero().eval() : forces->vector_at(row, *col);
        };
        ForceGlyph g = build_glyph(ref->id, mesh, force_at(k), disc_rotation(dataset, *ref, k), tk, config);
        if (g.has_force) {
            const auto cranial = dataset.mesh(ref->cranial);
            const auto caudal = dataset.mesh(ref->caudal);
            const Vec3 axis = (cranial && caudal) ? disc_axis(*cranial, *caudal) : Vec3::UnitY().eval();
            g.shear_angle = shear_angle(g.local_force, axis);

            std::vector<TrajectorySample> samples;
            for (std::size_t j = 0; j <= k; ++j) {
                if (times[j] < tk - config.window) {
                    continue;
                }
                const Vec3 f = to_local_force(force_at(j), disc_rotation(dataset, *ref, j));
                const double n = f.norm();
                if (!(n >= kForceEpsilon)) {
                    continue;
                }
                const Vec3 d = f / n;
                samples.push_back({times[j], d, g.barycenter - d * (config.gap_ratio * config.length)});
            }
            g.trajectory = trajectory_surface(samples, config.length, tk, config.window);
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace spineviz
