#include "spineviz/simkernel.hpp"

#include "spineviz/errors.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace spineviz {
namespace {

constexpr double kDivergenceLimit = 1e6;  // mm from rest, or mm/s

Mat3 skew(const Vec3& a) {
    Mat3 m;
    m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
    return m;
}

Vec3 rotation_vector(Quat q) {
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s == 0.0) {
        return Vec3::Zero();
    }
    return 2.0 * std::atan2(s, q.w()) * v / s;
}

// Rest-pose quantities of one joint, derived from the model.
struct JointFrame {
    std::size_t cranial = 0;
    std::size_t caudal = 0;
    Vec3 arm_cranial;  // attachment in body frame
    Vec3 arm_caudal;
    Vec3 rest_offset;  // residual of the displacement expression at rest, caudal frame
    Quat rest_relative;
};

struct FacetFrame {
    std::size_t cranial = 0;
    std::size_t caudal = 0;
    Vec3 arm_cranial[2];  // [left, right]
    Vec3 arm_caudal[2];
    Vec3 normal_local;  // caudal frame
    double rest_separation[2] = {0.0, 0.0};
};

Vec3 joint_displacement(const JointFrame& jf, const BodyState& a, const BodyState& b, Vec3* arm_a, Vec3* arm_b) {
    const Mat3 ra = a.orientation.toRotationMatrix();
    const Mat3 rb = b.orientation.toRotationMatrix();
    *arm_a = ra * jf.arm_cranial;
    *arm_b = rb * jf.arm_caudal;
    return rb.transpose() * ((a.position + *arm_a) - (b.position + *arm_b)) - jf.rest_offset;
}

double facet_separation(const FacetFrame& ff, int side, const BodyState& a, const BodyState& b, Vec3* arm_a,
                        Vec3* arm_b, Vec3* normal) {
    const Mat3 ra = a.orientation.toRotationMatrix();
    const Mat3 rb = b.orientation.toRotationMatrix();
    *arm_a = ra * ff.arm_cranial[side];
    *arm_b = rb * ff.arm_caudal[side];
    *normal = rb * ff.normal_local;
    return ff.normal_local.dot(rb.transpose() * ((a.position + *arm_a) - (b.position + *arm_b)));
}

struct Frames {
    std::vector<JointFrame> joints;
    std::vector<FacetFrame> facets;
};

Frames build_frames(const SpineModel& model) {
    Frames frames;
    const SimState rest = rest_state(model);
    for (const auto& j : model.joints) {
        JointFrame jf;
        jf.cranial = model.body_index(j.cranial);
        jf.caudal = model.body_index(j.caudal);
        const auto& a = model.bodies[jf.cranial];
        const auto& b = model.bodies[jf.caudal];
        const Vec3 center = 0.5 * (a.rest_position + b.rest_position);
        jf.arm_cranial = a.rest_orientation.conjugate() * (center - a.rest_position);
        jf.arm_caudal = b.rest_orientation.conjugate() * (center - b.rest_position);
        jf.rest_offset = Vec3::Zero();
        Vec3 arm_a;
        Vec3 arm_b;
        jf.rest_offset =
            joint_displacement(jf, rest.bodies[jf.cranial], rest.bodies[jf.caudal], &arm_a, &arm_b);
        jf.rest_relative = b.rest_orientation.conjugate() * a.rest_orientation;
        frames.joints.push_back(jf);
    }
    for (const auto& f : model.facets) {
        FacetFrame ff;
        ff.cranial = model.body_index(f.cranial);
        ff.caudal = model.body_index(f.caudal);
        const auto& a = model.bodies[ff.cranial];
        const auto& b = model.bodies[ff.caudal];
        const Vec3 center = 0.5 * (a.rest_position + b.rest_position);
        for (int side = 0; side < 2; ++side) {
            const double sign = side == 0 ? 1.0 : -1.0;
            const Vec3 point = center + Vec3(sign * f.lateral_offset, 0.0, -f.posterior_offset);
            ff.arm_cranial[side] = a.rest_orientation.conjugate() * (point - a.rest_position);
            ff.arm_caudal[side] = b.rest_orientation.conjugate() * (point - b.rest_position);
        }
        ff.normal_local = b.rest_orientation.conjugate() * Vec3::UnitY();
        for (int side = 0; side < 2; ++side) {
            Vec3 arm_a;
            Vec3 arm_b;
            Vec3 n;
            ff.rest_separation[side] =
                facet_separation(ff, side, rest.bodies[ff.cranial], rest.bodies[ff.caudal], &arm_a, &arm_b, &n);
        }
        frames.facets.push_back(ff);
    }
    return frames;
}

struct Loads {
    std::vector<Vec3> force;   // N, excluding gravity and damping
    std::vector<Vec3> torque;  // N*mm
};

void check_finite(const SpineModel& model, const SimState& state) {
    for (std::size_t i = 0; i < state.bodies.size(); ++i) {
        const auto& b = state.bodies[i];
        const bool finite = b.position.allFinite() && b.orientation.coeffs().allFinite() &&
                            b.velocity.allFinite() && b.angular_velocity.allFinite();
        const bool bounded = finite && (b.position - model.bodies[i].rest_position).norm() < kDivergenceLimit &&
                             b.velocity.norm() < kDivergenceLimit * 1e3 &&
                             b.angular_velocity.norm() < kDivergenceLimit;
        if (!bounded) {
            throw DivergenceError(model.bodies[i].id, state.time);
        }
    }
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw FormatError("expected a three-component array");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t SpineModel::body_index(const std::string& id) const {
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (bodies[i].id == id) {
            return i;
        }
    }
    throw ParameterError("unknown body '" + id + "'");
}

void SpineModel::validate() const {
    if (bodies.empty()) {
        throw ParameterError("model has no bodies");
    }
    for (const auto& b : bodies) {
        if (!(b.mass > 0.0) || !(b.inertia > 0.0)) {
            throw ParameterError("body '" + b.id + "' needs positive mass and inertia");
        }
        if (!(b.half_width > 0.0) || !(b.half_depth > 0.0) || !(b.height > 0.0)) {
            throw ParameterError("body '" + b.id + "' needs positive extents");
        }
    }
    auto check_pair = [&](const std::string& a, const std::string& b) {
        if (body_index(b) != body_index(a) + 1) {
            throw ParameterError("joint " + a + "/" + b + " does not connect adjacent bodies");
        }
    };
    for (const auto& j : joints) {
        check_pair(j.cranial, j.caudal);
        if ((j.stiffness.array() < 0.0).any() || j.rotational_stiffness < 0.0 || j.damping < 0.0 ||
            j.rotational_damping < 0.0) {
            throw ParameterError("joint " + j.cranial + "/" + j.caudal + " has negative coefficients");
        }
    }
    for (const auto& f : facets) {
        check_pair(f.cranial, f.caudal);
        if (f.stiffness < 0.0 || f.gap < 0.0) {
            throw ParameterError("facet " + f.cranial + "/" + f.caudal + " has negative coefficients");
        }
    }
}

Vec3 Scenario::external_force_at(double t) const {
    if (external_force.empty()) {
        return Vec3::Zero();
    }
    if (t <= external_force.front().time) {
        return external_force.front().force;
    }
    for (std::size_t i = 1; i < external_force.size(); ++i) {
        const auto& a = external_force[i - 1];
        const auto& b = external_force[i];
        if (t <= b.time) {
            const double u = (t - a.time) / (b.time - a.time);
            return a.force + u * (b.force - a.force);
        }
    }
    return external_force.back().force;
}

double degeneration_factor(int degree) {
    if (degree < 1 || degree > 5) {
        throw ParameterError("degeneration degree must be in 1..5, got " + std::to_string(degree));
    }
    return 1.0 / (1.0 + 0.35 * static_cast<double>(degree - 1));
}

SpineModel apply_degeneration(const SpineModel& model, const std::map<std::string, int>& degrees) {
    SpineModel out = model;
    for (const auto& [disc, degree] : degrees) {
        const double k = degeneration_factor(degree);
        bool found = false;
        for (auto& j : out.joints) {
            if (j.disc && disc_id(j.cranial, j.caudal) == disc) {
                if (degree != 1) {
                    j.stiffness *= k;
                    j.rotational_stiffness *= k;
                }
                found = true;
            }
        }
        if (!found) {
            throw ParameterError("degeneration given for unknown disc '" + disc + "'");
        }
    }
    return out;
}

SimState rest_state(const SpineModel& model) {
    SimState s;
    s.bodies.reserve(model.bodies.size());
    for (const auto& b : model.bodies) {
        BodyState bs;
        bs.position = b.rest_position;
        bs.orientation = b.rest_orientation;
        s.bodies.push_back(bs);
    }
    return s;
}

namespace {

Loads accumulate_loads(const SpineModel& model, const Frames& frames, const SimState& state,
                       const Vec3& external_force) {
    const std::size_t n = model.bodies.size();
    Loads loads{std::vector<Vec3>(n, Vec3::Zero()), std::vector<Vec3>(n, Vec3::Zero())};
    loads.force[0] += external_force;
    loads.torque[0] += (state.bodies[0].orientation * model.load_offset).cross(external_force);

    for (std::size_t k = 0; k < model.joints.size(); ++k) {
        const auto& spec = model.joints[k];
        const auto& jf = frames.joints[k];
        const auto& a = state.bodies[jf.cranial];
        const auto& b = state.bodies[jf.caudal];
        Vec3 arm_a;
        Vec3 arm_b;
        const Vec3 d = joint_displacement(jf, a, b, &arm_a, &arm_b);
        const Mat3 rb = b.orientation.toRotationMatrix();
        const Vec3 f = -(rb * spec.stiffness.cwiseProduct(d));
        loads.force[jf.cranial] += f;
        loads.force[jf.caudal] -= f;
        loads.torque[jf.cranial] += arm_a.cross(f);
        loads.torque[jf.caudal] -= arm_b.cross(f);

        const Quat err = (b.orientation.conjugate() * a.orientation) * jf.rest_relative.conjugate();
        const Vec3 tau = rb * (-spec.rotational_stiffness * rotation_vector(err));
        loads.torque[jf.cranial] += tau;
        loads.torque[jf.caudal] -= tau;
    }
    for (std::size_t k = 0; k < model.facets.size(); ++k) {
        const auto& spec = model.facets[k];
        const auto& ff = frames.facets[k];
        const auto& a = state.bodies[ff.cranial];
        const auto& b = state.bodies[ff.caudal];
        for (int side = 0; side < 2; ++side) {
            Vec3 arm_a;
            Vec3 arm_b;
            Vec3 normal;
            const double sep = facet_separation(ff, side, a, b, &arm_a, &arm_b, &normal);
            const double gap = spec.gap + (sep - ff.rest_separation[side]);
            if (gap < 0.0) {
                const Vec3 f = spec.stiffness * (-gap) * normal;
                loads.force[ff.cranial] += f;
                loads.force[ff.caudal] -= f;
                loads.torque[ff.cranial] += arm_a.cross(f);
                loads.torque[ff.caudal] -= arm_b.cross(f);
            }
        }
    }
    return loads;
}

}  // namespace

SimState step(const SpineModel& model, const SimState& state, double dt, const Vec3& gravity,
              const Vec3& external_force) {
    if (!(dt > 0.0)) {
        throw ParameterError("step: dt must be positive");
    }
    const Frames frames = build_frames(model);
    const std::size_t n = model.bodies.size();
    const Loads loads = accumulate_loads(model, frames, state, external_force);

    auto is_free = [&](std::size_t i) { return !(model.anchor_caudal && i + 1 == n && n > 1); };

    SimState next = state;
    next.time = state.time + dt;

    // Explicit update with every load except damping.
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_free(i)) continue;
        const auto& body = model.bodies[i];
        auto& s = next.bodies[i];
        s.velocity = state.bodies[i].velocity + dt * (gravity + 1000.0 * loads.force[i] / body.mass);
        s.angular_velocity = state.bodies[i].angular_velocity + dt * (1000.0 * loads.torque[i] / body.inertia);
    }

    // Joint damping, implicit in the new velocities:
    // (M + dt C) u' = M u*, with C assembled from the joint Jacobians.
    bool damped = false;
    for (const auto& j : model.joints) {
        damped = damped || j.damping > 0.0 || j.rotational_damping > 0.0;
    }
    if (damped) {
        std::vector<int> slot(n, -1);
        int free_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_free(i)) slot[i] = free_count++;
        }
        const Eigen::Index dim = 6 * free_count;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd rhs(dim);
        for (std::size_t i = 0; i < n; ++i) {
            if (slot[i] < 0) continue;
            const Eigen::Index o = 6 * slot[i];
            const double m = model.bodies[i].mass / 1000.0;
            const double inertia = model.bodies[i].inertia / 1000.0;
            a.block<3, 3>(o, o).diagonal().setConstant(m);
            a.block<3, 3>(o + 3, o + 3).diagonal().setConstant(inertia);
            rhs.segment<3>(o) = m * next.bodies[i].velocity;
            rhs.segment<3>(o + 3) = inertia * next.bodies[i].angular_velocity;
        }
        for (std::size_t k = 0; k < model.joints.size(); ++k) {
            const auto& spec = model.joints[k];
            const auto& jf = frames.joints[k];
            const Mat3 ra = state.bodies[jf.cranial].orientation.toRotationMatrix();
            const Mat3 rb = state.bodies[jf.caudal].orientation.toRotationMatrix();
            // Relative attachment velocity = sum over bodies of J_b * u_b.
            Eigen::Matrix<double, 3, 6> jt[2];
            jt[0] << Mat3::Identity(), -skew(ra * jf.arm_cranial);
            jt[1] << -Mat3::Identity(), skew(rb * jf.arm_caudal);
            Eigen::Matrix<double, 3, 6> jr[2];
            jr[0] << Mat3::Zero(), Mat3::Identity();
            jr[1] << Mat3::Zero(), -Mat3::Identity();
            const int slots[2] = {slot[jf.cranial], slot[jf.caudal]};
            for (int p = 0; p < 2; ++p) {
                for (int q = 0; q < 2; ++q) {
                    if (slots[p] < 0 || slots[q] < 0) continue;
                    a.block<6, 6>(6 * slots[p], 6 * slots[q]) +=
                        dt * (spec.damping * jt[p].transpose() * jt[q] +
                              spec.rotational_damping * jr[p].transpose() * jr[q]);
                }
            }
        }
        const Eigen::VectorXd u = a.llt().solve(rhs);
        for (std::size_t i = 0; i < n; ++i) {
            if (slot[i] < 0) continue;
            next.bodies[i].velocity = u.segment<3>(6 * slot[i]);
            next.bodies[i].angular_velocity = u.segment<3>(6 * slot[i] + 3);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!is_free(i)) continue;
        auto& s = next.bodies[i];
        s.position = state.bodies[i].position + dt * s.velocity;
        const Vec3& w = s.angular_velocity;
        const Quat spin = Quat(0.0, w.x(), w.y(), w.z()) * state.bodies[i].orientation;
        s.orientation.coeffs() = state.bodies[i].orientation.coeffs() + 0.5 * dt * spin.coeffs();
        s.orientation.normalize();
    }
    check_finite(model, next);
    return next;
}

Measurement measure(const SpineModel& model, const SimState& state) {
    const Frames frames = build_frames(model);
    Measurement m;
    for (std::size_t k = 0; k < model.joints.size(); ++k) {
        const auto& spec = model.joints[k];
        const auto& jf = frames.joints[k];
        const auto& a = state.bodies[jf.cranial];
        const auto& b = state.bodies[jf.caudal];
        Vec3 arm_a;
        Vec3 arm_b;
        const Vec3 d = joint_displacement(jf, a, b, &arm_a, &arm_b);
        const Mat3 rb = b.orientation.toRotationMatrix();
        const Vec3 rel_velocity = (a.velocity + a.angular_velocity.cross(arm_a)) -
                                  (b.velocity + b.angular_velocity.cross(arm_b));
        const Vec3 on_cranial = -(rb * spec.stiffness.cwiseProduct(d)) - spec.damping * rel_velocity;
        m.joints.push_back({-on_cranial, d.norm()});
    }
    for (std::size_t k = 0; k < model.facets.size(); ++k) {
        const auto& spec = model.facets[k];
        const auto& ff = frames.facets[k];
        FacetMeasurement fm;
        for (int side = 0; side < 2; ++side) {
            Vec3 arm_a;
            Vec3 arm_b;
            Vec3 normal;
            const double sep =
                facet_separation(ff, side, state.bodies[ff.cranial], state.bodies[ff.caudal], &arm_a, &arm_b, &normal);
            const double gap = spec.gap + (sep - ff.rest_separation[side]);
            const double force = gap < 0.0 ? spec.stiffness * (-gap) : 0.0;
            (side == 0 ? fm.left : fm.right) = force;
            (side == 0 ? fm.left_gap : fm.right_gap) = gap;
        }
        m.facets.push_back(fm);
    }
    return m;
}

double kinetic_energy(const SpineModel& model, const SimState& state) {
    double e = 0.0;
    for (std::size_t i = 0; i < model.bodies.size(); ++i) {
        const auto& b = state.bodies[i];
        e += 0.5 * model.bodies[i].mass / 1000.0 * b.velocity.squaredNorm();
        e += 0.5 * model.bodies[i].inertia / 1000.0 * b.angular_velocity.squaredNorm();
    }
    return e;
}

// ---------------------------------------------------------------------------

Mesh make_elliptic_cylinder(const std::string& owner, const Vec3& center, double half_width, double half_depth,
                            double height, int segments) {
    Mesh mesh;
    mesh.owner = owner;
    const double y0 = center.y() - 0.5 * height;
    const double y1 = center.y() + 0.5 * height;
    for (int ring = 0; ring < 2; ++ring) {
        const double y = ring == 0 ? y0 : y1;
        for (int i = 0; i < segments; ++i) {
            const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(segments);
            mesh.vertices.emplace_back(center.x() + half_width * std::cos(a), y, center.z() + half_depth * std::sin(a));
        }
    }
    const int bottom_center = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(center.x(), y0, center.z());
    const int top_center = bottom_center + 1;
    mesh.vertices.emplace_back(center.x(), y1, center.z());
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        const int b0 = i;
        const int b1 = j;
        const int t0 = segments + i;
        const int t1 = segments + j;
        // Outward-facing winding; angle increases from +x toward +z.
        mesh.triangles.push_back({b0, t0, b1});
        mesh.triangles.push_back({b1, t0, t1});
        mesh.triangles.push_back({bottom_center, b0, b1});
        mesh.triangles.push_back({top_center, t1, t0});
    }
    return mesh;
}

SimulationDataset run(const SpineModel& input_model, const Scenario& scenario, const RunOptions& options) {
    input_model.validate();
    if (!(scenario.dt > 0.0) || !(scenario.tick > 0.0) || !(scenario.duration >= 0.0)) {
        throw ParameterError("scenario needs positive dt and tick and non-negative duration");
    }
    const double ratio = scenario.tick / scenario.dt;
    const auto steps_per_tick = static_cast<long>(std::llround(ratio));
    if (steps_per_tick < 1 || std::abs(ratio - static_cast<double>(steps_per_tick)) > 1e-6) {
        throw ParameterError("scenario tick must be an integer multiple of dt");
    }
    const auto ticks = static_cast<long>(std::llround(scenario.duration / scenario.tick));
    const SpineModel model = apply_degeneration(input_model, scenario.degeneration);

    // Registry and column layout.
    std::vector<StructureRef> structures;
    for (const auto& b : model.bodies) {
        structures.push_back({b.id, StructureKind::Vertebra, b.id, {}});
    }
    std::vector<std::size_t> disc_joints;
    for (std::size_t k = 0; k < model.joints.size(); ++k) {
        const auto& j = model.joints[k];
        if (j.disc) {
            structures.push_back({disc_id(j.cranial, j.caudal), StructureKind::Disc, j.cranial, j.caudal});
            disc_joints.push_back(k);
        }
    }
    for (const auto& f : model.facets) {
        structures.push_back({facet_id(f.cranial, f.caudal, StructureKind::FacetLeft), StructureKind::FacetLeft,
                              f.cranial, f.caudal});
        structures.push_back({facet_id(f.cranial, f.caudal, StructureKind::FacetRight), StructureKind::FacetRight,
                              f.cranial, f.caudal});
    }

    std::vector<std::string> disc_columns;
    for (std::size_t k : disc_joints) {
        disc_columns.push_back(disc_id(model.joints[k].cranial, model.joints[k].caudal));
    }
    std::vector<std::string> magnitude_columns = disc_columns;
    for (const auto& f : model.facets) {
        magnitude_columns.push_back(facet_id(f.cranial, f.caudal, StructureKind::FacetLeft));
        magnitude_columns.push_back(facet_id(f.cranial, f.caudal, StructureKind::FacetRight));
    }

    std::vector<double> times;
    std::vector<double> vectors;
    std::vector<double> magnitudes;
    std::vector<double> deformations;
    std::vector<std::string> body_ids;
    for (const auto& b : model.bodies) body_ids.push_back(b.id);
    std::vector<RigidPose> poses;

    auto record = [&](long tick, const SimState& s) {
        times.push_back(static_cast<double>(tick) * scenario.tick);
        const Measurement m = measure(model, s);
        for (std::size_t k : disc_joints) {
            const Vec3& f = m.joints[k].force_on_disc;
            vectors.insert(vectors.end(), {f.x(), f.y(), f.z()});
            magnitudes.push_back(f.norm());
            deformations.push_back(m.joints[k].deformation);
        }
        for (const auto& fm : m.facets) {
            magnitudes.push_back(fm.left);
            magnitudes.push_back(fm.right);
        }
        for (std::size_t i = 0; i < model.bodies.size(); ++i) {
            const auto& b = s.bodies[i];
            RigidPose p;
            p.rotation = b.orientation * model.bodies[i].rest_orientation.conjugate();
            p.rotation.normalize();
            p.translation = b.position - p.rotation * model.bodies[i].rest_position;
            poses.push_back(p);
        }
    };

    SimState state = rest_state(model);
    record(0, state);
    long step_index = 0;
    for (long tick = 1; tick <= ticks; ++tick) {
        for (long k = 0; k < steps_per_tick; ++k) {
            const double t = static_cast<double>(step_index) * scenario.dt;
            state.time = t;
            state = step(model, state, scenario.dt, scenario.gravity, scenario.external_force_at(t));
            ++step_index;
        }
        record(tick, state);
    }

    SimulationDataset ds;
    ds.manifest.id = options.dataset_id;
    ds.manifest.span = model.span;
    ds.manifest.dt = scenario.tick;
    ds.registry = StructureRegistry(structures);
    ds.manifest.structures = ds.registry.all();
    ds.matrices.emplace(Attribute::ForceVector, ValueMatrix(Attribute::ForceVector, times, disc_columns, vectors));
    ds.matrices.emplace(Attribute::ForceMagnitude,
                        ValueMatrix(Attribute::ForceMagnitude, times, magnitude_columns, magnitudes));
    ds.matrices.emplace(Attribute::Deformation, ValueMatrix(Attribute::Deformation, times, disc_columns, deformations));
    ds.kinematics = KinematicsTrack(times, body_ids, poses);

    if (options.with_meshes) {
        for (const auto& b : model.bodies) {
            ds.meshes.emplace(b.id, make_elliptic_cylinder(b.id, b.rest_position, b.half_width, b.half_depth, b.height));
        }
        for (std::size_t k : disc_joints) {
            const auto& j = model.joints[k];
            const auto& a = model.bodies[model.body_index(j.cranial)];
            const auto& b = model.bodies[model.body_index(j.caudal)];
            const Vec3 center = 0.5 * (a.rest_position + b.rest_position);
            double height = (a.rest_position - b.rest_position).norm() - 0.5 * (a.height + b.height);
            if (!(height > 0.5)) height = 2.0;
            const std::string id = disc_id(j.cranial, j.caudal);
            ds.meshes.emplace(id, make_elliptic_cylinder(id, center, 0.95 * 0.5 * (a.half_width + b.half_width),
                                                         0.95 * 0.5 * (a.half_depth + b.half_depth), height));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------

SpineModel default_model() {
    SpineModel m;
    m.span = "C1..Th3";
    const auto names = expand_span(m.span);
    constexpr double kLevelSpacing = 18.0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        BodySpec b;
        b.id = names[i];
        b.mass = 0.25;
        b.inertia = 800.0;
        b.rest_position = Vec3(0.0, kLevelSpacing * static_cast<double>(names.size() - 1 - i), 0.0);
        // Vertebral bodies widen caudally.
        b.half_width = 8.0 + 0.4 * static_cast<double>(i);
        b.half_depth = 7.0 + 0.3 * static_cast<double>(i);
        b.height = 14.0;
        if (i == 0) {
            b.mass += 4.0;  // head
            b.inertia = 15000.0;
        }
        m.bodies.push_back(b);
    }
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        JointSpec j;
        j.cranial = names[i];
        j.caudal = names[i + 1];
        j.disc = !(names[i] == "C1" && names[i + 1] == "C2");
        m.joints.push_back(j);
        FacetSpec f;
        f.cranial = names[i];
        f.caudal = names[i + 1];
        m.facets.push_back(f);
    }
    return m;
}

Scenario static_gravity_scenario() {
    Scenario s;
    s.duration = 3.0;
    return s;
}

Scenario lateral_bend_scenario() {
    Scenario s;
    s.duration = 3.0;
    s.external_force = {{0.0, Vec3::Zero()},
                        {1.0, Vec3(75.0, 0.0, 0.0)},
                        {2.0, Vec3(75.0, 0.0, 0.0)},
                        {3.0, Vec3::Zero()}};
    return s;
}

SpineModel model_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        SpineModel m;
        m.span = j.value("span", std::string{});
        m.anchor_caudal = j.value("anchor_caudal", true);
        if (j.contains("load_offset")) m.load_offset = json_vec(j["load_offset"]);
        for (const auto& b : j.at("bodies")) {
            BodySpec bs;
            bs.id = b.at("id").get<std::string>();
            bs.mass = b.at("mass").get<double>();
            bs.inertia = b.value("inertia", bs.inertia);
            bs.rest_position = json_vec(b.at("position"));
            if (b.contains("orientation")) {
                const auto& q = b["orientation"];
                bs.rest_orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                           q.at(3).get<double>()).normalized();
            }
            bs.half_width = b.value("half_width", bs.half_width);
            bs.half_depth = b.value("half_depth", bs.half_depth);
            bs.height = b.value("height", bs.height);
            m.bodies.push_back(bs);
        }
        for (const auto& jj : j.value("joints", nlohmann::json::array())) {
            JointSpec js;
            js.cranial = jj.at("cranial").get<std::string>();
            js.caudal = jj.at("caudal").get<std::string>();
            js.disc = jj.value("disc", true);
            if (jj.contains("stiffness")) js.stiffness = json_vec(jj["stiffness"]);
            js.rotational_stiffness = jj.value("rotational_stiffness", js.rotational_stiffness);
            js.damping = jj.value("damping", js.damping);
            js.rotational_damping = jj.value("rotational_damping", js.rotational_damping);
            m.joints.push_back(js);
        }
        for (const auto& ff : j.value("facets", nlohmann::json::array())) {
            FacetSpec fs;
            fs.cranial = ff.at("cranial").get<std::string>();
            fs.caudal = ff.at("caudal").get<std::string>();
            fs.lateral_offset = ff.value("lateral_offset", fs.lateral_offset);
            fs.posterior_offset = ff.value("posterior_offset", fs.posterior_offset);
            fs.stiffness = ff.value("stiffness", fs.stiffness);
            fs.gap = ff.value("gap", fs.gap);
            m.facets.push_back(fs);
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

std::string model_to_json(const SpineModel& m) {
    nlohmann::ordered_json j;
    j["span"] = m.span;
    j["anchor_caudal"] = m.anchor_caudal;
    j["load_offset"] = vec_json(m.load_offset);
    auto bodies = nlohmann::ordered_json::array();
    for (const auto& b : m.bodies) {
        nlohmann::ordered_json o;
        o["id"] = b.id;
        o["mass"] = b.mass;
        o["inertia"] = b.inertia;
        o["position"] = vec_json(b.rest_position);
        o["orientation"] = {b.rest_orientation.w(), b.rest_orientation.x(), b.rest_orientation.y(),
                            b.rest_orientation.z()};
        o["half_width"] = b.half_width;
        o["half_depth"] = b.half_depth;
        o["height"] = b.height;
        bodies.push_back(o);
    }
    j["bodies"] = bodies;
    auto joints = nlohmann::ordered_json::array();
    for (const auto& js : m.joints) {
        nlohmann::ordered_json o;
        o["cranial"] = js.cranial;
        o["caudal"] = js.caudal;
        o["disc"] = js.disc;
        o["stiffness"] = vec_json(js.stiffness);
        o["rotational_stiffness"] = js.rotational_stiffness;
        o["damping"] = js.damping;
        o["rotational_damping"] = js.rotational_damping;
        joints.push_back(o);
    }
    j["joints"] = joints;
    auto facets = nlohmann::ordered_json::array();
    for (const auto& fs : m.facets) {
        nlohmann::ordered_json o;
        o["cranial"] = fs.cranial;
        o["caudal"] = fs.caudal;
        o["lateral_offset"] = fs.lateral_offset;
        o["posterior_offset"] = fs.posterior_offset;
        o["stiffness"] = fs.stiffness;
        o["gap"] = fs.gap;
        facets.push_back(o);
    }
    j["facets"] = facets;
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Scenario s;
        s.duration = j.value("duration", s.duration);
        s.tick = j.value("tick", s.tick);
        s.dt = j.value("dt", s.dt);
        if (j.contains("gravity")) s.gravity = json_vec(j["gravity"]);
        for (const auto& k : j.value("external_force", nlohmann::json::array())) {
            s.external_force.push_back({k.at("t").get<double>(), json_vec(k.at("f"))});
        }
        for (std::size_t i = 1; i < s.external_force.size(); ++i) {
            if (!(s.external_force[i].time > s.external_force[i - 1].time)) {
                throw FormatError("scenario: external_force keyframes must have increasing times");
            }
        }
        s.degeneration = j.value("degeneration", std::map<std::string, int>{});
        for (const auto& [disc, degree] : s.degeneration) {
            degeneration_factor(degree);
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scenario: ") + e.what());
    }
}

std::string scenario_to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["duration"] = s.duration;
    j["tick"] = s.tick;
    j["dt"] = s.dt;
    j["gravity"] = vec_json(s.gravity);
    auto keys = nlohmann::ordered_json::array();
    for (const auto& k : s.external_force) {
        keys.push_back({{"t", k.time}, {"f", vec_json(k.force)}});
    }
    j["external_force"] = keys;
    j["degeneration"] = s.degeneration;
    return j.dump(2) + "\n";
}

}  // namespace spineviz
