#pragma once

// Toy multibody spine: rigid vertebrae joined by spring-damper joints (a
// disc where one exists) and unilateral facet contacts, integrated with
// semi-implicit Euler. All parameters are synthetic; units are kg, mm, s, N.

#include "spineviz/dataset.hpp"
#include "spineviz/math.hpp"

#include <map>
#include <string>
#include <vector>

namespace spineviz {

struct BodySpec {
    std::string id;
    double mass = 0.25;       // kg
    double inertia = 800.0;   // kg*mm^2, scalar
    Vec3 rest_position = Vec3::Zero();
    Quat rest_orientation = Quat::Identity();
    // Vertebral body extent used for the generated mesh.
    double half_width = 9.0;  // x semi-axis, mm
    double half_depth = 7.5;  // z semi-axis, mm
    double height = 14.0;     // mm
};

// Spring-damper between two adjacent bodies, attached at the midpoint of
// their rest positions. `disc` marks joints that are intervertebral discs
// (C1-C2 has a joint but no disc).
struct JointSpec {
    std::string cranial;
    std::string caudal;
    bool disc = true;
    Vec3 stiffness = Vec3(100.0, 150.0, 100.0);  // N/mm along caudal-frame x, y, z
    double rotational_stiffness = 120000.0;      // N*mm/rad
    double damping = 2.0;                        // N*s/mm
    double rotational_damping = 4000.0;          // N*mm*s/rad
};

// Unilateral contact pair at (+/-lateral_offset, 0, -posterior_offset) from
// the joint centre. Left is +x.
struct FacetSpec {
    std::string cranial;
    std::string caudal;
    double lateral_offset = 15.0;   // mm
    double posterior_offset = 12.0; // mm
    double stiffness = 200.0;       // N/mm
    double gap = 0.6;               // mm, rest clearance
};

struct SpineModel {
    std::string span;
    std::vector<BodySpec> bodies;  // cranial -> caudal; the first carries the head mass
    std::vector<JointSpec> joints;
    std::vector<FacetSpec> facets;
    bool anchor_caudal = true;     // last body fixed to ground
    // Point of application of the external force, in the first body's frame
    // (the head's centre of mass sits above C1).
    Vec3 load_offset = Vec3(0.0, 60.0, 0.0);

    // Throws ParameterError on non-positive masses, negative coefficients or
    // joints between unknown / non-adjacent bodies.
    void validate() const;
    std::size_t body_index(const std::string& id) const;
};

struct ForceKeyframe {
    double time = 0.0;
    Vec3 force = Vec3::Zero();  // N
};

struct Scenario {
    double duration = 3.0;  // s
    double tick = 0.01;     // output interval, s
    double dt = 1e-3;       // internal step, s
    Vec3 gravity = Vec3(0.0, -9810.0, 0.0);  // mm/s^2
    std::vector<ForceKeyframe> external_force;  // on the first body, piecewise linear
    std::map<std::string, int> degeneration;    // disc id -> degree 1..5

    Vec3 external_force_at(double t) const;
};

struct BodyState {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Vec3 velocity = Vec3::Zero();          // mm/s
    Vec3 angular_velocity = Vec3::Zero();  // rad/s, world frame

    friend bool operator==(const BodyState& a, const BodyState& b) {
        return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() &&
               a.velocity == b.velocity && a.angular_velocity == b.angular_velocity;
    }
};

struct SimState {
    double time = 0.0;
    std::vector<BodyState> bodies;

    friend bool operator==(const SimState&, const SimState&) = default;
};

// Loads acting at one instant, evaluated on a state.
struct JointMeasurement {
    Vec3 force_on_disc = Vec3::Zero();  // exerted by the cranial body, world frame, N
    double deformation = 0.0;           // |translational joint displacement|, mm
};

struct FacetMeasurement {
    double left = 0.0;   // N
    double right = 0.0;  // N
    double left_gap = 0.0;
    double right_gap = 0.0;
};

struct Measurement {
    std::vector<JointMeasurement> joints;  // parallel to SpineModel::joints
    std::vector<FacetMeasurement> facets;  // parallel to SpineModel::facets
};

// k(d) = 1 / (1 + 0.35 (d - 1)).
double degeneration_factor(int degree);
SpineModel apply_degeneration(const SpineModel& model, const std::map<std::string, int>& degrees);

SimState rest_state(const SpineModel& model);
SimState step(const SpineModel& model, const SimState& state, double dt, const Vec3& gravity = Vec3::Zero(),
              const Vec3& external_force = Vec3::Zero());
Measurement measure(const SpineModel& model, const SimState& state);
double kinetic_energy(const SpineModel& model, const SimState& state);  // N*mm

struct RunOptions {
    std::string dataset_id = "simulated";
    bool with_meshes = true;
};

SimulationDataset run(const SpineModel& model, const Scenario& scenario, const RunOptions& options = {});

// Bundled C1..Th3 model: C1 carries 4.0 kg head + 0.25 kg, the other nine
// vertebrae 0.25 kg each.
SpineModel default_model();
Scenario static_gravity_scenario();
Scenario lateral_bend_scenario();

SpineModel model_from_json(std::string_view text);
std::string model_to_json(const SpineModel& model);
Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& scenario);

// Closed elliptic cylinder along y centred at `center`.
Mesh make_elliptic_cylinder(const std::string& owner, const Vec3& center, double half_width, double half_depth,
                            double height, int segments = 24);

}  // namespace spineviz
