#pragma once

// Simulation output datasets: structure registry, per-attribute value
// matrices, kinematics track and meshes, plus their file formats.

#include "spineviz/math.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace spineviz {

enum class StructureKind { Vertebra, Disc, FacetLeft, FacetRight };

std::string_view to_string(StructureKind kind);
StructureKind structure_kind_from_string(std::string_view text);

struct StructureRef {
    std::string id;
    StructureKind kind = StructureKind::Vertebra;
    std::string cranial;  // vertebra id; equals `id` for vertebrae
    std::string caudal;   // empty for vertebrae

    friend bool operator==(const StructureRef&, const StructureRef&) = default;
};

// Ordered set of structures. Vertebrae appear cranial to caudal; discs and
// facets reference two registered, adjacent vertebrae.
class StructureRegistry {
public:
    StructureRegistry() = default;
    explicit StructureRegistry(std::vector<StructureRef> structures);

    // Vertebrae for a span such as "C1..Th3", with a disc at every adjacent
    // pair except C1-C2 and a left/right facet at every adjacent pair.
    static StructureRegistry from_span(std::string_view span);

    const std::vector<StructureRef>& all() const noexcept { return structures_; }
    const StructureRef* find(std::string_view id) const;
    std::vector<const StructureRef*> of_kind(StructureKind kind) const;
    const std::vector<std::string>& vertebrae() const noexcept { return vertebrae_; }
    std::optional<std::size_t> vertebra_index(std::string_view id) const;

private:
    std::vector<StructureRef> structures_;
    std::vector<std::string> vertebrae_;
    std::unordered_map<std::string, std::size_t> index_;
};

// "C1..Th3" -> {"C1", ..., "C7", "Th1", "Th2", "Th3"}.
std::vector<std::string> expand_span(std::string_view span);
std::string disc_id(std::string_view cranial, std::string_view caudal);
std::string facet_id(std::string_view cranial, std::string_view caudal, StructureKind side);

enum class Attribute { ForceMagnitude, ForceVector, Deformation };

std::string_view to_string(Attribute attribute);
std::optional<Attribute> attribute_from_string(std::string_view text);
int component_count(Attribute attribute);
// Kinds expected as columns of a matrix holding `attribute`.
std::vector<StructureKind> expected_kinds(Attribute attribute);

// rows = ticks, columns = structures; vector attributes hold three
// components per cell. Missing cells are NaN.
class ValueMatrix {
public:
    ValueMatrix() = default;
    ValueMatrix(Attribute attribute, std::vector<double> times, std::vector<std::string> columns,
                std::vector<double> values);

    Attribute attribute() const noexcept { return attribute_; }
    int components() const noexcept { return component_count(attribute_); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    std::size_t rows() const noexcept { return times_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }
    const std::vector<double>& raw() const noexcept { return values_; }

    std::optional<std::size_t> column_index(std::string_view id) const;
    double at(std::size_t row, std::size_t col, int component = 0) const {
        return values_[(row * columns_.size() + col) * static_cast<std::size_t>(components()) +
                       static_cast<std::size_t>(component)];
    }
    bool missing(std::size_t row, std::size_t col) const;
    Vec3 vector_at(std::size_t row, std::size_t col) const;
    // Scalar value, or the Euclidean norm for vector attributes; NaN if missing.
    double magnitude(std::size_t row, std::size_t col) const;
    std::vector<double> magnitude_series(std::size_t col) const;

private:
    Attribute attribute_ = Attribute::ForceMagnitude;
    std::vector<double> times_;
    std::vector<std::string> columns_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> column_index_;
};

ValueMatrix parse_matrix_csv(std::string_view text, Attribute attribute,
                             std::vector<std::string>* warnings = nullptr);
std::string serialize_matrix_csv(const ValueMatrix& matrix);

// Rigid transform applied to rest-pose (world) mesh coordinates:
// x' = rotation * x + translation.
struct RigidPose {
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
};

class KinematicsTrack {
public:
    KinematicsTrack() = default;
    KinematicsTrack(std::vector<double> times, std::vector<std::string> bodies,
                    std::vector<RigidPose> poses);

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<std::string>& bodies() const noexcept { return bodies_; }
    std::size_t rows() const noexcept { return times_.size(); }
    std::optional<std::size_t> body_index(std::string_view id) const;
    const RigidPose& pose(std::size_t row, std::size_t body) const {
        return poses_[row * bodies_.size() + body];
    }

private:
    std::vector<double> times_;
    std::vector<std::string> bodies_;
    std::vector<RigidPose> poses_;
};

KinematicsTrack parse_kinematics_csv(std::string_view text);
std::string serialize_kinematics_csv(const KinematicsTrack& track);

struct Mesh {
    std::string owner;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;  // zero-based
};

// Honors `v x y z` and triangular `f i j k` lines (1-based, `i/t/n` forms
// accepted); everything else is skipped. Zero-area triangles are dropped.
Mesh parse_obj_subset(std::string_view text, std::string owner = {},
                      std::vector<std::string>* warnings = nullptr);
std::string serialize_obj(const Mesh& mesh);

struct DatasetManifest {
    std::string id;
    std::string span;
    double dt = 0.01;
    std::map<std::string, std::string> matrices;  // attribute -> relative path
    std::string kinematics;
    std::map<std::string, std::string> meshes;  // structure -> relative path
    std::string compare;
    std::vector<StructureRef> structures;
};

DatasetManifest parse_manifest(std::string_view text);
std::string serialize_manifest(const DatasetManifest& manifest);

struct SimulationDataset {
    DatasetManifest manifest;
    StructureRegistry registry;
    std::map<Attribute, ValueMatrix> matrices;
    std::optional<KinematicsTrack> kinematics;
    std::map<std::string, Mesh> meshes;

    const ValueMatrix* matrix(Attribute attribute) const;
    const Mesh* mesh(std::string_view structure) const;
    std::vector<Attribute> attributes() const;
    // Time base shared by all matrices (first matrix, else kinematics).
    const std::vector<double>& times() const;
};

// `path` is either a manifest file or a directory holding manifest.json.
SimulationDataset load_dataset(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr);
// Writes manifest.json, one CSV per matrix, kinematics.csv and meshes/*.obj;
// file paths in the written manifest are regenerated.
void write_dataset(const SimulationDataset& dataset, const std::filesystem::path& dir);

enum class IssueCode { MissingColumn, AllMissingValues, TimebaseMismatch, NegativeMagnitude };

std::string_view to_string(IssueCode code);

struct ValidationIssue {
    IssueCode code;
    std::string structure;
    std::string attribute;
    std::string detail;

    friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool empty() const noexcept { return issues.empty(); }
    std::string to_text() const;

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

ValidationReport validate_dataset(const SimulationDataset& dataset);

struct StructureCensus {
    std::size_t vertebrae = 0;
    std::size_t discs = 0;
    std::size_t facet_pairs = 0;

    friend bool operator==(const StructureCensus&, const StructureCensus&) = default;
};

StructureCensus structure_census(const StructureRegistry& registry);
StructureCensus structure_census(const DatasetManifest& manifest);

}  // namespace spineviz
