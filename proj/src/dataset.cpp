#include "spineviz/dataset.hpp"

#include "spineviz/errors.hpp"
#include "text_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace spineviz {
namespace {

constexpr const char* kComponentSuffix[3] = {".x", ".y", ".z"};
constexpr const char* kPoseSuffix[7] = {".qw", ".qx", ".qy", ".qz", ".tx", ".ty", ".tz"};

std::string_view expected_unit(Attribute attribute) {
    return attribute == Attribute::Deformation ? "mm" : "N";
}

// Strips an optional "[unit]" hint from a header cell.
std::string strip_unit_hint(std::string_view cell, Attribute attribute, std::vector<std::string>* warnings) {
    const auto open = cell.find('[');
    if (open == std::string_view::npos || cell.back() != ']') {
        return std::string(detail::trim(cell));
    }
    const std::string_view unit = cell.substr(open + 1, cell.size() - open - 2);
    if (unit != expected_unit(attribute) && warnings != nullptr) {
        warnings->push_back("unit hint '" + std::string(unit) + "' on column '" +
                            std::string(cell.substr(0, open)) + "' ignored");
    }
    return std::string(detail::trim(cell.substr(0, open)));
}

double parse_cell(std::string_view cell, std::size_t line) {
    const std::string_view t = detail::trim(cell);
    if (t.empty() || detail::iequals(t, "nan")) {
        return kMissing;
    }
    const auto v = detail::parse_double(t);
    if (!v) {
        throw FormatError("line " + std::to_string(line) + ": not a number: '" + std::string(t) + "'");
    }
    return *v;
}

double parse_time(std::string_view cell, std::size_t line) {
    const auto v = detail::parse_double(detail::trim(cell));
    if (!v || !std::isfinite(*v)) {
        throw FormatError("line " + std::to_string(line) + ": invalid time '" + std::string(cell) + "'");
    }
    return *v;
}

void check_increasing(const std::vector<double>& times, std::size_t row, std::size_t line) {
    if (row > 0 && !(times[row] > times[row - 1])) {
        throw FormatError("line " + std::to_string(line) + ": non-monotonic time " +
                          detail::format_shortest(times[row]));
    }
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;  // line number, cells
};

Table read_table(std::string_view text) {
    Table table;
    bool have_header = false;
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        auto cells = detail::split(line, ',');
        if (!have_header) {
            for (auto c : cells) {
                table.header.emplace_back(detail::trim(c));
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw FormatError("line " + std::to_string(line_no) + ": ragged row (" +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.header.size()) + ")");
        }
        table.rows.emplace_back(line_no, std::move(cells));
    }
    if (!have_header) {
        throw FormatError("missing header row");
    }
    if (table.header.empty() || table.header.front() != "time") {
        throw FormatError("header must start with 'time'");
    }
    return table;
}

nlohmann::ordered_json structure_to_json(const StructureRef& s) {
    nlohmann::ordered_json j{{"id", s.id}, {"kind", std::string(to_string(s.kind))}, {"cranial", s.cranial}};
    if (!s.caudal.empty()) {
        j["caudal"] = s.caudal;
    }
    return j;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out << content;
}

}  // namespace

// ---------------------------------------------------------------------------
// Structures

std::string_view to_string(StructureKind kind) {
    switch (kind) {
        case StructureKind::Vertebra: return "vertebra";
        case StructureKind::Disc: return "disc";
        case StructureKind::FacetLeft: return "facet_left";
        case StructureKind::FacetRight: return "facet_right";
    }
    return "vertebra";
}

StructureKind structure_kind_from_string(std::string_view text) {
    if (text == "vertebra") return StructureKind::Vertebra;
    if (text == "disc") return StructureKind::Disc;
    if (text == "facet_left") return StructureKind::FacetLeft;
    if (text == "facet_right") return StructureKind::FacetRight;
    throw FormatError("unknown structure kind '" + std::string(text) + "'");
}

StructureRegistry::StructureRegistry(std::vector<StructureRef> structures) : structures_(std::move(structures)) {
    for (std::size_t i = 0; i < structures_.size(); ++i) {
        const auto& s = structures_[i];
        if (s.id.empty()) {
            throw FormatError("structure with empty id");
        }
        if (!index_.emplace(s.id, i).second) {
            throw FormatError("duplicate structure id '" + s.id + "'");
        }
        if (s.kind == StructureKind::Vertebra) {
            vertebrae_.push_back(s.id);
        }
    }
    for (const auto& s : structures_) {
        if (s.kind == StructureKind::Vertebra) {
            continue;
        }
        const auto a = vertebra_index(s.cranial);
        const auto b = vertebra_index(s.caudal);
        if (!a || !b) {
            throw FormatError("structure '" + s.id + "' references an unregistered vertebra");
        }
        if (*b != *a + 1) {
            throw FormatError("structure '" + s.id + "' joins non-adjacent vertebrae " + s.cranial + "/" +
                              s.caudal);
        }
    }
}

StructureRegistry StructureRegistry::from_span(std::string_view span) {
    const auto names = expand_span(span);
    std::vector<StructureRef> out;
    for (const auto& v : names) {
        out.push_back({v, StructureKind::Vertebra, v, {}});
    }
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        const auto& a = names[i];
        const auto& b = names[i + 1];
        if (!(a == "C1" && b == "C2")) {
            out.push_back({disc_id(a, b), StructureKind::Disc, a, b});
        }
    }
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        const auto& a = names[i];
        const auto& b = names[i + 1];
        out.push_back({facet_id(a, b, StructureKind::FacetLeft), StructureKind::FacetLeft, a, b});
        out.push_back({facet_id(a, b, StructureKind::FacetRight), StructureKind::FacetRight, a, b});
    }
    return StructureRegistry(std::move(out));
}

const StructureRef* StructureRegistry::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &structures_[it->second];
}

std::vector<const StructureRef*> StructureRegistry::of_kind(StructureKind kind) const {
    std::vector<const StructureRef*> out;
    for (const auto& s : structures_) {
        if (s.kind == kind) {
            out.push_back(&s);
        }
    }
    return out;
}

std::optional<std::size_t> StructureRegistry::vertebra_index(std::string_view id) const {
    const auto it = std::find(vertebrae_.begin(), vertebrae_.end(), id);
    if (it == vertebrae_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - vertebrae_.begin());
}

std::vector<std::string> expand_span(std::string_view span) {
    static const std::vector<std::string> kLevels = [] {
        std::vector<std::string> v;
        for (int i = 1; i <= 7; ++i) v.push_back("C" + std::to_string(i));
        for (int i = 1; i <= 12; ++i) v.push_back("Th" + std::to_string(i));
        for (int i = 1; i <= 5; ++i) v.push_back("L" + std::to_string(i));
        return v;
    }();
    const auto sep = span.find("..");
    const std::string first(detail::trim(span.substr(0, sep)));
    const std::string last = sep == std::string_view::npos ? first : std::string(detail::trim(span.substr(sep + 2)));
    const auto a = std::find(kLevels.begin(), kLevels.end(), first);
    const auto b = std::find(kLevels.begin(), kLevels.end(), last);
    if (a == kLevels.end() || b == kLevels.end() || b < a) {
        throw FormatError("invalid span '" + std::string(span) + "'");
    }
    return {a, b + 1};
}

std::string disc_id(std::string_view cranial, std::string_view caudal) {
    return std::string(cranial) + std::string(caudal);
}

std::string facet_id(std::string_view cranial, std::string_view caudal, StructureKind side) {
    return disc_id(cranial, caudal) + (side == StructureKind::FacetLeft ? "_facetL" : "_facetR");
}

// ---------------------------------------------------------------------------
// Value matrices

std::string_view to_string(Attribute attribute) {
    switch (attribute) {
        case Attribute::ForceMagnitude: return "force_magnitude";
        case Attribute::ForceVector: return "force_vector";
        case Attribute::Deformation: return "deformation";
    }
    return "force_magnitude";
}

std::optional<Attribute> attribute_from_string(std::string_view text) {
    if (text == "force_magnitude") return Attribute::ForceMagnitude;
    if (text == "force_vector") return Attribute::ForceVector;
    if (text == "deformation") return Attribute::Deformation;
    return std::nullopt;
}

int component_count(Attribute attribute) { return attribute == Attribute::ForceVector ? 3 : 1; }

std::vector<StructureKind> expected_kinds(Attribute attribute) {
    if (attribute == Attribute::ForceMagnitude) {
        return {StructureKind::Disc, StructureKind::FacetLeft, StructureKind::FacetRight};
    }
    return {StructureKind::Disc};
}

ValueMatrix::ValueMatrix(Attribute attribute, std::vector<double> times, std::vector<std::string> columns,
                         std::vector<double> values)
    : attribute_(attribute), times_(std::move(times)), columns_(std::move(columns)), values_(std::move(values)) {
    if (values_.size() != times_.size() * columns_.size() * static_cast<std::size_t>(components())) {
        throw FormatError("value matrix size does not match rows x columns");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw FormatError("non-monotonic time at row " + std::to_string(i));
        }
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (!column_index_.emplace(columns_[c], c).second) {
            throw FormatError("duplicate column '" + columns_[c] + "'");
        }
    }
}

std::optional<std::size_t> ValueMatrix::column_index(std::string_view id) const {
    const auto it = column_index_.find(std::string(id));
    if (it == column_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool ValueMatrix::missing(std::size_t row, std::size_t col) const {
    for (int k = 0; k < components(); ++k) {
        if (is_missing(at(row, col, k))) {
            return true;
        }
    }
    return false;
}

Vec3 ValueMatrix::vector_at(std::size_t row, std::size_t col) const {
    if (components() == 3) {
        return {at(row, col, 0), at(row, col, 1), at(row, col, 2)};
    }
    return {at(row, col), 0.0, 0.0};
}

double ValueMatrix::magnitude(std::size_t row, std::size_t col) const {
    if (missing(row, col)) {
        return kMissing;
    }
    return components() == 3 ? vector_at(row, col).norm() : at(row, col);
}

std::vector<double> ValueMatrix::magnitude_series(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) {
        out[r] = magnitude(r, col);
    }
    return out;
}

ValueMatrix parse_matrix_csv(std::string_view text, Attribute attribute, std::vector<std::string>* warnings) {
    const Table table = read_table(text);
    const int ncomp = component_count(attribute);

    std::vector<std::string> columns;
    const std::size_t ncells = table.header.size() - 1;
    if (ncells % static_cast<std::size_t>(ncomp) != 0) {
        throw FormatError("vector matrix header needs three cells per structure");
    }
    for (std::size_t c = 0; c < ncells; c += static_cast<std::size_t>(ncomp)) {
        std::string base;
        for (int k = 0; k < ncomp; ++k) {
            std::string name = strip_unit_hint(table.header[1 + c + static_cast<std::size_t>(k)], attribute, warnings);
            if (ncomp == 3) {
                if (!name.ends_with(kComponentSuffix[k])) {
                    throw FormatError("vector column '" + name + "' lacks component suffix " + kComponentSuffix[k]);
                }
                name.resize(name.size() - 2);
                if (k > 0 && name != base) {
                    throw FormatError("vector components of '" + base + "' are not contiguous");
                }
            }
            base = name;
        }
        if (base.empty()) {
            throw FormatError("empty column id in header");
        }
        columns.push_back(base);
    }

    std::vector<double> times;
    std::vector<double> values;
    times.reserve(table.rows.size());
    values.reserve(table.rows.size() * ncells);
    for (const auto& [line, cells] : table.rows) {
        times.push_back(parse_time(cells[0], line));
        check_increasing(times, times.size() - 1, line);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            values.push_back(parse_cell(cells[c], line));
        }
    }
    return ValueMatrix(attribute, std::move(times), std::move(columns), std::move(values));
}

std::string serialize_matrix_csv(const ValueMatrix& matrix) {
    std::string out = "time";
    for (const auto& c : matrix.columns()) {
        if (matrix.components() == 3) {
            for (const char* s : kComponentSuffix) {
                out += ',' + c + s;
            }
        } else {
            out += ',' + c;
        }
    }
    out += '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        out += detail::format_shortest(matrix.times()[r]);
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            for (int k = 0; k < matrix.components(); ++k) {
                out += ',';
                const double v = matrix.at(r, c, k);
                if (!is_missing(v)) {
                    out += detail::format_shortest(v);
                }
            }
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kinematics

KinematicsTrack::KinematicsTrack(std::vector<double> times, std::vector<std::string> bodies,
                                 std::vector<RigidPose> poses)
    : times_(std::move(times)), bodies_(std::move(bodies)), poses_(std::move(poses)) {
    if (poses_.size() != times_.size() * bodies_.size()) {
        throw FormatError("kinematics size does not match ticks x bodies");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw FormatError("non-monotonic kinematics time at row " + std::to_string(i));
        }
    }
    for (auto& p : poses_) {
        const double n = p.rotation.norm();
        if (!(std::abs(n - 1.0) <= 1e-3)) {
            throw FormatError("kinematics rotation is not a unit quaternion (norm " + std::to_string(n) + ")");
        }
        if (std::abs(n - 1.0) > 1e-12) {
            p.rotation.normalize();
        }
    }
}

std::optional<std::size_t> KinematicsTrack::body_index(std::string_view id) const {
    const auto it = std::find(bodies_.begin(), bodies_.end(), id);
    if (it == bodies_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - bodies_.begin());
}

KinematicsTrack parse_kinematics_csv(std::string_view text) {
    const Table table = read_table(text);
    const std::size_t ncells = table.header.size() - 1;
    if (ncells % 7 != 0) {
        throw FormatError("kinematics header needs seven cells per body");
    }
    std::vector<std::string> bodies;
    for (std::size_t c = 0; c < ncells; c += 7) {
        std::string base;
        for (std::size_t k = 0; k < 7; ++k) {
            const std::string& cell = table.header[1 + c + k];
            if (!cell.ends_with(kPoseSuffix[k])) {
                throw FormatError("kinematics column '" + cell + "' lacks suffix " + kPoseSuffix[k]);
            }
            std::string name = cell.substr(0, cell.size() - std::string_view(kPoseSuffix[k]).size());
            if (k > 0 && name != base) {
                throw FormatError("pose columns of '" + base + "' are not contiguous");
            }
            base = std::move(name);
        }
        bodies.push_back(base);
    }
    std::vector<double> times;
    std::vector<RigidPose> poses;
    for (const auto& [line, cells] : table.rows) {
        times.push_back(parse_time(cells[0], line));
        check_increasing(times, times.size() - 1, line);
        for (std::size_t c = 1; c < cells.size(); c += 7) {
            double v[7];
            for (std::size_t k = 0; k < 7; ++k) {
                v[k] = parse_cell(cells[c + k], line);
                if (is_missing(v[k])) {
                    throw FormatError("line " + std::to_string(line) + ": missing kinematics value");
                }
            }
            poses.push_back({Quat(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
        }
    }
    return KinematicsTrack(std::move(times), std::move(bodies), std::move(poses));
}

std::string serialize_kinematics_csv(const KinematicsTrack& track) {
    std::string out = "time";
    for (const auto& b : track.bodies()) {
        for (const char* s : kPoseSuffix) {
            out += ',' + b + s;
        }
    }
    out += '\n';
    for (std::size_t r = 0; r < track.rows(); ++r) {
        out += detail::format_shortest(track.times()[r]);
        for (std::size_t b = 0; b < track.bodies().size(); ++b) {
            const auto& p = track.pose(r, b);
            const double v[7] = {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z(),
                                 p.translation.x(), p.translation.y(), p.translation.z()};
            for (double x : v) {
                out += ',' + detail::format_shortest(x);
            }
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Meshes

Mesh parse_obj_subset(std::string_view text, std::string owner, std::vector<std::string>* warnings) {
    Mesh mesh;
    mesh.owner = std::move(owner);
    std::vector<std::array<long, 3>> raw;
    std::vector<std::size_t> raw_lines;
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
        ++line_no;
        const auto tokens = detail::split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        if (tokens[0] == "v") {
            if (tokens.size() < 4) {
                throw FormatError("line " + std::to_string(line_no) + ": vertex needs three coordinates");
            }
            Vec3 p;
            for (int k = 0; k < 3; ++k) {
                const auto v = detail::parse_double(tokens[1 + static_cast<std::size_t>(k)]);
                if (!v || !std::isfinite(*v)) {
                    throw FormatError("line " + std::to_string(line_no) + ": bad vertex coordinate");
                }
                p[k] = *v;
            }
            mesh.vertices.push_back(p);
        } else if (tokens[0] == "f") {
            if (tokens.size() != 4) {
                if (warnings != nullptr) {
                    warnings->push_back("line " + std::to_string(line_no) + ": non-triangular face skipped");
                }
                continue;
            }
            std::array<long, 3> f{};
            for (std::size_t k = 0; k < 3; ++k) {
                const std::string_view tok = tokens[1 + k].substr(0, tokens[1 + k].find('/'));
                const auto v = detail::parse_long(tok);
                if (!v) {
                    throw FormatError("line " + std::to_string(line_no) + ": bad face index");
                }
                f[k] = *v;
            }
            raw.push_back(f);
            raw_lines.push_back(line_no);
        }
    }
    const auto nverts = static_cast<long>(mesh.vertices.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::array<int, 3> tri{};
        for (std::size_t k = 0; k < 3; ++k) {
            long idx = raw[i][k];
            if (idx < 0) {
                idx = nverts + idx + 1;
            }
            if (idx < 1 || idx > nverts) {
                throw FormatError("line " + std::to_string(raw_lines[i]) + ": face index " +
                                  std::to_string(raw[i][k]) + " out of range");
            }
            tri[k] = static_cast<int>(idx - 1);
        }
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
        if ((b - a).cross(c - a).norm() <= 1e-12) {
            if (warnings != nullptr) {
                warnings->push_back("line " + std::to_string(raw_lines[i]) + ": degenerate triangle dropped");
            }
            continue;
        }
        mesh.triangles.push_back(tri);
    }
    if (mesh.vertices.size() < 4) {
        throw FormatError("mesh needs at least 4 vertices");
    }
    if (mesh.triangles.empty()) {
        throw FormatError("mesh has no triangles");
    }
    return mesh;
}

std::string serialize_obj(const Mesh& mesh) {
    std::string out;
    if (!mesh.owner.empty()) {
        out += "o " + mesh.owner + "\n";
    }
    for (const auto& v : mesh.vertices) {
        out += "v " + detail::format_shortest(v.x()) + ' ' + detail::format_shortest(v.y()) + ' ' +
               detail::format_shortest(v.z()) + '\n';
    }
    for (const auto& t : mesh.triangles) {
        out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest parse_manifest(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    if (!j.is_object()) {
        throw FormatError("manifest must be an object");
    }
    DatasetManifest m;
    try {
        m.id = j.at("id").get<std::string>();
        m.span = j.value("span", std::string{});
        m.dt = j.value("dt", 0.01);
        m.matrices = j.value("matrices", std::map<std::string, std::string>{});
        m.kinematics = j.value("kinematics", std::string{});
        m.meshes = j.value("meshes", std::map<std::string, std::string>{});
        if (j.contains("compare") && !j["compare"].is_null()) {
            m.compare = j["compare"].get<std::string>();
        }
        if (j.contains("structures")) {
            for (const auto& s : j["structures"]) {
                m.structures.push_back({s.at("id").get<std::string>(),
                                        structure_kind_from_string(s.at("kind").get<std::string>()),
                                        s.value("cranial", s.at("id").get<std::string>()),
                                        s.value("caudal", std::string{})});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    if (m.id.empty()) {
        throw FormatError("manifest: empty id");
    }
    if (!(m.dt > 0.0)) {
        throw FormatError("manifest: dt must be positive");
    }
    for (const auto& [attr, path] : m.matrices) {
        if (!attribute_from_string(attr)) {
            throw FormatError("manifest: unknown attribute '" + attr + "'");
        }
    }
    if (m.structures.empty() && !m.span.empty()) {
        m.structures = StructureRegistry::from_span(m.span).all();
    }
    return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["id"] = m.id;
    j["span"] = m.span;
    j["dt"] = m.dt;
    j["matrices"] = m.matrices;
    j["kinematics"] = m.kinematics;
    j["meshes"] = m.meshes;
    j["compare"] = m.compare.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.compare);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : m.structures) {
        arr.push_back(structure_to_json(s));
    }
    j["structures"] = arr;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Datasets

const ValueMatrix* SimulationDataset::matrix(Attribute attribute) const {
    const auto it = matrices.find(attribute);
    return it == matrices.end() ? nullptr : &it->second;
}

const Mesh* SimulationDataset::mesh(std::string_view structure) const {
    const auto it = meshes.find(std::string(structure));
    return it == meshes.end() ? nullptr : &it->second;
}

std::vector<Attribute> SimulationDataset::attributes() const {
    std::vector<Attribute> out;
    for (const auto& [a, m] : matrices) {
        out.push_back(a);
    }
    return out;
}

const std::vector<double>& SimulationDataset::times() const {
    static const std::vector<double> kEmpty;
    if (!matrices.empty()) {
        return matrices.begin()->second.times();
    }
    if (kinematics) {
        return kinematics->times();
    }
    return kEmpty;
}

SimulationDataset load_dataset(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    const auto manifest_path = std::filesystem::is_directory(path) ? path / "manifest.json" : path;
    const auto root = manifest_path.parent_path();
    SimulationDataset ds;
    ds.manifest = parse_manifest(read_file(manifest_path));
    ds.registry = StructureRegistry(ds.manifest.structures);

    for (const auto& [name, rel] : ds.manifest.matrices) {
        const Attribute attr = *attribute_from_string(name);
        ValueMatrix m = parse_matrix_csv(read_file(root / rel), attr, warnings);
        for (const auto& c : m.columns()) {
            if (ds.registry.find(c) == nullptr) {
                throw FormatError(rel + ": column '" + c + "' is not a registered structure");
            }
        }
        ds.matrices.emplace(attr, std::move(m));
    }
    if (!ds.manifest.kinematics.empty()) {
        ds.kinematics = parse_kinematics_csv(read_file(root / ds.manifest.kinematics));
        for (const auto& b : ds.kinematics->bodies()) {
            if (!ds.registry.vertebra_index(b)) {
                throw FormatError("kinematics body '" + b + "' is not a registered vertebra");
            }
        }
    }
    for (const auto& [structure, rel] : ds.manifest.meshes) {
        if (ds.registry.find(structure) == nullptr) {
            throw FormatError("mesh owner '" + structure + "' is not a registered structure");
        }
        ds.meshes.emplace(structure, parse_obj_subset(read_file(root / rel), structure, warnings));
    }
    return ds;
}

void write_dataset(const SimulationDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    DatasetManifest m = dataset.manifest;
    m.matrices.clear();
    m.meshes.clear();
    m.kinematics.clear();
    m.structures = dataset.registry.all();
    for (const auto& [attr, matrix] : dataset.matrices) {
        const std::string rel = std::string(to_string(attr)) + ".csv";
        write_file(dir / rel, serialize_matrix_csv(matrix));
        m.matrices[std::string(to_string(attr))] = rel;
    }
    if (dataset.kinematics) {
        write_file(dir / "kinematics.csv", serialize_kinematics_csv(*dataset.kinematics));
        m.kinematics = "kinematics.csv";
    }
    if (!dataset.meshes.empty()) {
        std::filesystem::create_directories(dir / "meshes");
        for (const auto& [owner, mesh] : dataset.meshes) {
            const std::string rel = "meshes/" + owner + ".obj";
            write_file(dir / rel, serialize_obj(mesh));
            m.meshes[owner] = rel;
        }
    }
    write_file(dir / "manifest.json", serialize_manifest(m));
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(IssueCode code) {
    switch (code) {
        case IssueCode::MissingColumn: return "MISSING_COLUMN";
        case IssueCode::AllMissingValues: return "ALL_MISSING_VALUES";
        case IssueCode::TimebaseMismatch: return "TIMEBASE_MISMATCH";
        case IssueCode::NegativeMagnitude: return "NEGATIVE_MAGNITUDE";
    }
    return "MISSING_COLUMN";
}

std::string ValidationReport::to_text() const {
    std::string out;
    for (const auto& i : issues) {
        out += std::string(to_string(i.code)) + ' ' + (i.structure.empty() ? "-" : i.structure) + ' ' +
               (i.attribute.empty() ? "-" : i.attribute);
        if (!i.detail.empty()) {
            out += ": " + i.detail;
        }
        out += '\n';
    }
    return out;
}

ValidationReport validate_dataset(const SimulationDataset& dataset) {
    ValidationReport report;
    const std::vector<double>* reference = nullptr;
    std::string reference_name;
    for (const auto& [attr, m] : dataset.matrices) {
        const std::string name(to_string(attr));
        if (reference == nullptr) {
            reference = &m.times();
            reference_name = name;
        } else if (m.times() != *reference) {
            report.issues.push_back({IssueCode::TimebaseMismatch, {}, name, "differs from " + reference_name});
        }

        for (const StructureKind kind : expected_kinds(attr)) {
            for (const StructureRef* s : dataset.registry.of_kind(kind)) {
                if (!m.column_index(s->id)) {
                    report.issues.push_back({IssueCode::MissingColumn, s->id, name, "no column in matrix"});
                }
            }
        }
        for (std::size_t c = 0; c < m.cols(); ++c) {
            bool all_missing = m.rows() > 0;
            std::optional<std::size_t> negative;
            for (std::size_t r = 0; r < m.rows(); ++r) {
                if (!m.missing(r, c)) {
                    all_missing = false;
                    if (m.components() == 1 && m.at(r, c) < 0.0 && !negative) {
                        negative = r;
                    }
                }
            }
            if (all_missing) {
                report.issues.push_back({IssueCode::AllMissingValues, m.columns()[c], name, "every tick missing"});
            }
            if (negative) {
                report.issues.push_back({IssueCode::NegativeMagnitude, m.columns()[c], name,
                                         "value " + detail::format_shortest(m.at(*negative, c)) + " at t=" +
                                             detail::format_shortest(m.times()[*negative])});
            }
        }
    }
    if (dataset.kinematics && reference != nullptr && dataset.kinematics->times() != *reference) {
        report.issues.push_back({IssueCode::TimebaseMismatch, {}, "kinematics", "differs from " + reference_name});
    }
    return report;
}

StructureCensus structure_census(const StructureRegistry& registry) {
    StructureCensus census;
    std::set<std::pair<std::string, std::string>> facet_pairs;
    for (const auto& s : registry.all()) {
        switch (s.kind) {
            case StructureKind::Vertebra: ++census.vertebrae; break;
            case StructureKind::Disc: ++census.discs; break;
            case StructureKind::FacetLeft:
            case StructureKind::FacetRight: facet_pairs.emplace(s.cranial, s.caudal); break;
        }
    }
    census.facet_pairs = facet_pairs.size();
    return census;
}

StructureCensus structure_census(const DatasetManifest& manifest) {
    return structure_census(StructureRegistry(manifest.structures));
}

}  // namespace spineviz
