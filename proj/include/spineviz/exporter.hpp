#pragma once

// Draw lists, SVG rendering and the scene document served to the UI.
//
// Every 2D view is first reduced to a list of primitives sorted by layer:
//   0 background, 1 gridlines, 2 vertebrae, 3 chart frames, 4 areas/strips,
//   5 comparison overlays, 6 lines, 7 cursor, 8 labels.
// Within a layer, primitives keep construction order (structure registry
// order, then time).

#include "spineviz/glyphs.hpp"
#include "spineviz/layout.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spineviz {

inline constexpr int kSceneSchemaVersion = 1;

enum Layer : int {
    kLayerBackground = 0,
    kLayerGridlines = 1,
    kLayerVertebrae = 2,
    kLayerFrames = 3,
    kLayerAreas = 4,
    kLayerComparison = 5,
    kLayerLines = 6,
    kLayerCursor = 7,
    kLayerLabels = 8,
};

enum class ExportView { Charts, Facets, Simplified, Glyphs };

std::string_view to_string(ExportView view);
std::optional<ExportView> export_view_from_string(std::string_view text);

struct GradientStop {
    double offset = 0.0;
    std::string color;

    friend bool operator==(const GradientStop&, const GradientStop&) = default;
};

// Horizontal gradient in canvas space; hard edges are two stops at one offset.
struct Gradient {
    double x0 = 0.0;
    double x1 = 0.0;
    std::vector<GradientStop> stops;

    friend bool operator==(const Gradient&, const Gradient&) = default;
};

struct Primitive {
    std::string kind;       // polygon | polyline | line | rect | text
    int layer = 0;
    std::string role;       // e.g. "area", "frame-missing", "cursor"
    std::string structure;  // empty for global primitives
    std::string dataset;    // set on simplified strips
    std::vector<Point2> points;  // rect: two corners
    std::string fill = "none";   // color, "none" or "hatch"
    std::string stroke = "none";
    double stroke_width = 0.0;
    double opacity = 1.0;
    std::string text;
    std::string anchor;  // text-anchor: start | end | middle
    std::optional<Gradient> gradient;

    friend bool operator==(const Primitive&, const Primitive&) = default;
};

using DrawList = std::vector<Primitive>;

// Rounds to 4 decimals, the precision of every exported coordinate.
double round4(double v);

DrawList draw_list(const ChartLayout& layout);
DrawList draw_list(const StripLayout& layout);

// Orthographic posterior view of the expanded spine at one time: vertebra
// silhouettes plus the glyphs built by build_glyphs.
struct GlyphStill {
    SpineFrame frame;
    double time = 0.0;
    std::vector<std::pair<std::string, std::vector<std::array<Vec3, 2>>>> silhouettes;
    std::vector<ForceGlyph> glyphs;
};

GlyphConfig glyph_config_for(const SimulationDataset& dataset, double spacing);
GlyphStill glyph_still(const SimulationDataset& dataset, const ViewConfig& config);
DrawList draw_list(const GlyphStill& still);

// Standalone SVG with the canvas as viewBox and width x height as its size.
// Throws ParameterError for a non-positive size.
std::string render_svg(const DrawList& list, double canvas_width, double canvas_height, double width,
                       double height);
std::string export_svg(const ChartLayout& layout, double width, double height);
std::string export_svg(const StripLayout& layout, double width, double height);
std::string export_svg(const GlyphStill& still, double width, double height);

// One export as driven by the CLI. `others` are the comparison dataset
// (charts, facets) or the extra ensemble members (simplified).
std::string export_view(const SimulationDataset& dataset, ExportView view, const ViewConfig& config,
                        const std::vector<const SimulationDataset*>& others = {});

struct ScenePose {
    std::string id;
    std::array<double, 4> rotation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
    std::array<double, 3> translation{};
    std::array<double, 3> expansion{};
    std::string mesh;  // service path

    friend bool operator==(const ScenePose&, const ScenePose&) = default;
};

struct ScenePlane {
    std::string id;
    std::string structure;
    std::string side;
    std::vector<std::vector<std::array<double, 3>>> polygons;  // world
    std::vector<std::string> colors;                           // per sample

    friend bool operator==(const ScenePlane&, const ScenePlane&) = default;
};

struct SceneGlyph {
    std::string disc;
    bool visible = false;
    std::array<double, 3> tail{};
    std::array<double, 3> tip{};
    std::array<double, 3> plane_center{};
    std::array<double, 3> plane_normal{};
    std::array<double, 3> plane_u{};
    std::array<double, 3> plane_v{};
    double plane_radius = 0.0;
    std::vector<std::vector<std::vector<std::array<double, 3>>>> isolines;  // [level][line][point]
    std::vector<std::array<std::array<double, 3>, 4>> trajectory;
    std::vector<std::array<double, 4>> trajectory_opacity;
    double swept_angle = 0.0;
    std::optional<double> shear_angle;

    friend bool operator==(const SceneGlyph&, const SceneGlyph&) = default;
};

struct SceneStrips {
    int bins = 0;
    ValueRange range;
    std::vector<std::string> datasets;

    friend bool operator==(const SceneStrips&, const SceneStrips&) = default;
};

struct SceneDescription {
    int schema_version = kSceneSchemaVersion;
    std::string dataset;
    std::string mode;
    std::string structures;
    std::string attribute;
    double spacing = 0.0;
    int bins = 0;
    bool gridlines = false;
    std::optional<ValueRange> user_range;
    std::vector<std::string> compare;
    double width = 0.0;
    double height = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    std::size_t tick = 0;
    double time = 0.0;
    std::vector<std::string> attributes;
    ValueRange value_range;
    DrawList primitives;
    std::vector<ScenePose> vertebrae;
    std::vector<SceneGlyph> glyphs;
    std::vector<ScenePlane> chart_planes;  // stacked3d only
    std::optional<SceneStrips> strips;     // simplified only
    std::string kinematics;                // service path of the full track

    friend bool operator==(const SceneDescription&, const SceneDescription&) = default;
};

// `compare` holds the comparison dataset (charts2d, stacked3d) or the extra
// ensemble members (simplified).
SceneDescription build_scene(const SimulationDataset& dataset, const ViewConfig& config,
                             const std::vector<const SimulationDataset*>& compare = {});
std::string serialize_scene(const SceneDescription& scene);
// Throws FormatError on malformed documents or another schema version.
SceneDescription parse_scene(std::string_view text);
std::string scene_json(const SimulationDataset& dataset, const ViewConfig& config,
                       const std::vector<const SimulationDataset*>& compare = {});

}  // namespace spineviz
