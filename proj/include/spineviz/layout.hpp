#pragma once

// Anatomically aligned chart layout. Canvas coordinates are pixels with y
// pointing down; the spine is drawn in posterior view, so the patient's
// left (+x in world) is on the canvas left.

#include "spineviz/colormap.hpp"
#include "spineviz/dataset.hpp"
#include "spineviz/math.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spineviz {

enum class ViewMode { Charts2d, Stacked3d, Simplified };
enum class StructureClass { Discs, Facets };
enum class ChartSide { Left, Right };

std::string_view to_string(ViewMode mode);
std::optional<ViewMode> view_mode_from_string(std::string_view text);
std::string_view to_string(StructureClass cls);
std::optional<StructureClass> structure_class_from_string(std::string_view text);
std::string_view to_string(ChartSide side);

inline constexpr double kExpansionGap = 20.0;  // G, mm at spacing 1
inline constexpr int kSimplifiedDefaultBins = 4;

struct ViewConfig {
    ViewMode mode = ViewMode::Charts2d;
    StructureClass structures = StructureClass::Discs;
    double spacing = 0.5;
    double time = 0.0;
    Attribute attribute = Attribute::ForceMagnitude;
    std::optional<ValueRange> range;  // nullopt = auto
    int bins = 0;                     // 0 = continuous
    bool gridlines = false;
    std::string compare;
    double width = 960.0;
    double height = 720.0;

    // Clamps spacing into [0, 1]; throws ParameterError on bins outside
    // {0, 2..16}, an empty user range or a non-positive canvas.
    void normalize();

    friend bool operator==(const ViewConfig&, const ViewConfig&) = default;
};

double mirror_x(double x, double axis_x);

struct VertebraPlacement {
    std::string id;
    std::size_t index = 0;                // 0 = topmost
    Vec3 barycenter = Vec3::Zero();       // rest pose, world
    Vec3 translation = Vec3::Zero();      // expansion offset, world (y up)
    std::vector<Point2> outline;          // rest (x, y) hull, world mm

    friend bool operator==(const VertebraPlacement&, const VertebraPlacement&) = default;
};

// Moves vertebra i down by i * s * G (world y decreases). s is clamped.
std::vector<VertebraPlacement> expand_spine(std::vector<VertebraPlacement> placements, double s, double gap);

// Spine placement and the world -> canvas mapping shared by every 2D view.
struct SpineFrame {
    double width = 0.0;
    double height = 0.0;
    double axis_x = 0.0;
    double px_per_mm = 1.0;
    double top_world_y = 0.0;
    double margin = 24.0;
    double spacing = 0.0;
    std::vector<VertebraPlacement> vertebrae;  // expanded
    double chart_height = 0.0;  // px
    double chart_inner = 0.0;   // distance of the time origin from the axis, px
    double chart_width = 0.0;   // px
    double t0 = 0.0;
    double t1 = 1.0;

    double canvas_x(double world_x) const { return axis_x - world_x * px_per_mm; }
    double canvas_y(double world_y) const { return margin + (top_world_y - world_y) * px_per_mm; }
    // Right-side charts grow rightward from the axis; left-side charts are
    // mirrored so time increases away from it.
    double time_x(ChartSide side, double t) const;
    // Expanded world y of a structure's anatomical anchor: the vertebra's
    // barycenter, or the midpoint of its two vertebrae.
    double anchor_world_y(const StructureRef& ref) const;
    std::vector<Point2> vertebra_outline(std::size_t i) const;  // canvas
};

SpineFrame spine_frame(const SimulationDataset& dataset, const ViewConfig& config);

enum class OverlayMode { Area, Line };

struct OverlaySpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // inclusive
    OverlayMode mode = OverlayMode::Area;

    friend bool operator==(const OverlaySpan&, const OverlaySpan&) = default;
};

struct Overlay {
    std::vector<OverlayMode> modes;
    std::vector<OverlaySpan> spans;
    std::vector<std::vector<Point2>> reference_areas;  // canvas, gray
    std::vector<std::vector<Point2>> lines;            // primary drawn as line, LINE spans

    friend bool operator==(const Overlay&, const Overlay&) = default;
};

// Per sample: LINE iff reference > primary (strict), else AREA; a missing
// sample on either side is AREA. Throws QueryError if the time bases differ.
Overlay overlay_comparison(const std::vector<double>& primary_times, const std::vector<double>& primary,
                           const std::vector<double>& reference_times, const std::vector<double>& reference);

struct Chart {
    std::string structure;
    StructureKind kind = StructureKind::Disc;
    ChartSide side = ChartSide::Right;
    Point2 anchor;            // (time origin x, anatomical anchor y)
    double baseline = 0.0;    // canvas y of value 0
    double top = 0.0;         // canvas y of the full chart height
    double x0 = 0.0;          // time origin
    double x1 = 0.0;          // last time
    bool missing = false;     // no data at all: hatched empty frame
    std::vector<double> values;
    std::vector<Point2> samples;
    std::vector<Rgb> colors;
    std::vector<std::vector<Point2>> areas;  // one polygon per run of present samples
    std::vector<double> gridlines;           // canvas y
    std::optional<Overlay> overlay;

    friend bool operator==(const Chart&, const Chart&) = default;
};

struct CursorMark {
    std::string structure;
    double x = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;
    double value = kMissing;
    std::string label;
    Point2 label_pos;

    friend bool operator==(const CursorMark& a, const CursorMark& b) {
        const bool same_value = (is_missing(a.value) && is_missing(b.value)) || a.value == b.value;
        return a.structure == b.structure && a.x == b.x && a.y0 == b.y0 && a.y1 == b.y1 && same_value &&
               a.label == b.label && a.label_pos == b.label_pos;
    }
};

struct Cursor {
    std::size_t tick = 0;
    double time = 0.0;
    std::vector<CursorMark> marks;

    friend bool operator==(const Cursor&, const Cursor&) = default;
};

struct ChartLayout {
    ViewConfig config;
    SpineFrame frame;
    ValueRange range;
    double px_per_unit = 0.0;  // shared value scale
    std::vector<Chart> charts;
    Cursor cursor;
};

// Charts for config.attribute over the structures selected by
// config.structures. Throws QueryError if the attribute is absent or the
// comparison dataset has another time base.
ChartLayout layout_charts(const SimulationDataset& dataset, const ViewConfig& config,
                          const SimulationDataset* comparison = nullptr);

// Index of the tick nearest to t; ties go to the later tick, t is clamped.
std::size_t snap_tick(const std::vector<double>& times, double t);
std::string format_label(double value);  // "12.35", or "–" when missing
Cursor time_cursor(const ChartLayout& layout, const SimulationDataset& dataset, double t);

struct StripCell {
    double x0 = 0.0;
    double x1 = 0.0;
    int bin = -1;  // -1 = missing
    Rgb color;

    friend bool operator==(const StripCell&, const StripCell&) = default;
};

struct Strip {
    std::string dataset;
    double y0 = 0.0;
    double y1 = 0.0;
    std::vector<StripCell> cells;

    friend bool operator==(const Strip&, const Strip&) = default;
};

struct StripGroup {
    std::string structure;
    ChartSide side = ChartSide::Right;
    Point2 anchor;
    std::vector<Strip> strips;  // one per dataset, top to bottom

    friend bool operator==(const StripGroup&, const StripGroup&) = default;
};

struct StripLayout {
    ViewConfig config;
    SpineFrame frame;
    ValueRange range;
    int bins = kSimplifiedDefaultBins;
    std::vector<StripGroup> groups;
};

// Color-only strips; the spine comes from the first dataset. bins < 2 falls
// back to the default; the auto range is nice_range over all datasets.
StripLayout simplified_strips(const std::vector<const SimulationDataset*>& datasets, const ViewConfig& config);

}  // namespace spineviz
