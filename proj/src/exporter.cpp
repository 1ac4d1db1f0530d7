#include "spineviz/exporter.hpp"

#include "spineviz/errors.hpp"
#include "text_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace spineviz {
namespace {

using detail::format_fixed4;
using ojson = nlohmann::ordered_json;

constexpr const char* kBackground = "#ffffff";
constexpr const char* kVertebraFill = "#e8e2d4";
constexpr const char* kVertebraStroke = "#8c8577";
constexpr const char* kFrameStroke = "#c8c8c8";
constexpr const char* kGridStroke = "#e0e0e0";
constexpr const char* kReferenceFill = "#808080";
constexpr const char* kInk = "#1a1a1a";
constexpr double kReferenceOpacity = 0.85;
constexpr double kStackedDepth = -40.0;  // chart planes sit behind the spine, mm
constexpr int kPlaneSegments = 32;

Primitive make(std::string kind, int layer, std::string role, std::string structure = {}) {
    Primitive p;
    p.kind = std::move(kind);
    p.layer = layer;
    p.role = std::move(role);
    p.structure = std::move(structure);
    return p;
}

Primitive background(double w, double h) {
    Primitive p = make("rect", kLayerBackground, "background");
    p.points = {{0.0, 0.0}, {w, h}};
    p.fill = kBackground;
    return p;
}

void add_vertebrae(DrawList& out, const SpineFrame& f) {
    for (std::size_t i = 0; i < f.vertebrae.size(); ++i) {
        Primitive p = make("polygon", kLayerVertebrae, "vertebra", f.vertebrae[i].id);
        p.points = f.vertebra_outline(i);
        p.fill = kVertebraFill;
        p.stroke = kVertebraStroke;
        p.stroke_width = 0.75;
        out.push_back(std::move(p));
    }
}

Primitive rect(int layer, std::string role, std::string structure, double xa, double ya, double xb, double yb) {
    Primitive p = make("rect", layer, std::move(role), std::move(structure));
    p.points = {{std::min(xa, xb), std::min(ya, yb)}, {std::max(xa, xb), std::max(ya, yb)}};
    return p;
}

// Each sample colors the slice between the midpoints to its neighbours;
// equal neighbouring colors are merged.
Gradient sample_gradient(const Chart& c) {
    Gradient g;
    g.x0 = c.x0;
    g.x1 = c.x1;
    const double span = c.x1 - c.x0;
    auto offset = [&](double x) { return span != 0.0 ? std::clamp((x - c.x0) / span, 0.0, 1.0) : 0.0; };
    const std::size_t n = c.samples.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double a = k == 0 ? 0.0 : offset(0.5 * (c.samples[k - 1].x + c.samples[k].x));
        const double b = k + 1 == n ? 1.0 : offset(0.5 * (c.samples[k].x + c.samples[k + 1].x));
        const std::string color = to_hex(c.colors[k]);
        if (!g.stops.empty() && g.stops.back().color == color) {
            g.stops.back().offset = b;
            continue;
        }
        g.stops.push_back({a, color});
        g.stops.push_back({b, color});
    }
    return g;
}

Point2 project(const SpineFrame& f, const Vec3& v) { return {f.canvas_x(v.x()), f.canvas_y(v.y())}; }

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string points_attr(const std::vector<Point2>& pts) {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) {
            s += ' ';
        }
        s += format_fixed4(pts[i].x);
        s += ',';
        s += format_fixed4(pts[i].y);
    }
    return s;
}

std::array<double, 3> r3(const Vec3& v) { return {round4(v.x()), round4(v.y()), round4(v.z())}; }

std::vector<const SimulationDataset*> with_first(const SimulationDataset& first,
                                                 const std::vector<const SimulationDataset*>& rest) {
    std::vector<const SimulationDataset*> all{&first};
    all.insert(all.end(), rest.begin(), rest.end());
    return all;
}

}  // namespace

std::string_view to_string(ExportView view) {
    switch (view) {
        case ExportView::Charts: return "charts";
        case ExportView::Facets: return "facets";
        case ExportView::Simplified: return "simplified";
        case ExportView::Glyphs: return "glyphs";
    }
    return "charts";
}

std::optional<ExportView> export_view_from_string(std::string_view text) {
    if (text == "charts") return ExportView::Charts;
    if (text == "facets") return ExportView::Facets;
    if (text == "simplified") return ExportView::Simplified;
    if (text == "glyphs") return ExportView::Glyphs;
    return std::nullopt;
}

double round4(double v) {
    const double r = std::round(v * 1e4) / 1e4;
    return r == 0.0 ? 0.0 : r;
}

DrawList draw_list(const ChartLayout& layout) {
    const SpineFrame& f = layout.frame;
    DrawList out;
    out.push_back(background(f.width, f.height));
    add_vertebrae(out, f);

    for (const auto& c : layout.charts) {
        for (double y : c.gridlines) {
            Primitive p = make("line", kLayerGridlines, "gridline", c.structure);
            p.points = {{c.x0, y}, {c.x1, y}};
            p.stroke = kGridStroke;
            p.stroke_width = 0.5;
            out.push_back(std::move(p));
        }

        Primitive frame = rect(kLayerFrames, c.missing ? "frame-missing" : "frame", c.structure, c.x0, c.top, c.x1,
                               c.baseline);
        frame.fill = c.missing ? "hatch" : "none";
        frame.stroke = kFrameStroke;
        frame.stroke_width = 0.5;
        out.push_back(std::move(frame));

        if (!c.areas.empty()) {
            const Gradient g = sample_gradient(c);
            for (const auto& poly : c.areas) {
                Primitive p = make("polygon", kLayerAreas, "area", c.structure);
                p.points = poly;
                p.fill = "gradient";
                p.gradient = g;
                out.push_back(std::move(p));
            }
        }

        if (c.overlay) {
            for (const auto& poly : c.overlay->reference_areas) {
                Primitive p = make("polygon", kLayerComparison, "reference", c.structure);
                p.points = poly;
                p.fill = kReferenceFill;
                p.opacity = kReferenceOpacity;
                out.push_back(std::move(p));
            }
            for (const auto& line : c.overlay->lines) {
                Primitive p = make("polyline", kLayerLines, "occluded", c.structure);
                p.points = line;
                p.stroke = kInk;
                p.stroke_width = 1.25;
                out.push_back(std::move(p));
            }
        }

        Primitive name = make("text", kLayerLabels, "structure-label", c.structure);
        name.points = {{c.x0, c.baseline + 9.0}};
        name.text = c.structure;
        name.anchor = c.side == ChartSide::Right ? "start" : "end";
        out.push_back(std::move(name));
    }

    for (const auto& m : layout.cursor.marks) {
        Primitive line = make("line", kLayerCursor, "cursor", m.structure);
        line.points = {{m.x, m.y0}, {m.x, m.y1}};
        line.stroke = "#000000";
        line.stroke_width = 1.0;
        out.push_back(std::move(line));

        Primitive label = make("text", kLayerLabels, "value-label", m.structure);
        label.points = {m.label_pos};
        label.text = m.label;
        label.anchor = m.label_pos.x >= m.x ? "start" : "end";
        out.push_back(std::move(label));
    }

    std::stable_sort(out.begin(), out.end(), [](const Primitive& a, const Primitive& b) { return a.layer < b.layer; });
    return out;
}

DrawList draw_list(const StripLayout& layout) {
    const SpineFrame& f = layout.frame;
    DrawList out;
    out.push_back(background(f.width, f.height));
    add_vertebrae(out, f);

    for (const auto& g : layout.groups) {
        if (g.strips.empty()) {
            continue;
        }
        const double x0 = f.time_x(g.side, f.t0);
        const double x1 = f.time_x(g.side, f.t1);
        Primitive frame = rect(kLayerFrames, "frame", g.structure, x0, g.strips.front().y0, x1, g.strips.back().y1);
        frame.stroke = kFrameStroke;
        frame.stroke_width = 0.5;
        out.push_back(std::move(frame));

        for (const auto& s : g.strips) {
            // Runs of equal bins become one rectangle.
            std::size_t k = 0;
            while (k < s.cells.size()) {
                std::size_t e = k;
                while (e + 1 < s.cells.size() && s.cells[e + 1].bin == s.cells[k].bin) {
                    ++e;
                }
                Primitive p = rect(kLayerAreas, s.cells[k].bin < 0 ? "strip-missing" : "strip", g.structure,
                                   s.cells[k].x0, s.y0, s.cells[e].x1, s.y1);
                p.fill = s.cells[k].bin < 0 ? "hatch" : to_hex(s.cells[k].color);
                p.dataset = s.dataset;
                out.push_back(std::move(p));
                k = e + 1;
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Primitive& a, const Primitive& b) { return a.layer < b.layer; });
    return out;
}

GlyphConfig glyph_config_for(const SimulationDataset& dataset, double spacing) {
    GlyphConfig cfg;
    cfg.spacing = std::clamp(spacing, 0.0, 1.0);
    cfg.length = glyph_length(dataset);
    return cfg;
}

GlyphStill glyph_still(const SimulationDataset& dataset, const ViewConfig& config) {
    ViewConfig cfg = config;
    cfg.normalize();
    GlyphStill still;
    still.frame = spine_frame(dataset, cfg);
    const auto& times = dataset.times();
    still.time = times.empty() ? 0.0 : times[snap_tick(times, cfg.time)];
    const Vec3 view(0.0, 0.0, -1.0);  // posterior viewer
    for (const auto& v : still.frame.vertebrae) {
        const Mesh* mesh = dataset.mesh(v.id);
        if (mesh == nullptr) {
            continue;
        }
        std::vector<std::array<Vec3, 2>> edges;
        for (const auto& e : silhouette(*mesh, view)) {
            edges.push_back({mesh->vertices[static_cast<std::size_t>(e.a)] + v.translation,
                             mesh->vertices[static_cast<std::size_t>(e.b)] + v.translation});
        }
        still.silhouettes.emplace_back(v.id, std::move(edges));
    }
    still.glyphs = build_glyphs(dataset, cfg.time, glyph_config_for(dataset, cfg.spacing));
    return still;
}

DrawList draw_list(const GlyphStill& still) {
    const SpineFrame& f = still.frame;
    DrawList out;
    out.push_back(background(f.width, f.height));
    for (const auto& [id, edges] : still.silhouettes) {
        for (const auto& e : edges) {
            Primitive p = make("line", kLayerVertebrae, "silhouette", id);
            p.points = {project(f, e[0]), project(f, e[1])};
            p.stroke = "#555555";
            p.stroke_width = 0.75;
            out.push_back(std::move(p));
        }
    }
    for (const auto& g : still.glyphs) {
        if (!g.has_force) {
            continue;
        }
        for (const auto& level : g.isolines.polylines) {
            for (const auto& line : level) {
                Primitive p = make("polyline", kLayerLines, "isoline", g.disc);
                for (const auto& v : line) {
                    p.points.push_back(project(f, v));
                }
                p.stroke = "#1b9e77";
                p.stroke_width = 0.75;
                out.push_back(std::move(p));
            }
        }
        if (!g.visible) {
            continue;
        }
        for (std::size_t q = 0; q < g.trajectory.quads.size(); ++q) {
            Primitive p = make("polygon", kLayerAreas, "trajectory", g.disc);
            for (const auto& v : g.trajectory.quads[q]) {
                p.points.push_back(project(f, v));
            }
            const auto& o = g.trajectory.opacity[q];
            p.fill = "#d95f02";
            p.opacity = 0.5 * (o[0] + o[1] + o[2] + o[3]) / 4.0;
            out.push_back(std::move(p));
        }

        Primitive plane = make("polygon", kLayerComparison, "force-plane", g.disc);
        for (int i = 0; i < kPlaneSegments; ++i) {
            const double a = 2.0 * kPi * i / kPlaneSegments;
            plane.points.push_back(project(
                f, g.plane.center + g.plane.radius * (std::cos(a) * g.plane.u + std::sin(a) * g.plane.v)));
        }
        plane.fill = "#7570b3";
        plane.opacity = 0.5;
        plane.stroke = "#4b4784";
        plane.stroke_width = 0.5;
        out.push_back(std::move(plane));

        const Point2 tail = project(f, g.tail);
        const Point2 tip = project(f, g.tip);
        Primitive shaft = make("line", kLayerLines, "arrow", g.disc);
        shaft.points = {tail, tip};
        shaft.stroke = "#000000";
        shaft.stroke_width = 1.5;
        out.push_back(std::move(shaft));

        const double dx = tip.x - tail.x;
        const double dy = tip.y - tail.y;
        const double len = std::hypot(dx, dy);
        if (len > 1e-9) {
            const double ux = dx / len;
            const double uy = dy / len;
            const double head = std::min(5.0, 0.5 * len);
            Primitive p = make("polygon", kLayerLines, "arrowhead", g.disc);
            p.points = {tip,
                        {tip.x - head * ux - 0.5 * head * uy, tip.y - head * uy + 0.5 * head * ux},
                        {tip.x - head * ux + 0.5 * head * uy, tip.y - head * uy - 0.5 * head * ux}};
            p.fill = "#000000";
            out.push_back(std::move(p));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Primitive& a, const Primitive& b) { return a.layer < b.layer; });
    return out;
}

std::string render_svg(const DrawList& list, double canvas_width, double canvas_height, double width,
                       double height) {
    if (!(width > 0.0) || !(height > 0.0) || !(canvas_width > 0.0) || !(canvas_height > 0.0)) {
        throw ParameterError("SVG canvas must have a positive size");
    }
    std::string defs;
    defs += "<pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\" "
            "patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#909090\" "
            "stroke-width=\"1.5\"/></pattern>\n";

    std::string body;
    int gradients = 0;
    for (const auto& p : list) {
        std::string fill = p.fill;
        if (fill == "hatch") {
            fill = "url(#hatch)";
        } else if (p.gradient) {
            const std::string id = "g" + std::to_string(gradients++);
            defs += "<linearGradient id=\"" + id + "\" gradientUnits=\"userSpaceOnUse\" x1=\"" +
                    format_fixed4(p.gradient->x0) + "\" y1=\"0.0000\" x2=\"" + format_fixed4(p.gradient->x1) +
                    "\" y2=\"0.0000\">";
            for (const auto& s : p.gradient->stops) {
                defs += "<stop offset=\"" + format_fixed4(s.offset) + "\" stop-color=\"" + s.color + "\"/>";
            }
            defs += "</linearGradient>\n";
            fill = "url(#" + id + ")";
        }
        std::string common = " class=\"" + xml_escape(p.role) + "\"";
        if (!p.structure.empty()) {
            common += " data-structure=\"" + xml_escape(p.structure) + "\"";
        }
        if (!p.dataset.empty()) {
            common += " data-dataset=\"" + xml_escape(p.dataset) + "\"";
        }
        std::string paint = " fill=\"" + fill + "\"";
        if (p.opacity != 1.0) {
            paint += " fill-opacity=\"" + format_fixed4(p.opacity) + "\"";
        }
        if (p.stroke != "none") {
            paint += " stroke=\"" + p.stroke + "\" stroke-width=\"" + format_fixed4(p.stroke_width) + "\"";
        }

        if (p.kind == "rect" && p.points.size() == 2) {
            body += "<rect" + common + " x=\"" + format_fixed4(p.points[0].x) + "\" y=\"" +
                    format_fixed4(p.points[0].y) + "\" width=\"" + format_fixed4(p.points[1].x - p.points[0].x) +
                    "\" height=\"" + format_fixed4(p.points[1].y - p.points[0].y) + "\"" + paint + "/>\n";
        } else if (p.kind == "polygon") {
            body += "<polygon" + common + " points=\"" + points_attr(p.points) + "\"" + paint + "/>\n";
        } else if (p.kind == "polyline") {
            body += "<polyline" + common + " points=\"" + points_attr(p.points) + "\" fill=\"none\" stroke=\"" +
                    p.stroke + "\" stroke-width=\"" + format_fixed4(p.stroke_width) + "\"/>\n";
        } else if (p.kind == "line" && p.points.size() == 2) {
            body += "<line" + common + " x1=\"" + format_fixed4(p.points[0].x) + "\" y1=\"" +
                    format_fixed4(p.points[0].y) + "\" x2=\"" + format_fixed4(p.points[1].x) + "\" y2=\"" +
                    format_fixed4(p.points[1].y) + "\" stroke=\"" + p.stroke + "\" stroke-width=\"" +
                    format_fixed4(p.stroke_width) + "\"/>\n";
        } else if (p.kind == "text" && !p.points.empty()) {
            body += "<text" + common + " x=\"" + format_fixed4(p.points[0].x) + "\" y=\"" +
                    format_fixed4(p.points[0].y) + "\" text-anchor=\"" + (p.anchor.empty() ? "start" : p.anchor) +
                    "\" font-family=\"sans-serif\" font-size=\"8.0000\">" + xml_escape(p.text) + "</text>\n";
        }
    }

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed4(width) + "\" height=\"" +
           format_fixed4(height) + "\" viewBox=\"0.0000 0.0000 " + format_fixed4(canvas_width) + " " +
           format_fixed4(canvas_height) + "\">\n";
    svg += "<defs>\n" + defs + "</defs>\n";
    svg += body;
    svg += "</svg>\n";
    return svg;
}

std::string export_svg(const ChartLayout& layout, double width, double height) {
    return render_svg(draw_list(layout), layout.frame.width, layout.frame.height, width, height);
}

std::string export_svg(const StripLayout& layout, double width, double height) {
    return render_svg(draw_list(layout), layout.frame.width, layout.frame.height, width, height);
}

std::string export_svg(const GlyphStill& still, double width, double height) {
    return render_svg(draw_list(still), still.frame.width, still.frame.height, width, height);
}

std::string export_view(const SimulationDataset& dataset, ExportView view, const ViewConfig& config,
                        const std::vector<const SimulationDataset*>& others) {
    ViewConfig cfg = config;
    switch (view) {
        case ExportView::Charts:
        case ExportView::Facets: {
            cfg.mode = ViewMode::Charts2d;
            cfg.structures = view == ExportView::Charts ? StructureClass::Discs : StructureClass::Facets;
            const auto layout = layout_charts(dataset, cfg, others.empty() ? nullptr : others.front());
            return export_svg(layout, layout.frame.width, layout.frame.height);
        }
        case ExportView::Simplified: {
            const auto layout = simplified_strips(with_first(dataset, others), cfg);
            return export_svg(layout, layout.frame.width, layout.frame.height);
        }
        case ExportView::Glyphs: {
            const auto still = glyph_still(dataset, cfg);
            return export_svg(still, still.frame.width, still.frame.height);
        }
    }
    throw ParameterError("unknown export view");
}

// ---------------------------------------------------------------------------
// Scene document

namespace {

Primitive rounded(Primitive p) {
    for (auto& pt : p.points) {
        pt = {round4(pt.x), round4(pt.y)};
    }
    p.stroke_width = round4(p.stroke_width);
    p.opacity = round4(p.opacity);
    if (p.gradient) {
        p.gradient->x0 = round4(p.gradient->x0);
        p.gradient->x1 = round4(p.gradient->x1);
        for (auto& s : p.gradient->stops) {
            s.offset = round4(s.offset);
        }
    }
    return p;
}

SceneGlyph scene_glyph(const ForceGlyph& g) {
    SceneGlyph s;
    s.disc = g.disc;
    s.visible = g.visible;
    s.tail = r3(g.tail);
    s.tip = r3(g.tip);
    s.plane_center = r3(g.plane.center);
    s.plane_normal = r3(g.plane.normal);
    s.plane_u = r3(g.plane.u);
    s.plane_v = r3(g.plane.v);
    s.plane_radius = round4(g.plane.radius);
    for (const auto& level : g.isolines.polylines) {
        auto& lines = s.isolines.emplace_back();
        for (const auto& line : level) {
            auto& pts = lines.emplace_back();
            for (const auto& v : line) {
                pts.push_back(r3(v));
            }
        }
    }
    for (std::size_t q = 0; q < g.trajectory.quads.size(); ++q) {
        const auto& quad = g.trajectory.quads[q];
        s.trajectory.push_back({r3(quad[0]), r3(quad[1]), r3(quad[2]), r3(quad[3])});
        const auto& o = g.trajectory.opacity[q];
        s.trajectory_opacity.push_back({round4(o[0]), round4(o[1]), round4(o[2]), round4(o[3])});
    }
    s.swept_angle = round4(g.trajectory.swept_angle);
    if (g.shear_angle) {
        s.shear_angle = round4(*g.shear_angle);
    }
    return s;
}

// Charts lifted onto a world plane behind the spine.
std::vector<ScenePlane> chart_planes(const ChartLayout& layout) {
    const SpineFrame& f = layout.frame;
    auto lift = [&](const Point2& p) {
        const Vec3 w((f.axis_x - p.x) / f.px_per_mm, f.top_world_y - (p.y - f.margin) / f.px_per_mm, kStackedDepth);
        return r3(w);
    };
    std::vector<ScenePlane> out;
    for (const auto& c : layout.charts) {
        ScenePlane plane;
        plane.id = "plane-" + c.structure;
        plane.structure = c.structure;
        plane.side = std::string(to_string(c.side));
        for (const auto& poly : c.areas) {
            auto& pts = plane.polygons.emplace_back();
            for (const auto& p : poly) {
                pts.push_back(lift(p));
            }
        }
        for (const auto& col : c.colors) {
            plane.colors.push_back(to_hex(col));
        }
        out.push_back(std::move(plane));
    }
    return out;
}

template <std::size_t N>
ojson arr(const std::array<double, N>& a) {
    ojson j = ojson::array();
    for (double v : a) {
        j.push_back(v);
    }
    return j;
}

template <std::size_t N>
std::array<double, N> get_arr(const ojson& j) {
    if (!j.is_array() || j.size() != N) {
        throw FormatError("scene: expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> a{};
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = j[i].get<double>();
    }
    return a;
}

ojson primitive_json(const Primitive& p) {
    ojson pts = ojson::array();
    for (const auto& pt : p.points) {
        pts.push_back({pt.x, pt.y});
    }
    ojson j;
    j["kind"] = p.kind;
    j["layer"] = p.layer;
    j["role"] = p.role;
    j["structure"] = p.structure;
    j["dataset"] = p.dataset;
    j["points"] = std::move(pts);
    j["fill"] = p.fill;
    j["stroke"] = p.stroke;
    j["stroke_width"] = p.stroke_width;
    j["opacity"] = p.opacity;
    j["text"] = p.text;
    j["anchor"] = p.anchor;
    if (p.gradient) {
        ojson stops = ojson::array();
        for (const auto& s : p.gradient->stops) {
            stops.push_back({s.offset, s.color});
        }
        j["gradient"] = {{"x0", p.gradient->x0}, {"x1", p.gradient->x1}, {"stops", std::move(stops)}};
    } else {
        j["gradient"] = nullptr;
    }
    return j;
}

Primitive primitive_from(const ojson& j) {
    Primitive p;
    p.kind = j.at("kind").get<std::string>();
    p.layer = j.at("layer").get<int>();
    p.role = j.at("role").get<std::string>();
    p.structure = j.at("structure").get<std::string>();
    p.dataset = j.at("dataset").get<std::string>();
    for (const auto& pt : j.at("points")) {
        const auto a = get_arr<2>(pt);
        p.points.push_back({a[0], a[1]});
    }
    p.fill = j.at("fill").get<std::string>();
    p.stroke = j.at("stroke").get<std::string>();
    p.stroke_width = j.at("stroke_width").get<double>();
    p.opacity = j.at("opacity").get<double>();
    p.text = j.at("text").get<std::string>();
    p.anchor = j.at("anchor").get<std::string>();
    if (const auto& g = j.at("gradient"); !g.is_null()) {
        Gradient grad;
        grad.x0 = g.at("x0").get<double>();
        grad.x1 = g.at("x1").get<double>();
        for (const auto& s : g.at("stops")) {
            grad.stops.push_back({s.at(0).get<double>(), s.at(1).get<std::string>()});
        }
        p.gradient = std::move(grad);
    }
    return p;
}

ojson points3(const std::vector<std::array<double, 3>>& pts) {
    ojson j = ojson::array();
    for (const auto& p : pts) {
        j.push_back(arr(p));
    }
    return j;
}

std::vector<std::array<double, 3>> points3_from(const ojson& j) {
    std::vector<std::array<double, 3>> out;
    for (const auto& p : j) {
        out.push_back(get_arr<3>(p));
    }
    return out;
}

ojson glyph_json(const SceneGlyph& g) {
    ojson iso = ojson::array();
    for (const auto& level : g.isolines) {
        ojson lines = ojson::array();
        for (const auto& line : level) {
            lines.push_back(points3(line));
        }
        iso.push_back(std::move(lines));
    }
    ojson quads = ojson::array();
    for (const auto& q : g.trajectory) {
        quads.push_back(points3({q.begin(), q.end()}));
    }
    ojson opacity = ojson::array();
    for (const auto& o : g.trajectory_opacity) {
        opacity.push_back(arr(o));
    }
    ojson j;
    j["disc"] = g.disc;
    j["visible"] = g.visible;
    j["tail"] = arr(g.tail);
    j["tip"] = arr(g.tip);
    j["plane"] = {{"center", arr(g.plane_center)},
                  {"normal", arr(g.plane_normal)},
                  {"u", arr(g.plane_u)},
                  {"v", arr(g.plane_v)},
                  {"radius", g.plane_radius}};
    j["isolines"] = std::move(iso);
    j["trajectory"] = {{"quads", std::move(quads)}, {"opacity", std::move(opacity)}, {"swept_angle", g.swept_angle}};
    j["shear_angle"] = g.shear_angle ? ojson(*g.shear_angle) : ojson(nullptr);
    return j;
}

SceneGlyph glyph_from(const ojson& j) {
    SceneGlyph g;
    g.disc = j.at("disc").get<std::string>();
    g.visible = j.at("visible").get<bool>();
    g.tail = get_arr<3>(j.at("tail"));
    g.tip = get_arr<3>(j.at("tip"));
    const auto& plane = j.at("plane");
    g.plane_center = get_arr<3>(plane.at("center"));
    g.plane_normal = get_arr<3>(plane.at("normal"));
    g.plane_u = get_arr<3>(plane.at("u"));
    g.plane_v = get_arr<3>(plane.at("v"));
    g.plane_radius = plane.at("radius").get<double>();
    for (const auto& level : j.at("isolines")) {
        auto& lines = g.isolines.emplace_back();
        for (const auto& line : level) {
            lines.push_back(points3_from(line));
        }
    }
    const auto& traj = j.at("trajectory");
    for (const auto& q : traj.at("quads")) {
        const auto pts = points3_from(q);
        if (pts.size() != 4) {
            throw FormatError("scene: trajectory quads need 4 points");
        }
        g.trajectory.push_back({pts[0], pts[1], pts[2], pts[3]});
    }
    for (const auto& o : traj.at("opacity")) {
        g.trajectory_opacity.push_back(get_arr<4>(o));
    }
    g.swept_angle = traj.at("swept_angle").get<double>();
    if (const auto& s = j.at("shear_angle"); !s.is_null()) {
        g.shear_angle = s.get<double>();
    }
    return g;
}

}  // namespace

SceneDescription build_scene(const SimulationDataset& dataset, const ViewConfig& config,
                             const std::vector<const SimulationDataset*>& compare) {
    ViewConfig cfg = config;
    if (cfg.mode == ViewMode::Simplified && cfg.bins < 2) {
        cfg.bins = kSimplifiedDefaultBins;
    }
    cfg.normalize();

    SceneDescription s;
    s.dataset = dataset.manifest.id;
    s.mode = std::string(to_string(cfg.mode));
    s.structures = std::string(to_string(cfg.structures));
    s.attribute = std::string(to_string(cfg.attribute));
    s.spacing = round4(cfg.spacing);
    s.bins = cfg.bins;
    s.gridlines = cfg.gridlines;
    if (cfg.range) {
        s.user_range = ValueRange{round4(cfg.range->lo), round4(cfg.range->hi)};
    }
    for (const auto* ds : compare) {
        s.compare.push_back(ds->manifest.id);
    }
    s.width = round4(cfg.width);
    s.height = round4(cfg.height);
    const auto& times = dataset.times();
    if (!times.empty()) {
        s.t0 = round4(times.front());
        s.t1 = round4(times.back());
        s.tick = snap_tick(times, cfg.time);
        s.time = round4(times[s.tick]);
    }
    for (Attribute a : dataset.attributes()) {
        s.attributes.emplace_back(to_string(a));
    }

    SpineFrame frame;
    DrawList list;
    if (cfg.mode == ViewMode::Simplified) {
        const auto strips = simplified_strips(with_first(dataset, compare), cfg);
        frame = strips.frame;
        list = draw_list(strips);
        s.value_range = {round4(strips.range.lo), round4(strips.range.hi)};
        SceneStrips info;
        info.bins = strips.bins;
        info.range = s.value_range;
        for (const auto* ds : with_first(dataset, compare)) {
            info.datasets.push_back(ds->manifest.id);
        }
        s.strips = std::move(info);
    } else {
        const auto layout = layout_charts(dataset, cfg, compare.empty() ? nullptr : compare.front());
        frame = layout.frame;
        list = draw_list(layout);
        s.value_range = {round4(layout.range.lo), round4(layout.range.hi)};
        if (cfg.mode == ViewMode::Stacked3d) {
            s.chart_planes = chart_planes(layout);
        }
    }
    for (auto& p : list) {
        s.primitives.push_back(rounded(std::move(p)));
    }

    const std::string base = "/datasets/" + dataset.manifest.id;
    for (const auto& v : frame.vertebrae) {
        ScenePose pose;
        pose.id = v.id;
        if (dataset.kinematics && dataset.kinematics->rows() > 0) {
            const auto& track = *dataset.kinematics;
            if (const auto b = track.body_index(v.id)) {
                const auto& rp = track.pose(std::min(s.tick, track.rows() - 1), *b);
                const Quat q = rp.rotation;
                pose.rotation = {round4(q.w()), round4(q.x()), round4(q.y()), round4(q.z())};
                pose.translation = r3(rp.translation);
            }
        }
        pose.expansion = r3(v.translation);
        pose.mesh = dataset.mesh(v.id) != nullptr ? base + "/mesh/" + v.id : std::string{};
        s.vertebrae.push_back(std::move(pose));
    }

    for (const auto& g : build_glyphs(dataset, cfg.time, glyph_config_for(dataset, cfg.spacing))) {
        if (g.has_force) {
            s.glyphs.push_back(scene_glyph(g));
        }
    }
    s.kinematics = dataset.kinematics ? base + "/kinematics" : std::string{};
    return s;
}

std::string serialize_scene(const SceneDescription& s) {
    ojson j;
    j["schema_version"] = s.schema_version;
    j["dataset"] = s.dataset;
    ojson cfg;
    cfg["mode"] = s.mode;
    cfg["structures"] = s.structures;
    cfg["attribute"] = s.attribute;
    cfg["spacing"] = s.spacing;
    cfg["bins"] = s.bins;
    cfg["gridlines"] = s.gridlines;
    cfg["range"] = s.user_range ? ojson::array({s.user_range->lo, s.user_range->hi}) : ojson(nullptr);
    cfg["compare"] = s.compare;
    j["config"] = std::move(cfg);
    j["canvas"] = {{"width", s.width}, {"height", s.height}};
    j["time_range"] = {s.t0, s.t1};
    j["tick"] = s.tick;
    j["time"] = s.time;
    j["attributes"] = s.attributes;
    j["value_range"] = {s.value_range.lo, s.value_range.hi};
    ojson prims = ojson::array();
    for (const auto& p : s.primitives) {
        prims.push_back(primitive_json(p));
    }
    j["primitives"] = std::move(prims);
    ojson verts = ojson::array();
    for (const auto& v : s.vertebrae) {
        verts.push_back({{"id", v.id},
                         {"rotation", arr(v.rotation)},
                         {"translation", arr(v.translation)},
                         {"expansion", arr(v.expansion)},
                         {"mesh", v.mesh}});
    }
    j["vertebrae"] = std::move(verts);
    ojson glyphs = ojson::array();
    for (const auto& g : s.glyphs) {
        glyphs.push_back(glyph_json(g));
    }
    j["glyphs"] = std::move(glyphs);
    ojson planes = ojson::array();
    for (const auto& p : s.chart_planes) {
        ojson polys = ojson::array();
        for (const auto& poly : p.polygons) {
            polys.push_back(points3(poly));
        }
        planes.push_back({{"id", p.id},
                          {"structure", p.structure},
                          {"side", p.side},
                          {"polygons", std::move(polys)},
                          {"colors", p.colors}});
    }
    j["chart_planes"] = std::move(planes);
    if (s.strips) {
        j["strips"] = {{"bins", s.strips->bins},
                       {"range", {s.strips->range.lo, s.strips->range.hi}},
                       {"datasets", s.strips->datasets}};
    } else {
        j["strips"] = nullptr;
    }
    j["kinematics"] = s.kinematics;
    return j.dump();
}

SceneDescription parse_scene(std::string_view text) {
    try {
        const ojson j = ojson::parse(text);
        SceneDescription s;
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != kSceneSchemaVersion) {
            throw FormatError("scene: unsupported schema_version " + std::to_string(s.schema_version));
        }
        s.dataset = j.at("dataset").get<std::string>();
        const auto& cfg = j.at("config");
        s.mode = cfg.at("mode").get<std::string>();
        s.structures = cfg.at("structures").get<std::string>();
        s.attribute = cfg.at("attribute").get<std::string>();
        s.spacing = cfg.at("spacing").get<double>();
        s.bins = cfg.at("bins").get<int>();
        s.gridlines = cfg.at("gridlines").get<bool>();
        if (const auto& r = cfg.at("range"); !r.is_null()) {
            const auto a = get_arr<2>(r);
            s.user_range = ValueRange{a[0], a[1]};
        }
        s.compare = cfg.at("compare").get<std::vector<std::string>>();
        s.width = j.at("canvas").at("width").get<double>();
        s.height = j.at("canvas").at("height").get<double>();
        const auto tr = get_arr<2>(j.at("time_range"));
        s.t0 = tr[0];
        s.t1 = tr[1];
        s.tick = j.at("tick").get<std::size_t>();
        s.time = j.at("time").get<double>();
        s.attributes = j.at("attributes").get<std::vector<std::string>>();
        const auto vr = get_arr<2>(j.at("value_range"));
        s.value_range = {vr[0], vr[1]};
        for (const auto& p : j.at("primitives")) {
            s.primitives.push_back(primitive_from(p));
        }
        for (const auto& v : j.at("vertebrae")) {
            ScenePose pose;
            pose.id = v.at("id").get<std::string>();
            pose.rotation = get_arr<4>(v.at("rotation"));
            pose.translation = get_arr<3>(v.at("translation"));
            pose.expansion = get_arr<3>(v.at("expansion"));
            pose.mesh = v.at("mesh").get<std::string>();
            s.vertebrae.push_back(std::move(pose));
        }
        for (const auto& g : j.at("glyphs")) {
            s.glyphs.push_back(glyph_from(g));
        }
        for (const auto& p : j.at("chart_planes")) {
            ScenePlane plane;
            plane.id = p.at("id").get<std::string>();
            plane.structure = p.at("structure").get<std::string>();
            plane.side = p.at("side").get<std::string>();
            for (const auto& poly : p.at("polygons")) {
                plane.polygons.push_back(points3_from(poly));
            }
            plane.colors = p.at("colors").get<std::vector<std::string>>();
            s.chart_planes.push_back(std::move(plane));
        }
        if (const auto& st = j.at("strips"); !st.is_null()) {
            SceneStrips info;
            info.bins = st.at("bins").get<int>();
            const auto r = get_arr<2>(st.at("range"));
            info.range = {r[0], r[1]};
            info.datasets = st.at("datasets").get<std::vector<std::string>>();
            s.strips = std::move(info);
        }
        s.kinematics = j.at("kinematics").get<std::string>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scene: ") + e.what());
    }
}

std::string scene_json(const SimulationDataset& dataset, const ViewConfig& config,
                       const std::vector<const SimulationDataset*>& compare) {
    return serialize_scene(build_scene(dataset, config, compare));
}

}  // namespace spineviz
