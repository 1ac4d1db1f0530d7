#include "spineviz/layout.hpp"

#include "spineviz/errors.hpp"
#include "spineviz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace spineviz {
namespace {

constexpr double kVertebraPitch = 18.0;  // fallback spacing without meshes, mm
constexpr double kChartFill = 0.8;       // chart height / tightest vertebra gap
constexpr double kChartClearance = 8.0;  // px between spine and time origin
const Rgb kMissingColor{0.6, 0.6, 0.6};

bool selected(StructureClass cls, StructureKind kind) {
    if (cls == StructureClass::Discs) {
        return kind == StructureKind::Disc;
    }
    return kind == StructureKind::FacetLeft || kind == StructureKind::FacetRight;
}

// Structures charted for (attribute, class), in registry order.
std::vector<const StructureRef*> charted_structures(const SimulationDataset& dataset, Attribute attribute,
                                                    StructureClass cls) {
    const auto kinds = expected_kinds(attribute);
    std::vector<const StructureRef*> out;
    for (const auto& ref : dataset.registry.all()) {
        if (selected(cls, ref.kind) && std::find(kinds.begin(), kinds.end(), ref.kind) != kinds.end()) {
            out.push_back(&ref);
        }
    }
    return out;
}

std::vector<double> series_for(const ValueMatrix* matrix, std::string_view structure, std::size_t rows) {
    if (matrix != nullptr) {
        if (auto col = matrix->column_index(structure)) {
            return matrix->magnitude_series(*col);
        }
    }
    return std::vector<double>(rows, kMissing);
}

bool all_missing(const std::vector<double>& values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return is_missing(v); });
}

double series_max(const std::vector<double>& values) {
    double m = 0.0;
    for (double v : values) {
        if (!is_missing(v)) {
            m = std::max(m, v);
        }
    }
    return m;
}

ChartSide side_of(StructureKind kind) { return kind == StructureKind::FacetLeft ? ChartSide::Left : ChartSide::Right; }

// Closed polygons over each run of present samples, dropped to the baseline
// at both ends.
std::vector<std::vector<Point2>> area_runs(const std::vector<Point2>& samples, const std::vector<double>& values,
                                           double baseline) {
    std::vector<std::vector<Point2>> out;
    std::vector<Point2> run;
    auto flush = [&] {
        if (!run.empty()) {
            std::vector<Point2> poly;
            poly.reserve(run.size() + 2);
            poly.push_back({run.front().x, baseline});
            poly.insert(poly.end(), run.begin(), run.end());
            poly.push_back({run.back().x, baseline});
            out.push_back(std::move(poly));
            run.clear();
        }
    };
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (is_missing(values[k])) {
            flush();
        } else {
            run.push_back(samples[k]);
        }
    }
    flush();
    return out;
}

Point2 midpoint(const Point2& a, const Point2& b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

}  // namespace

std::string_view to_string(ViewMode mode) {
    switch (mode) {
        case ViewMode::Charts2d: return "charts2d";
        case ViewMode::Stacked3d: return "stacked3d";
        case ViewMode::Simplified: return "simplified";
    }
    return "charts2d";
}

std::optional<ViewMode> view_mode_from_string(std::string_view text) {
    if (text == "charts2d") return ViewMode::Charts2d;
    if (text == "stacked3d") return ViewMode::Stacked3d;
    if (text == "simplified") return ViewMode::Simplified;
    return std::nullopt;
}

std::string_view to_string(StructureClass cls) { return cls == StructureClass::Discs ? "discs" : "facets"; }

std::optional<StructureClass> structure_class_from_string(std::string_view text) {
    if (text == "discs") return StructureClass::Discs;
    if (text == "facets") return StructureClass::Facets;
    return std::nullopt;
}

std::string_view to_string(ChartSide side) { return side == ChartSide::Left ? "left" : "right"; }

void ViewConfig::normalize() {
    spacing = std::isnan(spacing) ? 0.0 : std::clamp(spacing, 0.0, 1.0);
    if (!std::isfinite(time)) {
        time = 0.0;
    }
    if (bins != 0 && (bins < 2 || bins > 16)) {
        throw ParameterError("bins must be 0 or within 2..16");
    }
    if (range && !(range->hi > range->lo)) {
        throw ParameterError("value range must satisfy lo < hi");
    }
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ParameterError("canvas size must be positive");
    }
}

double mirror_x(double x, double axis_x) { return 2.0 * axis_x - x; }

std::vector<VertebraPlacement> expand_spine(std::vector<VertebraPlacement> placements, double s, double gap) {
    s = std::clamp(s, 0.0, 1.0);
    for (auto& p : placements) {
        p.translation.y() -= static_cast<double>(p.index) * s * gap;
    }
    return placements;
}

double SpineFrame::time_x(ChartSide side, double t) const {
    const double right = axis_x + chart_inner + (t - t0) / (t1 - t0) * chart_width;
    return side == ChartSide::Right ? right : mirror_x(right, axis_x);
}

double SpineFrame::anchor_world_y(const StructureRef& ref) const {
    auto y_of = [&](std::string_view id) {
        for (const auto& v : vertebrae) {
            if (v.id == id) {
                return v.barycenter.y() + v.translation.y();
            }
        }
        throw QueryError("unknown vertebra: " + std::string(id));
    };
    if (ref.kind == StructureKind::Vertebra) {
        return y_of(ref.id);
    }
    return 0.5 * (y_of(ref.cranial) + y_of(ref.caudal));
}

std::vector<Point2> SpineFrame::vertebra_outline(std::size_t i) const {
    const auto& v = vertebrae.at(i);
    std::vector<Point2> out;
    out.reserve(v.outline.size());
    for (const auto& p : v.outline) {
        out.push_back({canvas_x(p.x + v.translation.x()), canvas_y(p.y + v.translation.y())});
    }
    return out;
}

SpineFrame spine_frame(const SimulationDataset& dataset, const ViewConfig& config) {
    SpineFrame f;
    f.width = config.width;
    f.height = config.height;
    f.axis_x = 0.5 * config.width;
    f.spacing = std::clamp(config.spacing, 0.0, 1.0);

    const auto& ids = dataset.registry.vertebrae();
    const std::size_t n = ids.size();
    std::vector<VertebraPlacement> rest;
    rest.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        VertebraPlacement p;
        p.id = ids[i];
        p.index = i;
        if (const Mesh* mesh = dataset.mesh(ids[i])) {
            p.barycenter = barycenter(*mesh);
            p.outline = projected_outline(*mesh);
        } else {
            const double y = static_cast<double>(n - 1 - i) * kVertebraPitch;
            p.barycenter = Vec3(0.0, y, 0.0);
            p.outline = {{-8.0, y - 7.0}, {8.0, y - 7.0}, {8.0, y + 7.0}, {-8.0, y + 7.0}};
        }
        rest.push_back(std::move(p));
    }

    // The scale is fixed by the fully expanded spine so that moving the
    // spacing slider never rescales the view.
    double top = 0.0;
    double bottom = 0.0;
    double half_width = 0.0;
    bool first = true;
    for (const auto& p : rest) {
        const double drop = static_cast<double>(p.index) * kExpansionGap;
        for (const auto& q : p.outline) {
            if (first) {
                top = q.y;
                bottom = q.y - drop;
                first = false;
            }
            top = std::max(top, q.y);
            bottom = std::min(bottom, q.y - drop);
            half_width = std::max(half_width, std::abs(q.x));
        }
    }
    const double extent = std::max(top - bottom, 1.0);
    f.top_world_y = top;
    f.px_per_mm = (config.height - 2.0 * f.margin) / extent;
    f.vertebrae = expand_spine(std::move(rest), f.spacing, kExpansionGap);

    double min_gap = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& a = f.vertebrae[i - 1];
        const auto& b = f.vertebrae[i];
        const double gap = ((a.barycenter.y() + a.translation.y()) - (b.barycenter.y() + b.translation.y())) *
                           f.px_per_mm;
        if (gap > 0.0 && (min_gap == 0.0 || gap < min_gap)) {
            min_gap = gap;
        }
    }
    f.chart_height = min_gap > 0.0 ? kChartFill * min_gap : 0.1 * config.height;
    f.chart_inner = half_width * f.px_per_mm + kChartClearance;
    f.chart_width = std::max(0.5 * config.width - f.margin - f.chart_inner, 1.0);

    const auto& times = dataset.times();
    if (!times.empty()) {
        f.t0 = times.front();
        f.t1 = times.back() > times.front() ? times.back() : times.front() + 1.0;
    }
    return f;
}

Overlay overlay_comparison(const std::vector<double>& primary_times, const std::vector<double>& primary,
                           const std::vector<double>& reference_times, const std::vector<double>& reference) {
    if (primary_times != reference_times || primary.size() != primary_times.size() ||
        reference.size() != reference_times.size()) {
        throw QueryError("comparison series use a different time base");
    }
    Overlay out;
    out.modes.reserve(primary.size());
    for (std::size_t k = 0; k < primary.size(); ++k) {
        const bool line = !is_missing(primary[k]) && !is_missing(reference[k]) && reference[k] > primary[k];
        const OverlayMode mode = line ? OverlayMode::Line : OverlayMode::Area;
        out.modes.push_back(mode);
        if (!out.spans.empty() && out.spans.back().mode == mode) {
            out.spans.back().end = k;
        } else {
            out.spans.push_back({k, k, mode});
        }
    }
    return out;
}

std::size_t snap_tick(const std::vector<double>& times, double t) {
    if (times.empty() || !(t > times.front())) {
        return 0;
    }
    if (t >= times.back()) {
        return times.size() - 1;
    }
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    const auto i = static_cast<std::size_t>(it - times.begin());
    return (t - times[i - 1] < times[i] - t) ? i - 1 : i;
}

std::string format_label(double value) {
    if (is_missing(value)) {
        return "–";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

Cursor time_cursor(const ChartLayout& layout, const SimulationDataset& dataset, double t) {
    Cursor c;
    const ValueMatrix* matrix = dataset.matrix(layout.config.attribute);
    const auto& times = matrix != nullptr ? matrix->times() : dataset.times();
    if (times.empty()) {
        return c;
    }
    c.tick = snap_tick(times, t);
    c.time = times[c.tick];
    for (const auto& chart : layout.charts) {
        CursorMark m;
        m.structure = chart.structure;
        m.x = layout.frame.time_x(chart.side, c.time);
        m.y0 = chart.top;
        m.y1 = chart.baseline;
        m.value = c.tick < chart.values.size() ? chart.values[c.tick] : kMissing;
        m.label = format_label(m.value);
        const double dx = chart.side == ChartSide::Right ? 3.0 : -3.0;
        m.label_pos = {m.x + dx, chart.top - 2.0};
        c.marks.push_back(std::move(m));
    }
    return c;
}

ChartLayout layout_charts(const SimulationDataset& dataset, const ViewConfig& config,
                          const SimulationDataset* comparison) {
    ChartLayout out;
    out.config = config;
    out.config.normalize();
    const ViewConfig& cfg = out.config;

    const ValueMatrix* matrix = dataset.matrix(cfg.attribute);
    if (matrix == nullptr) {
        throw QueryError("dataset '" + dataset.manifest.id + "' has no " + std::string(to_string(cfg.attribute)));
    }
    const ValueMatrix* ref_matrix = nullptr;
    if (comparison != nullptr) {
        ref_matrix = comparison->matrix(cfg.attribute);
        if (ref_matrix == nullptr) {
            throw QueryError("comparison dataset '" + comparison->manifest.id + "' has no " +
                             std::string(to_string(cfg.attribute)));
        }
        if (ref_matrix->times() != matrix->times()) {
            throw QueryError("comparison dataset uses a different time base");
        }
    }

    out.frame = spine_frame(dataset, cfg);
    const SpineFrame& f = out.frame;
    const auto& times = matrix->times();

    // No ticks at all: nothing to chart, only the spine is drawn.
    const auto structures = times.empty() ? std::vector<const StructureRef*>{}
                                          : charted_structures(dataset, cfg.attribute, cfg.structures);
    std::vector<std::vector<double>> series;
    std::vector<std::optional<std::vector<double>>> ref_series;
    double global_max = 0.0;
    for (const auto* ref : structures) {
        series.push_back(series_for(matrix, ref->id, times.size()));
        global_max = std::max(global_max, series_max(series.back()));
        if (ref_matrix != nullptr && ref_matrix->column_index(ref->id)) {
            ref_series.push_back(series_for(ref_matrix, ref->id, times.size()));
            global_max = std::max(global_max, series_max(*ref_series.back()));
        } else {
            ref_series.push_back(std::nullopt);
        }
    }

    out.range = cfg.range ? *cfg.range : ValueRange{0.0, global_max > 0.0 ? global_max : 1.0};
    const double h = f.chart_height;
    out.px_per_unit = h / (out.range.hi - out.range.lo);
    auto height_of = [&](double v) { return std::clamp((v - out.range.lo) * out.px_per_unit, 0.0, h); };

    for (std::size_t s = 0; s < structures.size(); ++s) {
        const auto& ref = *structures[s];
        Chart c;
        c.structure = ref.id;
        c.kind = ref.kind;
        c.side = side_of(ref.kind);
        const double anchor_y = f.canvas_y(f.anchor_world_y(ref));
        c.baseline = anchor_y + 0.5 * h;
        c.top = c.baseline - h;
        c.x0 = f.time_x(c.side, f.t0);
        c.x1 = f.time_x(c.side, f.t1);
        c.anchor = {c.x0, anchor_y};
        c.values = std::move(series[s]);
        c.missing = all_missing(c.values);
        if (!c.missing) {
            c.samples.reserve(times.size());
            c.colors.reserve(times.size());
            for (std::size_t k = 0; k < times.size(); ++k) {
                const double v = c.values[k];
                const double x = f.time_x(c.side, times[k]);
                if (is_missing(v)) {
                    c.samples.push_back({x, c.baseline});
                    c.colors.push_back(kMissingColor);
                } else {
                    c.samples.push_back({x, c.baseline - height_of(v)});
                    c.colors.push_back(value_color(v, out.range, cfg.bins));
                }
            }
            c.areas = area_runs(c.samples, c.values, c.baseline);
        }
        if (cfg.gridlines) {
            for (double q : {0.25, 0.5, 0.75, 1.0}) {
                c.gridlines.push_back(c.baseline - q * h);
            }
        }
        if (ref_series[s] && !c.missing) {
            const auto& rv = *ref_series[s];
            Overlay ov = overlay_comparison(times, c.values, ref_matrix->times(), rv);
            std::vector<Point2> ref_samples;
            ref_samples.reserve(rv.size());
            for (std::size_t k = 0; k < rv.size(); ++k) {
                const double y = is_missing(rv[k]) ? c.baseline : c.baseline - height_of(rv[k]);
                ref_samples.push_back({f.time_x(c.side, times[k]), y});
            }
            ov.reference_areas = area_runs(ref_samples, rv, c.baseline);
            // A LINE span reaches halfway to its neighbours so single-sample
            // spans stay visible.
            for (const auto& span : ov.spans) {
                if (span.mode != OverlayMode::Line) {
                    continue;
                }
                std::vector<Point2> line;
                if (span.begin > 0 && !is_missing(c.values[span.begin - 1])) {
                    line.push_back(midpoint(c.samples[span.begin - 1], c.samples[span.begin]));
                }
                for (std::size_t k = span.begin; k <= span.end; ++k) {
                    line.push_back(c.samples[k]);
                }
                if (span.end + 1 < c.samples.size() && !is_missing(c.values[span.end + 1])) {
                    line.push_back(midpoint(c.samples[span.end], c.samples[span.end + 1]));
                }
                ov.lines.push_back(std::move(line));
            }
            c.overlay = std::move(ov);
        }
        out.charts.push_back(std::move(c));
    }

    out.cursor = time_cursor(out, dataset, cfg.time);
    return out;
}

StripLayout simplified_strips(const std::vector<const SimulationDataset*>& datasets, const ViewConfig& config) {
    if (datasets.empty() || datasets.front() == nullptr) {
        throw ParameterError("simplified view needs at least one dataset");
    }
    StripLayout out;
    out.config = config;
    out.config.mode = ViewMode::Simplified;
    if (out.config.bins < 2) {
        out.config.bins = kSimplifiedDefaultBins;
    }
    out.config.normalize();
    const ViewConfig& cfg = out.config;
    out.bins = cfg.bins;

    const SimulationDataset& base = *datasets.front();
    out.frame = spine_frame(base, cfg);
    SpineFrame& f = out.frame;

    double t0 = 0.0;
    double t1 = 0.0;
    bool have_time = false;
    double global_max = 0.0;
    for (const auto* ds : datasets) {
        const ValueMatrix* m = ds->matrix(cfg.attribute);
        if (m == nullptr) {
            continue;
        }
        if (!m->times().empty()) {
            t0 = have_time ? std::min(t0, m->times().front()) : m->times().front();
            t1 = have_time ? std::max(t1, m->times().back()) : m->times().back();
            have_time = true;
        }
        for (std::size_t c = 0; c < m->cols(); ++c) {
            global_max = std::max(global_max, series_max(m->magnitude_series(c)));
        }
    }
    if (have_time) {
        f.t0 = t0;
        f.t1 = t1 > t0 ? t1 : t0 + 1.0;
    }
    out.range = cfg.range ? *cfg.range : nice_range(global_max, out.bins);

    const double h = f.chart_height;
    const double n = static_cast<double>(datasets.size());
    for (const auto* ref : charted_structures(base, cfg.attribute, cfg.structures)) {
        StripGroup g;
        g.structure = ref->id;
        g.side = side_of(ref->kind);
        const double anchor_y = f.canvas_y(f.anchor_world_y(*ref));
        g.anchor = {f.time_x(g.side, f.t0), anchor_y};
        const double band_top = anchor_y - 0.5 * h;
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            const SimulationDataset& ds = *datasets[d];
            Strip strip;
            strip.dataset = ds.manifest.id;
            strip.y0 = band_top + h * static_cast<double>(d) / n;
            strip.y1 = band_top + h * static_cast<double>(d + 1) / n;
            const ValueMatrix* m = ds.matrix(cfg.attribute);
            if (m != nullptr) {
                const auto& times = m->times();
                const auto values = series_for(m, ref->id, times.size());
                for (std::size_t k = 0; k < times.size(); ++k) {
                    const double ta = k == 0 ? times[k] : 0.5 * (times[k - 1] + times[k]);
                    const double tb = k + 1 == times.size() ? times[k] : 0.5 * (times[k] + times[k + 1]);
                    StripCell cell;
                    cell.x0 = f.time_x(g.side, ta);
                    cell.x1 = f.time_x(g.side, tb);
                    if (is_missing(values[k])) {
                        cell.color = kMissingColor;
                    } else {
                        cell.bin = discretize(values[k], out.range, out.bins);
                        cell.color = value_color(values[k], out.range, out.bins);
                    }
                    strip.cells.push_back(cell);
                }
            }
            g.strips.push_back(std::move(strip));
        }
        out.groups.push_back(std::move(g));
    }
    return out;
}

}  // namespace spineviz
