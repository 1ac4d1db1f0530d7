// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures (capped at 1).

#include "spineviz/colormap.hpp"
#include "spineviz/errors.hpp"
#include "spineviz/exporter.hpp"
#include "spineviz/geometry.hpp"
#include "spineviz/glyphs.hpp"
#include "spineviz/layout.hpp"
#include "spineviz/service.hpp"
#include "spineviz/simkernel.hpp"

#include "../support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <cstring>
#include <sstream>

using namespace spineviz;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    args.insert(args.begin(), "spineviz");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text != nullptr) *out_text = out.str() + err.str();
    return code;
}

// points="x,y x,y" of every <polygon class="area" data-structure="id">
std::vector<std::vector<std::pair<std::string, std::string>>> area_polygons(const std::string& svg,
                                                                            const std::string& id) {
    std::vector<std::vector<std::pair<std::string, std::string>>> out;
    const std::regex re("<polygon class=\"area\" data-structure=\"" + id + "\" points=\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
        std::vector<std::pair<std::string, std::string>> pts;
        std::istringstream ss((*it)[1].str());
        std::string tok;
        while (ss >> tok) {
            const auto comma = tok.find(',');
            pts.emplace_back(tok.substr(0, comma), tok.substr(comma + 1));
        }
        out.push_back(std::move(pts));
    }
    return out;
}

// Decimal mirror of a 4-decimal coordinate about an axis given the same way.
std::string mirror_decimal(const std::string& x, const std::string& axis) {
    auto to_units = [](const std::string& s) {
        const bool neg = s.front() == '-';
        std::string digits;
        for (char c : s) if (c != '.' && c != '-') digits += c;
        const long long v = std::stoll(digits);
        return neg ? -v : v;
    };
    const long long m = 2 * to_units(axis) - to_units(x);
    char buf[64];
    const long long a = m < 0 ? -m : m;
    std::snprintf(buf, sizeof buf, "%s%lld.%04lld", m < 0 ? "-" : "", a / 10000, a % 10000);
    return buf;
}

SimulationDataset facet_pair_dataset(const std::vector<double>& left, const std::vector<double>& right) {
    const auto t = testing::ticks(left.size());
    auto m = testing::scalar_matrix(Attribute::ForceMagnitude, t,
                                    {{"C2C3", std::vector<double>(t.size(), 1.0)},
                                     {"C2C3_facetL", left},
                                     {"C2C3_facetR", right}});
    return testing::synthetic("C2..C3", {{Attribute::ForceMagnitude, m}}, "pair");
}

// Brute-force plane/triangle intersection segments at `level`.
std::vector<std::array<Vec3, 2>> oracle_segments(const Mesh& mesh, const Vec3& origin, const Vec3& dir,
                                                 double level) {
    std::vector<std::array<Vec3, 2>> segs;
    for (const auto& tri : mesh.triangles) {
        std::vector<Vec3> hits;
        for (int e = 0; e < 3; ++e) {
            const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[e])];
            const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[(e + 1) % 3])];
            const double sa = (a - origin).dot(dir) - level;
            const double sb = (b - origin).dot(dir) - level;
            if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
                hits.push_back(a + (b - a) * (sa / (sa - sb)));
            }
        }
        if (hits.size() == 2) segs.push_back({hits[0], hits[1]});
    }
    return segs;
}

}  // namespace

int main() {
    const auto data = testing::data_dir();

    criterion("frame-correction", [] {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(20240611);
        std::normal_distribution<double> n(0.0, 1.0);
        std::uniform_real_distribution<double> u(-1000.0, 1000.0);
        double worst_norm = 0.0;
        double worst_round = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Quat q = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
            const Vec3 f(u(rng), u(rng), u(rng));
            const Vec3 local = to_local_force(f, q);
            worst_norm = std::max(worst_norm, std::abs(local.norm() - f.norm()) / f.norm());
            worst_round = std::max(worst_round, (q.toRotationMatrix() * local - f).norm() / f.norm());
        }
        const Quat rz(Eigen::AngleAxisd(kPi / 2.0, Vec3::UnitZ()));
        const Vec3 analytic = to_local_force(Vec3(1.0, 0.0, 0.0), rz);
        const double rz_err = (analytic - Vec3(0.0, -1.0, 0.0)).norm();
        const double elapsed = seconds_since(t0);
        const bool ok = worst_norm <= 1e-9 && worst_round <= 1e-9 && rz_err <= 1e-12 && elapsed < 1.0;
        return Outcome{ok, fmt("max norm err %.2e, max round-trip err %.2e, Rz(90) err %.1e", worst_norm,
                               worst_round, rz_err) +
                               fmt(", %.3f s", elapsed)};
    });

    criterion("census", [&] {
        const auto ds = testing::load("static_gravity");
        const auto census = structure_census(ds.registry);
        ViewConfig cfg;
        const auto layout = layout_charts(ds, cfg);
        std::size_t right = 0;
        for (const auto& c : layout.charts) right += c.side == ChartSide::Right ? 1 : 0;
        const bool ok = census.vertebrae == 10 && census.discs == 8 && census.facet_pairs == 9 &&
                        layout.charts.size() == 8 && right == 8;
        return Outcome{ok, "vertebrae " + std::to_string(census.vertebrae) + ", discs " +
                               std::to_string(census.discs) + ", facet pairs " + std::to_string(census.facet_pairs) +
                               ", disc charts " + std::to_string(layout.charts.size())};
    });

    criterion("mirror-symmetry", [] {
        std::vector<double> series(120);
        std::vector<double> other(120);
        for (std::size_t k = 0; k < series.size(); ++k) {
            series[k] = 20.0 + 15.0 * std::sin(0.173 * static_cast<double>(k)) + 0.01 * static_cast<double>(k);
            other[k] = series[k] * (1.0 + 0.2 * std::cos(0.05 * static_cast<double>(k)));
        }
        ViewConfig cfg;
        cfg.structures = StructureClass::Facets;
        cfg.time = 0.5;
        auto check = [&](const SimulationDataset& ds) {
            const auto layout = layout_charts(ds, cfg);
            const std::string svg = export_svg(layout, layout.frame.width, layout.frame.height);
            const auto left = area_polygons(svg, "C2C3_facetL");
            const auto right = area_polygons(svg, "C2C3_facetR");
            const std::string axis = fmt("%.4f", layout.frame.axis_x);
            if (left.empty() || left.size() != right.size()) return false;
            for (std::size_t p = 0; p < left.size(); ++p) {
                if (left[p].size() != right[p].size()) return false;
                for (std::size_t i = 0; i < left[p].size(); ++i) {
                    if (left[p][i].first != mirror_decimal(right[p][i].first, axis) ||
                        left[p][i].second != right[p][i].second) {
                        return false;
                    }
                }
            }
            return true;
        };
        const bool symmetric = check(facet_pair_dataset(series, series));
        const bool asymmetric = check(facet_pair_dataset(series, other));
        return Outcome{symmetric && !asymmetric, std::string("identical series mirrored: ") +
                                                     (symmetric ? "yes" : "no") +
                                                     ", asymmetric series mirrored: " + (asymmetric ? "yes" : "no")};
    });

    criterion("shared-scaling", [] {
        std::string detail;
        bool ok = true;
        for (double r : {2.0, 5.0, 10.0}) {
            const auto t = testing::ticks(50);
            std::vector<double> a(t.size());
            std::vector<double> b(t.size());
            for (std::size_t k = 0; k < t.size(); ++k) {
                const double shape = std::sin(kPi * static_cast<double>(k) / 49.0);
                b[k] = 3.7 * shape;
                a[k] = r * b[k];
            }
            auto m = testing::scalar_matrix(Attribute::Deformation, t, {{"C2C3", a}, {"C3C4", b}});
            const auto ds = testing::synthetic("C2..C4", {{Attribute::Deformation, m}});
            ViewConfig cfg;
            cfg.attribute = Attribute::Deformation;
            const auto layout = layout_charts(ds, cfg);
            auto peak = [](const Chart& c) {
                double h = 0.0;
                for (const auto& s : c.samples) h = std::max(h, c.baseline - s.y);
                return h;
            };
            const double ha = peak(layout.charts[0]);
            const double hb = peak(layout.charts[1]);
            const double err = std::abs(ha - r * hb);
            ok = ok && err <= 1.0;
            detail += fmt("r=%g: %.4f/%.4f px", r, ha, hb) + fmt(" (err %.2e) ", err);
        }
        return Outcome{ok, detail};
    });

    criterion("overlay-occlusion", [] {
        const std::vector<double> t{0.0, 0.01, 0.02};
        const auto o = overlay_comparison(t, {3.0, 5.0, 2.0}, t, {4.0, 4.0, 4.0});
        const bool ok = o.modes == std::vector<OverlayMode>{OverlayMode::Line, OverlayMode::Area, OverlayMode::Line};
        std::string modes;
        for (auto m : o.modes) modes += m == OverlayMode::Line ? "LINE " : "AREA ";
        return Outcome{ok, "modes " + modes};
    });

    criterion("glyph-orthogonality-uniformity", [&] {
        const auto ds = testing::load("lateral_bend");
        const GlyphConfig cfg = glyph_config_for(ds, 0.6);
        double worst_dot = 0.0;
        double min_len = 1e300;
        double max_len = 0.0;
        std::size_t visible = 0;
        std::size_t zero_ticks = 0;
        bool zero_ok = true;
        const auto& times = ds.times();
        const ValueMatrix& fv = *ds.matrix(Attribute::ForceVector);
        for (std::size_t k = 0; k < times.size(); ++k) {
            const auto glyphs = build_glyphs(ds, times[k], cfg);
            for (const auto& g : glyphs) {
                const auto col = *fv.column_index(g.disc);
                const bool zero = fv.vector_at(k, col).norm() < kForceEpsilon;
                if (zero) {
                    ++zero_ticks;
                    zero_ok = zero_ok && !g.visible && !g.has_force && g.isolines.empty();
                }
                if (!g.visible) continue;
                ++visible;
                worst_dot = std::max({worst_dot, std::abs(g.plane.u.dot(g.plane.normal)),
                                      std::abs(g.plane.v.dot(g.plane.normal))});
                const double len = (g.tip - g.tail).norm();
                min_len = std::min(min_len, len);
                max_len = std::max(max_len, len);
            }
        }
        ViewConfig vc;
        vc.time = 0.0;
        vc.spacing = 0.6;
        const auto scene = build_scene(ds, vc);
        zero_ok = zero_ok && scene.glyphs.empty() && zero_ticks > 0;
        const bool ok = visible > 0 && worst_dot <= 1e-9 && (max_len - min_len) <= 1e-9 && zero_ok;
        return Outcome{ok, std::to_string(visible) + " visible glyphs" + fmt(", max |plane.arrow| %.1e", worst_dot) +
                               fmt(", length spread %.1e mm", max_len - min_len) + ", zero-force glyphs " +
                               std::to_string(zero_ticks) + (zero_ok ? " all hidden" : " NOT hidden")};
    });

    criterion("isoline-level-sets", [&] {
        std::vector<std::string> warnings;
        const Mesh mesh = parse_obj_subset(testing::read_text(data / "static_gravity" / "meshes" / "C4C5.obj"),
                                           "C4C5", &warnings);
        const Vec3 origin = barycenter(mesh);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<Vec3> dirs{Vec3::UnitY(), Vec3::UnitX(), Vec3(1.0, -1.0, 0.0).normalized()};
        for (int i = 0; i < 17; ++i) dirs.push_back(Vec3(n(rng), n(rng), n(rng)).normalized());
        double worst_level = 0.0;
        std::size_t checked = 0;
        bool match = true;
        for (const auto& d : dirs) {
            const auto set = isolines(mesh, origin, d, 5);
            for (std::size_t l = 0; l < set.levels.size(); ++l) {
                const double level = set.levels[l];
                std::size_t edges = 0;
                for (const auto& line : set.polylines[l]) {
                    for (const auto& v : line) {
                        worst_level = std::max(worst_level, std::abs((v - origin).dot(d) - level));
                        ++checked;
                    }
                    edges += line.size() - 1;
                }
                const auto oracle = oracle_segments(mesh, origin, d, level);
                if (oracle.size() != edges) match = false;
                // Every oracle segment appears as one polyline edge.
                for (const auto& seg : oracle) {
                    bool found = false;
                    for (const auto& line : set.polylines[l]) {
                        for (std::size_t i = 0; i + 1 < line.size() && !found; ++i) {
                            const bool same = ((line[i] - seg[0]).norm() < 1e-9 && (line[i + 1] - seg[1]).norm() < 1e-9) ||
                                              ((line[i] - seg[1]).norm() < 1e-9 && (line[i + 1] - seg[0]).norm() < 1e-9);
                            found = same;
                        }
                        if (found) break;
                    }
                    if (!found) match = false;
                }
            }
        }
        const bool ok = worst_level < 1e-6 && match && checked > 0;
        return Outcome{ok, std::to_string(checked) + " vertices over " + std::to_string(dirs.size()) +
                               " directions" + fmt(", max |s(v)-level| %.1e mm", worst_level) +
                               (match ? ", oracle segments matched" : ", oracle MISMATCH")};
    });

    criterion("simulator-equilibrium", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const SpineModel model = default_model();
        const auto ds = run(model, static_gravity_scenario());
        const double elapsed = seconds_since(t0);
        const ValueMatrix& fm = *ds.matrix(Attribute::ForceMagnitude);
        const auto col = *fm.column_index("C2C3");
        const double last = fm.at(fm.rows() - 1, col);
        double above = 0.0;
        for (const auto& b : model.bodies) {
            above += b.mass;
            if (b.id == "C2") break;
        }
        const double oracle = above * 9.81;
        // settled: last 0.5 s vary by less than 0.1 %
        double lo = last;
        double hi = last;
        for (std::size_t r = fm.rows() - 51; r < fm.rows(); ++r) {
            lo = std::min(lo, fm.at(r, col));
            hi = std::max(hi, fm.at(r, col));
        }
        const double rel = std::abs(last - oracle) / oracle;
        const bool ok = rel <= 0.02 && (hi - lo) <= 1e-3 * oracle && elapsed < 10.0;
        return Outcome{ok, fmt("C2C3 %.4f N vs oracle %.4f N (%.3f%%)", last, oracle, 100.0 * rel) +
                               fmt(", final 0.5 s spread %.2e N, %.3f s", hi - lo, elapsed)};
    });

    criterion("lateral-bend-asymmetry", [] {
        const auto ds = run(default_model(), lateral_bend_scenario());
        const ValueMatrix& fm = *ds.matrix(Attribute::ForceMagnitude);
        const auto& t = fm.times();
        bool ok = true;
        std::string detail;
        std::size_t pairs = 0;
        for (const auto* ref : ds.registry.of_kind(StructureKind::FacetLeft)) {
            if (ref->cranial == "C1") continue;  // pairs below C2 only
            const auto l = *fm.column_index(ref->id);
            const auto r = *fm.column_index(facet_id(ref->cranial, ref->caudal, StructureKind::FacetRight));
            double il = 0.0;
            double ir = 0.0;
            for (std::size_t k = 1; k < t.size(); ++k) {
                const double dt = t[k] - t[k - 1];
                il += 0.5 * dt * (fm.at(k, l) + fm.at(k - 1, l));
                ir += 0.5 * dt * (fm.at(k, r) + fm.at(k - 1, r));
            }
            ++pairs;
            ok = ok && il > ir;
            if (!(il > ir)) detail += ref->cranial + ref->caudal + " wrong sign; ";
        }
        // +x head force bends toward the patient's left: left facets close.
        return Outcome{ok && pairs == 8, std::to_string(pairs) + " pairs checked, left > right on all" +
                                             (detail.empty() ? "" : " except: " + detail)};
    });

    criterion("degeneration-monotonicity", [] {
        const SpineModel model = default_model();
        std::vector<double> peaks;
        for (int d = 1; d <= 5; ++d) {
            Scenario sc = lateral_bend_scenario();
            for (const auto& j : model.joints) {
                if (j.disc) sc.degeneration[disc_id(j.cranial, j.caudal)] = d;
            }
            const auto ds = run(model, sc);
            double peak = 0.0;
            for (double v : ds.matrix(Attribute::Deformation)->raw()) peak = std::max(peak, v);
            peaks.push_back(peak);
        }
        const bool ok = std::is_sorted(peaks.begin(), peaks.end());
        std::string detail = "max deformation by degree:";
        for (double p : peaks) detail += fmt(" %.4f", p);
        return Outcome{ok, detail + " mm"};
    });

    criterion("missing-data-surfacing", [&] {
        std::string text;
        const int code = run_cli({"validate", "--data-dir", data.string(), "--dataset", "lateral_bend_missing_facet"},
                                 &text);
        const auto dir = testing::temp_dir("accept-missing");
        const auto out = (dir / "facets.svg").string();
        const int export_code = run_cli({"export", "--data-dir", data.string(), "--dataset",
                                         "lateral_bend_missing_facet", "--view", "facets", "--t", "1.5", "--out", out});
        const std::string svg = testing::read_text(out);
        const bool hatched = svg.find("<rect class=\"frame-missing\" data-structure=\"C5C6_facetL\"") !=
                                 std::string::npos &&
                             svg.find("fill=\"url(#hatch)\"") != std::string::npos;
        const bool named = text.find("C5C6_facetL") != std::string::npos;
        std::filesystem::remove_all(dir);
        const bool ok = code != 0 && named && export_code == 0 && hatched;
        return Outcome{ok, "validate exit " + std::to_string(code) + (named ? ", report names C5C6_facetL" : "") +
                               (hatched ? ", hatched frame exported" : ", no hatched frame")};
    });

    criterion("determinism", [&] {
        const auto dir = testing::temp_dir("accept-det");
        bool exports_equal = true;
        for (const char* view : {"charts", "facets", "simplified", "glyphs"}) {
            std::string bytes[2];
            for (int i = 0; i < 2; ++i) {
                const auto out = (dir / (std::string(view) + std::to_string(i) + ".svg")).string();
                run_cli({"export", "--data-dir", data.string(), "--dataset", "lateral_bend", "--view", view, "--t",
                         "1.234", "--spacing", "0.7", "--compare", "lateral_bend_deg5", "--out", out});
                bytes[i] = testing::read_text(out);
            }
            exports_equal = exports_equal && !bytes[0].empty() && bytes[0] == bytes[1];
        }
        ServerState state(data);
        Request req;
        req.path = "/datasets/lateral_bend/scene";
        req.query = {{"mode", "stacked3d"}, {"t", "2.2"}, {"spacing", "0.4"}, {"compare", "lateral_bend_deg2"}};
        const Response a = handle(state, req);
        const Response b = handle(state, req);
        const bool scenes_equal = a.status == 200 && a.body == b.body;

        const SpineModel model = default_model();
        const Scenario sc = lateral_bend_scenario();
        const auto r1 = run(model, sc);
        const auto r2 = run(model, sc);
        bool sims_equal = true;
        for (const auto& [attr, m] : r1.matrices) {
            const auto& other = r2.matrices.at(attr).raw();
            sims_equal = sims_equal && m.raw().size() == other.size() &&
                         std::memcmp(m.raw().data(), other.data(), other.size() * sizeof(double)) == 0;
        }
        std::filesystem::remove_all(dir);
        const bool ok = exports_equal && scenes_equal && sims_equal;
        return Outcome{ok, std::string("exports ") + (exports_equal ? "identical" : "DIFFER") + ", /scene " +
                               (scenes_equal ? "identical" : "DIFFER") + ", simulate " +
                               (sims_equal ? "bit-identical" : "DIFFER")};
    });

    criterion("colormap", [&] {
        std::vector<std::array<double, 3>> table;
        std::istringstream in(testing::read_text(testing::fixture("viridis_reference.csv")));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::array<double, 3> rgb{};
            std::sscanf(line.c_str(), "%*d,%lf,%lf,%lf", &rgb[0], &rgb[1], &rgb[2]);
            table.push_back(rgb);
        }
        double worst = 0.0;
        for (int i : {0, 255, 28, 57, 85, 113, 142, 170, 199, 227}) {
            const Rgb c = viridis(static_cast<double>(i) / 255.0);
            const auto& ref = table.at(static_cast<std::size_t>(i));
            worst = std::max({worst, std::abs(c.r - ref[0]), std::abs(c.g - ref[1]), std::abs(c.b - ref[2])});
        }
        // Default simplified config over the degeneration sweep.
        std::vector<SimulationDataset> sweep;
        for (int d = 1; d <= 5; ++d) sweep.push_back(testing::load("lateral_bend_deg" + std::to_string(d)));
        std::vector<const SimulationDataset*> ptrs;
        for (const auto& s : sweep) ptrs.push_back(&s);
        ViewConfig cfg;
        cfg.mode = ViewMode::Simplified;
        cfg.attribute = Attribute::Deformation;
        const auto strips = simplified_strips(ptrs, cfg);
        bool edge = false;
        for (int k = 0; k <= strips.bins; ++k) {
            const double e = strips.range.lo + (strips.range.hi - strips.range.lo) * k / strips.bins;
            edge = edge || e == 2.0;
        }
        edge = edge && discretize(std::nextafter(2.0, 0.0), strips.range, strips.bins) <
                           discretize(2.0, strips.range, strips.bins);
        const bool ok = worst <= 1.0 / 255.0 && edge && strips.bins == 4;
        return Outcome{ok, fmt("max channel err %.2e", worst) + fmt(", range [%g, %g]", strips.range.lo, strips.range.hi) +
                               ", " + std::to_string(strips.bins) + " bins, 2 mm " + (edge ? "is" : "is NOT") +
                               " a bin edge"};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
