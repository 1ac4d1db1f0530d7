#include "spineviz/errors.hpp"
#include "spineviz/exporter.hpp"
#include "spineviz/service.hpp"
#include "spineviz/simkernel.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace spineviz {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitIssues = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotFound = 3;
constexpr int kExitFailure = 4;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SimulationDataset load_by_id(const fs::path& data_dir, const std::string& id) {
    if (!valid_dataset_id(id) || !fs::exists(data_dir / id / "manifest.json")) {
        throw NotFoundError("dataset not found: " + id + " (data dir " + data_dir.string() + ")");
    }
    return load_dataset(data_dir / id);
}

extern "C" void on_signal(int) { stop_server(); }

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spine simulation exploration workbench"};
    app.require_subcommand(1);
    std::string data_dir = default_data_dir().string();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve_cmd->add_option("--port", port, "Port (0 = any free port)");
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--data-dir", data_dir, "Dataset directory");

    auto* export_cmd = app.add_subcommand("export", "Write an SVG view of a dataset");
    std::string dataset_id;
    std::string view_name;
    double t = 0.0;
    std::string out_path;
    std::vector<std::string> compare;
    int bins = -1;
    double spacing = -1.0;
    std::string attr;
    double width = 960.0;
    double height = 720.0;
    bool gridlines = false;
    export_cmd->add_option("--dataset", dataset_id, "Dataset id")->required();
    export_cmd->add_option("--view", view_name, "charts | facets | simplified | glyphs")
        ->required()
        ->check(CLI::IsMember({"charts", "facets", "simplified", "glyphs"}));
    export_cmd->add_option("--t", t, "Time in seconds (clamped, snapped to a tick)");
    export_cmd->add_option("--out", out_path, "Output SVG file")->required();
    export_cmd->add_option("--compare", compare, "Comparison dataset; repeat for ensemble members")
        ->delimiter(',');
    export_cmd->add_option("--bins", bins, "Colormap bins (0 = continuous)");
    export_cmd->add_option("--spacing", spacing, "Spine expansion in [0, 1]");
    export_cmd->add_option("--attr", attr, "force_magnitude | force_vector | deformation");
    export_cmd->add_option("--width", width, "Canvas width");
    export_cmd->add_option("--height", height, "Canvas height");
    export_cmd->add_flag("--gridlines", gridlines, "Draw gridlines");
    export_cmd->add_option("--data-dir", data_dir, "Dataset directory");

    auto* sim_cmd = app.add_subcommand("simulate", "Run the toy spine model and write a dataset");
    std::string model_path;
    std::string scenario_path;
    std::string sim_out;
    std::string sim_id;
    sim_cmd->add_option("--model", model_path, "Model JSON (default: bundled C1..Th3)");
    sim_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    sim_cmd->add_option("--out", sim_out, "Output dataset directory")->required();
    sim_cmd->add_option("--id", sim_id, "Dataset id (default: output directory name)");

    auto* validate_cmd = app.add_subcommand("validate", "Check a dataset and print the report");
    validate_cmd->add_option("--dataset", dataset_id, "Dataset id")->required();
    validate_cmd->add_option("--data-dir", data_dir, "Dataset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*serve_cmd) {
            ServerState state(data_dir);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            err << "serving " << data_dir << " on " << host << ":" << port << "\n";
            if (!serve(state, host, port)) {
                err << "error: cannot listen on " << host << ":" << port << "\n";
                return kExitFailure;
            }
            return kExitOk;
        }

        if (*export_cmd) {
            const SimulationDataset ds = load_by_id(data_dir, dataset_id);
            std::vector<SimulationDataset> others;
            others.reserve(compare.size());
            for (const auto& id : compare) {
                others.push_back(load_by_id(data_dir, id));
            }
            std::vector<const SimulationDataset*> other_ptrs;
            for (const auto& o : others) {
                other_ptrs.push_back(&o);
            }
            ViewConfig cfg;
            cfg.time = t;
            cfg.width = width;
            cfg.height = height;
            cfg.gridlines = gridlines;
            if (bins >= 0) cfg.bins = bins;
            if (spacing >= 0.0) cfg.spacing = spacing;
            if (!attr.empty()) {
                const auto a = attribute_from_string(attr);
                if (!a) {
                    err << "error: unknown attribute " << attr << "\n";
                    return kExitUsage;
                }
                cfg.attribute = *a;
            }
            if (!compare.empty()) cfg.compare = compare.front();
            const auto view = *export_view_from_string(view_name);
            const std::string svg = export_view(ds, view, cfg, other_ptrs);
            std::ofstream file(out_path, std::ios::binary);
            if (!file || !(file << svg)) {
                err << "error: cannot write " << out_path << "\n";
                return kExitFailure;
            }
            out << "wrote " << out_path << "\n";
            return kExitOk;
        }

        if (*sim_cmd) {
            const SpineModel model = model_path.empty() ? default_model() : model_from_json(read_file(model_path));
            const Scenario scenario = scenario_from_json(read_file(scenario_path));
            RunOptions options;
            options.dataset_id = sim_id.empty() ? fs::path(sim_out).filename().string() : sim_id;
            const SimulationDataset ds = run(model, scenario, options);
            write_dataset(ds, sim_out);
            const auto c = structure_census(ds.registry);
            out << "wrote " << sim_out << " (" << c.vertebrae << " vertebrae, " << c.discs << " discs, "
                << c.facet_pairs << " facet pairs, " << ds.times().size() << " ticks)\n";
            return kExitOk;
        }

        if (*validate_cmd) {
            const SimulationDataset ds = load_by_id(data_dir, dataset_id);
            const ValidationReport report = validate_dataset(ds);
            out << report.to_text() << report.issues.size() << " issue(s) in " << dataset_id << "\n";
            return report.empty() ? kExitOk : kExitIssues;
        }
    } catch (const NotFoundError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNotFound;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace spineviz
