#include "spineviz/service.hpp"

#include "spineviz/errors.hpp"
#include "spineviz/exporter.hpp"
#include "spineviz/simkernel.hpp"
#include "text_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <system_error>

namespace spineviz {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

Response json_response(int status, const ojson& body) { return {status, "application/json", body.dump()}; }

Response error_response(int status, const std::string& message) {
    ojson j;
    j["error"] = message;
    return json_response(status, j);
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = detail::parse_double(text); v && std::isfinite(*v)) {
            return *v;
        }
    } else {
        if (auto v = detail::parse_long(text)) {
            return static_cast<T>(*v);
        }
    }
    throw QueryError("malformed value for '" + key + "': " + text);
}

bool parse_flag(const std::string& key, const std::string& text) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw QueryError("malformed value for '" + key + "': " + text);
}

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : detail::split(text, ',')) {
        part = detail::trim(part);
        if (!part.empty()) {
            out.emplace_back(part);
        }
    }
    return out;
}

ojson mesh_payload(const Mesh& mesh) {
    ojson verts = ojson::array();
    for (const auto& v : mesh.vertices) {
        verts.push_back({v.x(), v.y(), v.z()});
    }
    ojson tris = ojson::array();
    for (const auto& t : mesh.triangles) {
        tris.push_back({t[0], t[1], t[2]});
    }
    ojson j;
    j["owner"] = mesh.owner;
    j["vertices"] = std::move(verts);
    j["triangles"] = std::move(tris);
    return j;
}

ojson kinematics_payload(const KinematicsTrack& track) {
    ojson rows = ojson::array();
    for (std::size_t r = 0; r < track.rows(); ++r) {
        ojson row = ojson::array();
        for (std::size_t b = 0; b < track.bodies().size(); ++b) {
            const auto& p = track.pose(r, b);
            row.push_back({p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z(), p.translation.x(),
                           p.translation.y(), p.translation.z()});
        }
        rows.push_back(std::move(row));
    }
    ojson j;
    j["times"] = track.times();
    j["bodies"] = track.bodies();
    j["layout"] = {"qw", "qx", "qy", "qz", "tx", "ty", "tz"};
    j["poses"] = std::move(rows);
    return j;
}

ojson census_json(const StructureCensus& c) {
    ojson j;
    j["vertebrae"] = c.vertebrae;
    j["discs"] = c.discs;
    j["facet_pairs"] = c.facet_pairs;
    return j;
}

Response simulate(ServerState& state, const std::string& body) {
    json request;
    try {
        request = json::parse(body.empty() ? std::string("{}") : body);
    } catch (const json::exception& e) {
        return error_response(400, std::string("malformed JSON: ") + e.what());
    }
    if (!request.is_object()) {
        return error_response(400, "request body must be a JSON object");
    }
    SpineModel model;
    Scenario scenario;
    try {
        const auto m = request.find("model");
        model = (m == request.end() || m->is_null()) ? default_model() : model_from_json(m->dump());
        const auto s = request.find("scenario");
        scenario = (s == request.end() || s->is_null()) ? static_gravity_scenario() : scenario_from_json(s->dump());
    } catch (const Error& e) {
        return error_response(400, e.what());
    }

    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "sim-%016llx", static_cast<unsigned long long>(fnv1a(request.dump())));
    const std::string id = id_buf;

    std::lock_guard lock(state.simulate_mutex);
    const fs::path target = state.cache.data_dir() / id;
    int status = 200;
    if (!fs::exists(target / "manifest.json")) {
        SimulationDataset ds;
        try {
            ds = run(model, scenario, RunOptions{id, true});
        } catch (const DivergenceError& e) {
            ojson j;
            j["error"] = "divergence";
            j["detail"] = e.what();
            j["body"] = e.body();
            j["time"] = e.time();
            return json_response(422, j);
        } catch (const ParameterError& e) {
            return error_response(400, e.what());
        }
        const fs::path tmp = state.cache.data_dir() / (".tmp-" + id);
        std::error_code ec;
        fs::remove_all(tmp, ec);
        write_dataset(ds, tmp);
        fs::rename(tmp, target);
        status = 201;
    }
    const auto ds = state.cache.get(id);
    ojson j;
    j["id"] = id;
    j["census"] = census_json(structure_census(ds->registry));
    return json_response(status, j);
}

Response dataset_route(ServerState& state, const Request& req, const std::vector<std::string>& seg) {
    // seg[0] == "datasets", seg[1] == id
    const auto ds = state.cache.get(seg[1]);
    if (seg.size() == 3 && seg[2] == "manifest") {
        return {200, "application/json", serialize_manifest(ds->manifest)};
    }
    if (seg.size() == 3 && seg[2] == "scene") {
        const ViewConfig cfg = view_config_from_query(req.query, state.defaults);
        std::vector<std::shared_ptr<const SimulationDataset>> held;
        std::vector<const SimulationDataset*> compare;
        if (auto it = req.query.find("compare"); it != req.query.end()) {
            for (const auto& cid : split_ids(it->second)) {
                held.push_back(state.cache.get(cid));
                compare.push_back(held.back().get());
            }
        }
        return {200, "application/json", scene_json(*ds, cfg, compare)};
    }
    if (seg.size() == 4 && seg[2] == "mesh") {
        if (ds->registry.find(seg[3]) == nullptr) {
            throw NotFoundError("unknown structure: " + seg[3]);
        }
        const Mesh* mesh = ds->mesh(seg[3]);
        if (mesh == nullptr) {
            throw NotFoundError("no mesh for structure: " + seg[3]);
        }
        return json_response(200, mesh_payload(*mesh));
    }
    if (seg.size() == 3 && seg[2] == "kinematics") {
        if (!ds->kinematics) {
            throw NotFoundError("dataset has no kinematics: " + seg[1]);
        }
        return json_response(200, kinematics_payload(*ds->kinematics));
    }
    throw NotFoundError("no such resource: " + req.path);
}

}  // namespace

bool valid_dataset_id(std::string_view id) {
    if (id.empty() || id.front() == '.' || id.size() > 128) {
        return false;
    }
    return std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) != 0 || c == '_' || c == '-' || c == '.';
    });
}

DatasetCache::DatasetCache(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {}

std::shared_ptr<const SimulationDataset> DatasetCache::get(const std::string& id) {
    if (!valid_dataset_id(id)) {
        throw NotFoundError("unknown dataset: " + id);
    }
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) {
        Entry entry = it->second;
        lock.unlock();
        return entry.get();
    }
    // This thread loads; concurrent callers wait on the shared future.
    std::promise<std::shared_ptr<const SimulationDataset>> promise;
    Entry entry = promise.get_future().share();
    entries_.emplace(id, entry);
    lock.unlock();
    const fs::path dir = data_dir_ / id;
    try {
        if (!fs::exists(dir / "manifest.json")) {
            throw NotFoundError("unknown dataset: " + id);
        }
        promise.set_value(std::make_shared<const SimulationDataset>(load_dataset(dir)));
        lock.lock();
        ++loads_;
        lock.unlock();
    } catch (...) {
        promise.set_exception(std::current_exception());
        // Failed loads are not cached, so a later write can succeed.
        lock.lock();
        entries_.erase(id);
        lock.unlock();
    }
    return entry.get();
}

std::vector<std::string> DatasetCache::list() const {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(data_dir_, ec)) {
        const std::string name = e.path().filename().string();
        if (e.is_directory() && valid_dataset_id(name) && fs::exists(e.path() / "manifest.json")) {
            ids.push_back(name);
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t DatasetCache::loads() const {
    std::lock_guard lock(mutex_);
    return loads_;
}

ViewConfig view_config_from_query(const std::map<std::string, std::string>& query, const ViewConfig& defaults) {
    ViewConfig cfg = defaults;
    auto get = [&](const char* key) -> const std::string* {
        auto it = query.find(key);
        return it == query.end() ? nullptr : &it->second;
    };
    if (const auto* v = get("mode")) {
        const auto m = view_mode_from_string(*v);
        if (!m) throw QueryError("unknown mode: " + *v);
        cfg.mode = *m;
    }
    if (const auto* v = get("structures")) {
        const auto s = structure_class_from_string(*v);
        if (!s) throw QueryError("unknown structures: " + *v);
        cfg.structures = *s;
    }
    if (const auto* v = get("attr")) {
        const auto a = attribute_from_string(*v);
        if (!a) throw QueryError("unknown attribute: " + *v);
        cfg.attribute = *a;
    }
    if (const auto* v = get("t")) cfg.time = parse_number<double>("t", *v);
    if (const auto* v = get("spacing")) cfg.spacing = parse_number<double>("spacing", *v);
    if (const auto* v = get("bins")) cfg.bins = parse_number<int>("bins", *v);
    if (const auto* v = get("gridlines")) cfg.gridlines = parse_flag("gridlines", *v);
    if (const auto* v = get("width")) cfg.width = parse_number<double>("width", *v);
    if (const auto* v = get("height")) cfg.height = parse_number<double>("height", *v);
    const auto* lo = get("lo");
    const auto* hi = get("hi");
    if ((lo == nullptr) != (hi == nullptr)) {
        throw QueryError("lo and hi must be given together");
    }
    if (lo != nullptr) {
        cfg.range = ValueRange{parse_number<double>("lo", *lo), parse_number<double>("hi", *hi)};
    }
    if (const auto* v = get("compare")) cfg.compare = *v;
    try {
        cfg.normalize();
    } catch (const ParameterError& e) {
        throw QueryError(e.what());
    }
    return cfg;
}

Response handle(ServerState& state, const Request& req) {
    std::vector<std::string> seg;
    for (auto part : detail::split(req.path, '/')) {
        if (!part.empty()) {
            seg.emplace_back(part);
        }
    }
    try {
        if (seg.size() == 1 && seg[0] == "simulate") {
            if (req.method != "POST") return error_response(405, "use POST");
            return simulate(state, req.body);
        }
        if (!seg.empty() && seg[0] == "datasets") {
            if (req.method != "GET") return error_response(405, "use GET");
            if (seg.size() == 1) {
                ojson j;
                j["datasets"] = state.cache.list();
                return json_response(200, j);
            }
            return dataset_route(state, req, seg);
        }
        return error_response(404, "no such route: " + req.path);
    } catch (const NotFoundError& e) {
        return error_response(404, e.what());
    } catch (const QueryError& e) {
        return error_response(400, e.what());
    } catch (const ParameterError& e) {
        return error_response(400, e.what());
    } catch (const DivergenceError& e) {
        return error_response(422, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("SPINEVIZ_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return fs::path("data") / "datasets";
}

}  // namespace spineviz
