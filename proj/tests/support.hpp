#pragma once

#include "spineviz/dataset.hpp"
#include "spineviz/simkernel.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

inline std::filesystem::path data_dir() { return std::filesystem::path(SPINEVIZ_DATA_DIR) / "datasets"; }
inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(SPINEVIZ_FIXTURE_DIR) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("spineviz-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<double> ticks(std::size_t n, double dt = 0.01) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
    return t;
}

// Scalar matrix from column -> series.
inline spineviz::ValueMatrix scalar_matrix(spineviz::Attribute attr, const std::vector<double>& times,
                                           const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
    std::vector<std::string> names;
    std::vector<double> values(times.size() * cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        names.push_back(cols[c].first);
        for (std::size_t r = 0; r < times.size(); ++r) values[r * cols.size() + c] = cols[c].second[r];
    }
    return spineviz::ValueMatrix(attr, times, names, values);
}

// Dataset over `span` without meshes or kinematics.
inline spineviz::SimulationDataset synthetic(const std::string& span,
                                             std::map<spineviz::Attribute, spineviz::ValueMatrix> matrices,
                                             const std::string& id = "synthetic") {
    spineviz::SimulationDataset ds;
    ds.manifest.id = id;
    ds.manifest.span = span;
    ds.registry = spineviz::StructureRegistry::from_span(span);
    ds.matrices = std::move(matrices);
    return ds;
}

inline spineviz::SimulationDataset load(const std::string& id) {
    return spineviz::load_dataset(data_dir() / id);
}

}  // namespace testing
