#include "spineviz/colormap.hpp"

#include "spineviz/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace spineviz {
namespace {

constexpr std::array<Rgb, 256> kViridis = {{
#include "viridis_table.inc"
}};

}  // namespace

const Rgb& viridis_entry(int index) { return kViridis[static_cast<std::size_t>(std::clamp(index, 0, 255))]; }

Rgb viridis(double u) {
    if (!(u > 0.0)) {
        return kViridis.front();
    }
    if (u >= 1.0) {
        return kViridis.back();
    }
    const double x = u * 255.0;
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    const Rgb& a = kViridis[i];
    const Rgb& b = kViridis[std::min<std::size_t>(i + 1, 255)];
    return {a.r + f * (b.r - a.r), a.g + f * (b.g - a.g), a.b + f * (b.b - a.b)};
}

int discretize(double value, ValueRange range, int bins) {
    if (bins < 2) {
        throw ParameterError("discretize: bins must be at least 2");
    }
    if (!(range.hi > range.lo)) {
        throw ParameterError("discretize: empty range");
    }
    const double u = (value - range.lo) / (range.hi - range.lo);
    if (!(u > 0.0)) {
        return 0;
    }
    const auto bin = static_cast<int>(std::floor(u * static_cast<double>(bins)));
    return std::min(bin, bins - 1);
}

Rgb value_color(double value, ValueRange range, int bins) {
    if (bins >= 2) {
        return viridis(static_cast<double>(discretize(value, range, bins)) / static_cast<double>(bins - 1));
    }
    const double span = range.hi - range.lo;
    return viridis(span > 0.0 ? (value - range.lo) / span : 0.0);
}

ValueRange nice_range(double max_value, int bins) {
    if (bins < 1) {
        throw ParameterError("nice_range: bins must be positive");
    }
    if (!(max_value > 0.0) || !std::isfinite(max_value)) {
        return {0.0, static_cast<double>(bins)};
    }
    const double raw = max_value / static_cast<double>(bins);
    double decade = std::pow(10.0, std::floor(std::log10(raw)));
    for (;;) {
        for (double m : {1.0, 2.0, 5.0}) {
            const double step = m * decade;
            if (step * static_cast<double>(bins) >= max_value) {
                return {0.0, step * static_cast<double>(bins)};
            }
        }
        decade *= 10.0;
    }
}

std::string to_hex(const Rgb& c) {
    auto channel = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(c.r), channel(c.g), channel(c.b));
    return buf;
}

}  // namespace spineviz
