#pragma once

#include <string>

namespace spineviz {

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;

    friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

// Piecewise-linear interpolation of the 256-entry viridis table; u is
// clamped to [0, 1].
Rgb viridis(double u);
const Rgb& viridis_entry(int index);

// Uniform bins over [lo, hi]; values outside are clamped and hi maps to the
// last bin. Requires bins >= 2 and hi > lo.
int discretize(double value, ValueRange range, int bins);

// The one value->color mapping shared by every view. bins == 0 is the
// continuous map; otherwise bin k of n maps to viridis(k / (n - 1)).
Rgb value_color(double value, ValueRange range, int bins);

// [0, bins * step] with step the smallest of {1, 2, 5} x 10^k such that
// bins * step >= max_value; bin edges are then multiples of step.
ValueRange nice_range(double max_value, int bins);

std::string to_hex(const Rgb& c);

}  // namespace spineviz
