#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "switchstab/format.hpp"
#include "switchstab/model.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/stability.hpp"

namespace switchstab {

/// One swept dwell-time axis: lattice points lo, lo + step, ..., up to hi
/// inclusive, substituted into d[mode].
struct SweepAxis {
    int mode = 0;
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    int count() const {
        return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    }
    double value(int k) const { return lo + k * step; }
};

/// Decision margins within this distance of zero are flagged marginal by
/// default, both in sweeps and in single-point checks.
inline constexpr double kDefaultMarginalBand = 1e-8;

struct SweepConfig {
    SwitchedLinearSystem base;
    SweepAxis axis1;
    SweepAxis axis2;
    int threads = 0;  // 0: resolve from environment / hardware
    double marginal_band = kDefaultMarginalBand;
    CheckOptions check;
};

struct RegionCell {
    bool stable = false;
    double margin = 0.0;  // smallest eigenvalue across the solved Lyapunov matrices
    bool marginal = false;
};

struct RegionGrid {
    SweepAxis axis1;
    SweepAxis axis2;
    std::vector<RegionCell> cells;  // axis1-major: index = i1 * axis2.count() + i2

    const RegionCell& at(int i1, int i2) const {
        return cells[static_cast<std::size_t>(i1) * axis2.count() + i2];
    }
};

namespace detail {

inline void require_valid_axes(const SweepConfig& config) {
    for (const SweepAxis& axis : {config.axis1, config.axis2}) {
        if (axis.mode < 0 || axis.mode >= config.base.m) {
            throw std::invalid_argument("sweep: axis mode index out of range");
        }
        if (axis.lo < 0.0 || axis.hi < axis.lo || !(axis.step > 0.0)) {
            throw std::invalid_argument("sweep: axis range must satisfy 0 <= lo <= hi, step > 0");
        }
    }
    if (config.axis1.mode == config.axis2.mode) {
        throw std::invalid_argument("sweep: axes must select distinct modes");
    }
}

/// Decision margin of one verdict: smallest eigenvalue over the solved
/// Lyapunov matrices (positive exactly when stable). A singular operator has
/// no solution; its cell sits on the existence boundary and is recorded as
/// margin zero.
inline RegionCell cell_from_verdict(const StabilityVerdict& verdict, double marginal_band) {
    RegionCell cell;
    cell.stable = verdict.stable();
    if (verdict.stable()) {
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& p : verdict.certificate->P) margin = std::min(margin, min_eig_sym(p));
        cell.margin = margin;
    } else if (verdict.witness->reason == UnstableReason::NonPositiveDefinite) {
        double margin = std::numeric_limits<double>::infinity();
        for (double e : verdict.witness->min_eigenvalues) margin = std::min(margin, e);
        cell.margin = margin;
    } else {
        cell.margin = 0.0;
    }
    cell.marginal = verdict.marginal() || std::abs(cell.margin) <= marginal_band;
    return cell;
}

}  // namespace detail

/// Evaluate the stability verdict on every lattice point of the two dwell
/// axes. Cells are independent and processed in parallel; the result layout
/// and every numeric value are independent of the worker count.
inline RegionGrid sweep(const SweepConfig& config) {
    detail::require_valid_axes(config);
    RegionGrid grid;
    grid.axis1 = config.axis1;
    grid.axis2 = config.axis2;
    const int c1 = grid.axis1.count();
    const int c2 = grid.axis2.count();
    grid.cells.assign(static_cast<std::size_t>(c1) * c2, RegionCell{});

    parallel_for(0, c1 * c2, resolve_threads(config.threads), [&](int id) {
        SwitchedLinearSystem sys = config.base;
        sys.d[config.axis1.mode] = grid.axis1.value(id / c2);
        sys.d[config.axis2.mode] = grid.axis2.value(id % c2);
        const auto verdict = check_stochastic_stability(validate(std::move(sys)), config.check);
        grid.cells[id] = detail::cell_from_verdict(verdict, config.marginal_band);
    });
    return grid;
}

/// CSV table: one row per cell in axis1-major order with columns
/// d1,d2,verdict,margin,marginal. Floats carry 17 significant digits, so a
/// read-back reproduces every value exactly.
inline void write_region_csv(const RegionGrid& grid, std::ostream& out) {
    out << "d1,d2,verdict,margin,marginal\n";
    for (int i = 0; i < grid.axis1.count(); ++i) {
        for (int j = 0; j < grid.axis2.count(); ++j) {
            const RegionCell& cell = grid.at(i, j);
            out << to_string_17(grid.axis1.value(i)) << "," << to_string_17(grid.axis2.value(j))
                << "," << (cell.stable ? "Stable" : "Unstable") << ","
                << to_string_17(cell.margin) << "," << (cell.marginal ? 1 : 0) << "\n";
        }
    }
}

struct RegionRow {
    double d1 = 0.0;
    double d2 = 0.0;
    bool stable = false;
    double margin = 0.0;
    bool marginal = false;
};

inline std::vector<RegionRow> read_region_csv(std::istream& in) {
    std::vector<RegionRow> rows;
    std::string line;
    if (!std::getline(in, line) || line != "d1,d2,verdict,margin,marginal") {
        throw std::runtime_error("region csv: unexpected header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string field;
        RegionRow row;
        std::getline(fields, field, ',');
        row.d1 = std::stod(field);
        std::getline(fields, field, ',');
        row.d2 = std::stod(field);
        std::getline(fields, field, ',');
        if (field != "Stable" && field != "Unstable") {
            throw std::runtime_error("region csv: bad verdict field: " + field);
        }
        row.stable = field == "Stable";
        std::getline(fields, field, ',');
        row.margin = std::stod(field);
        std::getline(fields, field, ',');
        row.marginal = field == "1";
        rows.push_back(row);
    }
    return rows;
}

/// SVG raster of the region: stable cells shaded, marginal cells hatched,
/// axes labeled with the swept dwell indices.
inline void write_region_svg(const RegionGrid& grid, std::ostream& out) {
    const int c1 = grid.axis1.count();
    const int c2 = grid.axis2.count();
    const double plot = 560.0;
    const double left = 56.0;
    const double bottom = 44.0;
    const double top = 16.0;
    const double cw = plot / c1;
    const double ch = plot / c2;
    const double width = left + plot + 24.0;
    const double height = top + plot + bottom;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <defs>\n"
        << "    <pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\">\n"
        << "      <path d=\"M0,6 L6,0\" stroke=\"#555\" stroke-width=\"1\"/>\n"
        << "    </pattern>\n"
        << "  </defs>\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    for (int i = 0; i < c1; ++i) {
        for (int j = 0; j < c2; ++j) {
            const RegionCell& cell = grid.at(i, j);
            const double x = left + i * cw;
            const double y = top + plot - (j + 1) * ch;
            out << "  <rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw
                << "\" height=\"" << ch << "\" fill=\""
                << (cell.stable ? "#4d88c4" : "#f4f4f4") << "\"/>\n";
            if (cell.marginal) {
                out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw
                    << "\" height=\"" << ch << "\" fill=\"url(#hatch)\"/>\n";
            }
        }
    }
    out << "  <rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot << "\" height=\""
        << plot << "\" fill=\"none\" stroke=\"#222\"/>\n";

    const int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
        const double fx = static_cast<double>(t) / ticks;
        const double vx = grid.axis1.lo + fx * (grid.axis1.value(c1 - 1) - grid.axis1.lo);
        const double px = left + fx * plot;
        out << "  <line x1=\"" << px << "\" y1=\"" << top + plot << "\" x2=\"" << px << "\" y2=\""
            << top + plot + 5 << "\" stroke=\"#222\"/>\n";
        out << "  <text x=\"" << px << "\" y=\"" << top + plot + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << vx << "</text>\n";
        const double vy = grid.axis2.lo + fx * (grid.axis2.value(c2 - 1) - grid.axis2.lo);
        const double py = top + plot - fx * plot;
        out << "  <line x1=\"" << left - 5 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\""
            << py << "\" stroke=\"#222\"/>\n";
        out << "  <text x=\"" << left - 8 << "\" y=\"" << py + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << vy << "</text>\n";
    }
    out << "  <text x=\"" << left + plot / 2 << "\" y=\"" << height - 8
        << "\" font-size=\"13\" text-anchor=\"middle\">d" << grid.axis1.mode + 1 << "</text>\n";
    out << "  <text x=\"14\" y=\"" << top + plot / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << top + plot / 2 << ")\">d" << grid.axis2.mode + 1 << "</text>\n";
    out << "</svg>\n";
}

/// Write PREFIX.csv and PREFIX.svg for a computed grid.
inline void render_region(const RegionGrid& grid, const std::string& prefix) {
    if (grid.cells.empty()) throw std::invalid_argument("render_region: empty grid");
    {
        std::ofstream csv(prefix + ".csv");
        if (!csv) throw std::runtime_error("cannot write " + prefix + ".csv");
        write_region_csv(grid, csv);
    }
    std::ofstream svg(prefix + ".svg");
    if (!svg) throw std::runtime_error("cannot write " + prefix + ".svg");
    write_region_svg(grid, svg);
}

}  // namespace switchstab
