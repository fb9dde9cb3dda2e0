#include "switchstab/sweep.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

using switchstab::Matrix;
using switchstab::RegionGrid;
using switchstab::SweepAxis;
using switchstab::SweepConfig;
using switchstab::SwitchedLinearSystem;
using switchstab::Vector;

namespace {

SwitchedLinearSystem MakeSystem(std::vector<Matrix> a, Vector d, Matrix pi) {
    SwitchedLinearSystem sys;
    sys.n = a[0].rows();
    sys.m = static_cast<int>(a.size());
    sys.A = std::move(a);
    sys.d = std::move(d);
    sys.Pi = std::move(pi);
    return sys;
}

SwitchedLinearSystem Case2(double d1, double d2) {
    return MakeSystem({Matrix{{-1.0, 0.0}, {1.0, -1.0}}, Matrix{{0.3, 0.1}, {0.0, 0.2}}},
                      {d1, d2}, Matrix{{-1.0, 1.0}, {1.0, -1.0}});
}

SweepConfig Case2Config(double lo, double hi, double step) {
    SweepConfig config;
    config.base = Case2(0.0, 0.0);
    config.axis1 = SweepAxis{0, lo, hi, step};
    config.axis2 = SweepAxis{1, lo, hi, step};
    return config;
}

std::string GridCsv(const RegionGrid& grid) {
    std::ostringstream out;
    switchstab::write_region_csv(grid, out);
    return out.str();
}

}  // namespace

TEST(SweepAxisLattice, CountAndValuesWithInexactStep) {
    const SweepAxis axis{0, 0.0, 5.0, 0.1};
    ASSERT_EQ(axis.count(), 51);
    EXPECT_DOUBLE_EQ(axis.value(0), 0.0);
    EXPECT_NEAR(axis.value(50), 5.0, 1e-12);

    const SweepAxis single{1, 2.0, 2.0, 1.0};
    ASSERT_EQ(single.count(), 1);
    EXPECT_DOUBLE_EQ(single.value(0), 2.0);

    // hi that is not on the lattice: last point stays below it.
    const SweepAxis ragged{0, 0.0, 1.05, 0.5};
    ASSERT_EQ(ragged.count(), 3);
    EXPECT_DOUBLE_EQ(ragged.value(2), 1.0);
}

TEST(Sweep, SingleCellMatchesDirectCheck) {
    SweepConfig config = Case2Config(0.0, 0.0, 1.0);
    config.axis1 = SweepAxis{0, 10.0, 10.0, 1.0};
    config.axis2 = SweepAxis{1, 0.0, 0.0, 1.0};
    const RegionGrid grid = switchstab::sweep(config);
    ASSERT_EQ(grid.cells.size(), 1u);

    const auto verdict =
        switchstab::check_stochastic_stability(switchstab::validate(Case2(10.0, 0.0)));
    ASSERT_TRUE(verdict.stable());
    EXPECT_TRUE(grid.at(0, 0).stable);

    double expected = std::numeric_limits<double>::infinity();
    for (const auto& p : verdict.certificate->P) {
        expected = std::min(expected, switchstab::min_eig_sym(p));
    }
    EXPECT_DOUBLE_EQ(grid.at(0, 0).margin, expected);
    EXPECT_GT(grid.at(0, 0).margin, 0.0);
}

TEST(Sweep, SampledCellsAgreeWithDirectVerdicts) {
    const SweepConfig config = Case2Config(0.0, 3.0, 0.5);
    const RegionGrid grid = switchstab::sweep(config);
    ASSERT_EQ(grid.cells.size(), 49u);

    bool saw_stable = false;
    bool saw_unstable = false;
    for (int i = 0; i < 7; i += 2) {
        for (int j = 0; j < 7; j += 3) {
            const auto verdict = switchstab::check_stochastic_stability(
                switchstab::validate(Case2(grid.axis1.value(i), grid.axis2.value(j))));
            EXPECT_EQ(grid.at(i, j).stable, verdict.stable())
                << "cell (" << grid.axis1.value(i) << ", " << grid.axis2.value(j) << ")";
            saw_stable = saw_stable || verdict.stable();
            saw_unstable = saw_unstable || !verdict.stable();
        }
    }
    // The window straddles the boundary, so both verdicts must occur.
    EXPECT_TRUE(saw_stable);
    EXPECT_TRUE(saw_unstable);
}

TEST(Sweep, WorkerCountDoesNotChangeOutput) {
    SweepConfig config = Case2Config(0.0, 2.0, 0.25);
    config.threads = 1;
    const std::string csv1 = GridCsv(switchstab::sweep(config));
    config.threads = 4;
    const std::string csv4 = GridCsv(switchstab::sweep(config));
    EXPECT_EQ(csv1, csv4);
    EXPECT_NE(csv1.find("Stable"), std::string::npos);
}

TEST(Sweep, SingularCellIsRecordedNotFatal) {
    // Identity dynamics with zero dwell make the coupled operator exactly
    // singular at the (0, 0) corner; the sweep must still finish.
    SweepConfig config;
    config.base =
        MakeSystem({Matrix::identity(2), Matrix::identity(2)}, {0.0, 0.0},
                   Matrix{{-1.0, 1.0}, {1.0, -1.0}});
    config.axis1 = SweepAxis{0, 0.0, 0.5, 0.5};
    config.axis2 = SweepAxis{1, 0.0, 0.5, 0.5};
    const RegionGrid grid = switchstab::sweep(config);
    ASSERT_EQ(grid.cells.size(), 4u);

    const auto& corner = grid.at(0, 0);
    EXPECT_FALSE(corner.stable);
    EXPECT_TRUE(corner.marginal);
    EXPECT_DOUBLE_EQ(corner.margin, 0.0);
    for (const auto& cell : grid.cells) EXPECT_FALSE(cell.stable);
}

TEST(Sweep, MarginalBandFlagsNearZeroMargins) {
    SweepConfig config = Case2Config(0.0, 2.0, 0.5);
    config.marginal_band = 1e9;  // absurdly wide: every finite margin is near zero
    const RegionGrid grid = switchstab::sweep(config);
    for (const auto& cell : grid.cells) EXPECT_TRUE(cell.marginal);
}

TEST(Sweep, RejectsBadAxes) {
    SweepConfig config = Case2Config(0.0, 1.0, 0.5);
    config.axis2.mode = 0;  // duplicate of axis1
    EXPECT_THROW(switchstab::sweep(config), std::invalid_argument);

    config = Case2Config(0.0, 1.0, 0.5);
    config.axis1.step = 0.0;
    EXPECT_THROW(switchstab::sweep(config), std::invalid_argument);

    config = Case2Config(0.0, 1.0, 0.5);
    config.axis1.lo = -0.5;
    EXPECT_THROW(switchstab::sweep(config), std::invalid_argument);

    config = Case2Config(0.0, 1.0, 0.5);
    config.axis1.hi = -1.0;
    EXPECT_THROW(switchstab::sweep(config), std::invalid_argument);

    config = Case2Config(0.0, 1.0, 0.5);
    config.axis2.mode = 7;
    EXPECT_THROW(switchstab::sweep(config), std::invalid_argument);
}

TEST(RegionCsv, RoundTripReproducesEveryCell) {
    const RegionGrid grid = switchstab::sweep(Case2Config(0.0, 1.5, 0.5));
    std::stringstream buffer;
    switchstab::write_region_csv(grid, buffer);
    const auto rows = switchstab::read_region_csv(buffer);
    ASSERT_EQ(rows.size(), grid.cells.size());

    std::size_t k = 0;
    for (int i = 0; i < grid.axis1.count(); ++i) {
        for (int j = 0; j < grid.axis2.count(); ++j, ++k) {
            EXPECT_EQ(rows[k].d1, grid.axis1.value(i));
            EXPECT_EQ(rows[k].d2, grid.axis2.value(j));
            EXPECT_EQ(rows[k].stable, grid.at(i, j).stable);
            EXPECT_EQ(rows[k].margin, grid.at(i, j).margin);  // exact: 17 digits
            EXPECT_EQ(rows[k].marginal, grid.at(i, j).marginal);
        }
    }
}

TEST(RegionCsv, RejectsForeignHeader) {
    std::istringstream bad("x,y,z\n1,2,3\n");
    EXPECT_THROW(switchstab::read_region_csv(bad), std::runtime_error);
}

TEST(RegionSvg, ContainsCellsAxesAndHatching) {
    SweepConfig config;
    config.base =
        MakeSystem({Matrix::identity(2), Matrix::identity(2)}, {0.0, 0.0},
                   Matrix{{-1.0, 1.0}, {1.0, -1.0}});
    config.axis1 = SweepAxis{0, 0.0, 1.0, 0.5};
    config.axis2 = SweepAxis{1, 0.0, 1.0, 0.5};
    RegionGrid grid = switchstab::sweep(config);
    // Force one stable cell so both fills appear.
    grid.cells[1].stable = true;

    std::ostringstream out;
    switchstab::write_region_svg(grid, out);
    const std::string svg = out.str();
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("url(#hatch)"), std::string::npos);
    EXPECT_NE(svg.find(">d1<"), std::string::npos);
    EXPECT_NE(svg.find(">d2<"), std::string::npos);

    std::size_t cell_count = 0;
    for (std::size_t pos = svg.find("class=\"cell\""); pos != std::string::npos;
         pos = svg.find("class=\"cell\"", pos + 1)) {
        ++cell_count;
    }
    EXPECT_EQ(cell_count, grid.cells.size());
}

TEST(RenderRegion, WritesCsvAndSvgFiles) {
    const RegionGrid grid = switchstab::sweep(Case2Config(0.0, 1.0, 0.5));
    const auto prefix =
        (std::filesystem::temp_directory_path() / "switchstab_region_test").string();
    switchstab::render_region(grid, prefix);

    std::ifstream csv(prefix + ".csv");
    ASSERT_TRUE(csv.good());
    const auto rows = switchstab::read_region_csv(csv);
    EXPECT_EQ(rows.size(), grid.cells.size());

    std::ifstream svg(prefix + ".svg");
    ASSERT_TRUE(svg.good());
    std::stringstream svg_text;
    svg_text << svg.rdbuf();
    EXPECT_NE(svg_text.str().find("</svg>"), std::string::npos);

    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".svg").c_str());
}
