#pragma once

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "switchstab/format.hpp"
#include "switchstab/lemmas.hpp"
#include "switchstab/model.hpp"
#include "switchstab/rng.hpp"
#include "switchstab/sim.hpp"
#include "switchstab/stability.hpp"
#include "switchstab/sweep.hpp"

namespace switchstab::cli {

namespace detail {

inline Vector parse_csv_numbers(const std::string& text, const std::string& what) {
    Vector values;
    std::istringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "not a comma-separated number list: " + text);
        }
    }
    if (values.empty()) throw CLI::ValidationError(what, "empty list");
    return values;
}

inline SweepAxis parse_grid_axis(const std::string& text, int mode) {
    std::istringstream in(text);
    std::string lo, hi, step;
    if (!std::getline(in, lo, ':') || !std::getline(in, hi, ':') || !std::getline(in, step) ||
        in.rdbuf()->in_avail() != 0) {
        throw CLI::ValidationError("--grid", "axis must look like lo:hi:step, got: " + text);
    }
    try {
        return SweepAxis{mode, std::stod(lo), std::stod(hi), std::stod(step)};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--grid", "axis must look like lo:hi:step, got: " + text);
    }
}

inline ValidatedSystem load_validated(const std::string& model_path, const std::string& d_csv) {
    SwitchedLinearSystem sys = load_system(model_path);
    if (!d_csv.empty()) {
        Vector d = parse_csv_numbers(d_csv, "--d");
        if (static_cast<int>(d.size()) != sys.m) {
            throw std::invalid_argument("--d expects " + std::to_string(sys.m) +
                                        " values for this model, got " +
                                        std::to_string(d.size()));
        }
        sys.d = std::move(d);
    }
    return validate(std::move(sys));
}

/// Mode indices are 1-based on the command line, matching trajectory CSV
/// output; internal storage is 0-based.
inline int parse_mode_index(int r0_user, int mode_count, const std::string& what) {
    if (r0_user < 1 || r0_user > mode_count) {
        throw std::invalid_argument(what + " must be in [1, " + std::to_string(mode_count) +
                                    "], got " + std::to_string(r0_user));
    }
    return r0_user - 1;
}

inline int run_check(const std::string& model_path, const std::string& d_csv,
                     const std::string& cert_path, bool fail_on_unstable) {
    const ValidatedSystem v = load_validated(model_path, d_csv);
    const StabilityVerdict verdict = check_stochastic_stability(v);
    const RegionCell cell = switchstab::detail::cell_from_verdict(verdict, kDefaultMarginalBand);

    std::cout << "verdict: " << (cell.stable ? "Stable" : "Unstable") << "\n";
    std::cout << "margin: " << to_string_17(cell.margin) << "\n";
    std::cout << "marginal: " << (cell.marginal ? "true" : "false") << "\n";
    if (!verdict.stable() && verdict.witness->reason == UnstableReason::SingularOperator) {
        std::cout << "note: coupled operator singular (condition estimate "
                  << to_string_17(verdict.witness->condition_estimate) << ")\n";
    }
    if (!cert_path.empty()) {
        if (!verdict.stable()) {
            throw std::runtime_error("no certificate to write: verdict is Unstable");
        }
        save_certificate(*verdict.certificate, cert_path);
        std::cout << "certificate: " << cert_path << "\n";
    }
    return (fail_on_unstable && !cell.stable) ? 2 : 0;
}

inline int run_sweep(const std::string& model_path, const std::string& d_csv,
                     const std::string& grid_arg, const std::string& modes_csv,
                     const std::string& out_prefix, int threads) {
    SweepConfig config;
    {
        const ValidatedSystem v = load_validated(model_path, d_csv);
        config.base = v.system();
    }

    int mode1 = 0;
    int mode2 = 1;
    if (!modes_csv.empty()) {
        const Vector modes = parse_csv_numbers(modes_csv, "--modes");
        if (modes.size() != 2) throw std::invalid_argument("--modes expects exactly two indices");
        mode1 = parse_mode_index(static_cast<int>(modes[0]), config.base.m, "--modes");
        mode2 = parse_mode_index(static_cast<int>(modes[1]), config.base.m, "--modes");
    }

    std::istringstream axes(grid_arg);
    std::string axis1, axis2;
    if (!std::getline(axes, axis1, ',') || !std::getline(axes, axis2)) {
        throw CLI::ValidationError("--grid", "expected lo:hi:step,lo:hi:step");
    }
    config.axis1 = parse_grid_axis(axis1, mode1);
    config.axis2 = parse_grid_axis(axis2, mode2);
    config.threads = threads;

    const RegionGrid grid = sweep(config);
    render_region(grid, out_prefix);

    int stable = 0;
    int marginal = 0;
    for (const auto& cell : grid.cells) {
        stable += cell.stable ? 1 : 0;
        marginal += cell.marginal ? 1 : 0;
    }
    std::cout << "cells: " << grid.cells.size() << " stable: " << stable
              << " marginal: " << marginal << "\n";
    std::cout << "wrote: " << out_prefix << ".csv " << out_prefix << ".svg\n";
    return 0;
}

inline int run_simulate(const std::string& model_path, const std::string& d_csv,
                        const std::string& x0_csv, int r0_user, int runs, double horizon,
                        std::uint64_t seed, int threads, const std::string& out_path) {
    const ValidatedSystem v = load_validated(model_path, d_csv);
    const Vector x0 = parse_csv_numbers(x0_csv, "--x0");
    const int r0 = parse_mode_index(r0_user, v.mode_count(), "--r0");
    const CostEstimate est =
        estimate_cost(v, x0, r0, runs, horizon, seed, resolve_threads(threads));
    std::cout << estimate_to_json(est).dump(2) << "\n";
    if (!out_path.empty()) save_estimate(est, out_path);
    return 0;
}

inline int run_verify(const std::string& model_path, const std::string& d_csv,
                      const std::string& cert_path) {
    const ValidatedSystem v = load_validated(model_path, d_csv);
    const StabilityCertificate cert = load_certificate(cert_path);
    const double margin = verify_certificate(v, cert);
    bool positive = true;
    for (const auto& p : cert.P) positive = positive && min_eig_sym(p) > 0.0;

    std::cout << "margin: " << to_string_17(margin) << "\n";
    std::cout << "certificate: " << ((margin < 0.0 && positive) ? "valid" : "INVALID") << "\n";
    return 0;
}

inline int run_lemmas(std::uint64_t seed, int samples) {
    if (samples < 100) throw std::invalid_argument("--samples must be at least 100");

    std::cout << "trajectory-norm lower bound:   ||exp(A t) x||^2 >= exp(c0 t) ||x||^2,"
                 " c0 = min eig(A + A')\n";
    Pcg32 rng(seed, 0);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 64; ++trial) {
        Matrix a(2, 2);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) a(r, c) = 2.0 * rng.uniform_unit() - 1.0;
        }
        const double t = 2.0 * rng.uniform_unit();
        const Vector x{1.0, -1.0};
        const Vector xt = mat_vec(expm(a, t), x);
        const double ratio = dot(xt, xt) / dot(x, x);
        worst = std::min(worst, ratio - std::exp(growth_constant(a) * t));
    }
    std::cout << "  64 random flows, worst slack " << to_string_17(worst)
              << (worst >= -1e-12 ? " (bound holds)\n" : " (BOUND VIOLATED)\n");

    std::cout << "dwell-tail expectation check:  E[int_b^{b+X} exp(a s) ds],"
                 " X ~ Exp(rate), closed form exp(a b)/(rate - a)\n";
    std::cout << "  rate      a         b | closed form        monte carlo        |diff|/SE\n";
    bool all_close = true;
    std::uint64_t row_stream = 1;
    for (double rate : {0.5, 1.0, 2.0}) {
        for (double a : {-1.0, 0.0, 0.4 * rate}) {
            const double b = 1.0;
            const double closed = exp_integral_expectation(rate, a, b);
            Pcg32 mc(seed, row_stream++);
            double sum = 0.0;
            double sum_sq = 0.0;
            for (int k = 0; k < samples; ++k) {
                const double x = mc.exponential(rate);
                const double value =
                    a == 0.0 ? x : (std::exp(a * (b + x)) - std::exp(a * b)) / a;
                sum += value;
                sum_sq += value * value;
            }
            const double mean = sum / samples;
            const double se =
                std::sqrt((sum_sq / samples - mean * mean) / (samples - 1.0));
            const double sigmas = std::abs(mean - closed) / se;
            all_close = all_close && sigmas < 4.0;
            char row[160];
            std::snprintf(row, sizeof row, "  %-9g %-9g %g | %-18.12g %-18.12g %.2f\n", rate, a,
                          b, closed, mean, sigmas);
            std::cout << row;
        }
    }
    std::cout << (all_close ? "  all within 4 standard errors\n"
                            : "  DISAGREEMENT beyond 4 standard errors\n");
    return all_close && worst >= -1e-12 ? 0 : 1;
}

}  // namespace detail

/// Entry point for the command-line tool. Returns the process exit status:
/// 0 on successful analysis, 1 on usage/IO/validation errors, 2 when
/// `check --fail-on-unstable` finds the system Unstable.
inline int run(int argc, char** argv) {
    CLI::App app{"Stochastic stability toolkit for dwell-time switched linear systems"};
    app.set_version_flag("--version", "switchstab 1.0.0");
    app.require_subcommand(1);

    // An explicitly supplied empty value would otherwise be indistinguishable
    // from an omitted option and fall back to its default silently.
    const CLI::Validator nonempty(
        [](std::string& value) {
            return value.empty() ? std::string("requires a non-empty value") : std::string();
        },
        "", "NONEMPTY");

    std::string model_path;
    std::string d_csv;
    std::string cert_path;
    std::string grid_arg;
    std::string modes_csv;
    std::string out_path;
    std::string x0_csv;
    int r0_user = 1;
    int runs = 10000;
    double horizon = 100.0;
    std::uint64_t seed = 0;
    int threads = 0;
    int samples = 100000;
    bool fail_on_unstable = false;
    int rc = 0;

    CLI::App* check = app.add_subcommand("check", "Decide stability of one model");
    check->add_option("--model", model_path, "model JSON file")->required()->check(nonempty);
    check->add_option("--d", d_csv, "override fixed dwell times, one value per mode")
        ->check(nonempty);
    check->add_option("--cert", cert_path, "write the stability certificate here")
        ->check(nonempty);
    check->add_flag("--fail-on-unstable", fail_on_unstable, "exit 2 when Unstable");
    check->callback(
        [&] { rc = detail::run_check(model_path, d_csv, cert_path, fail_on_unstable); });

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Map the stability region over two dwell times");
    sweep_cmd->add_option("--model", model_path, "model JSON file")->required()->check(nonempty);
    sweep_cmd->add_option("--grid", grid_arg, "two axes as lo:hi:step,lo:hi:step")
        ->required()
        ->check(nonempty);
    sweep_cmd->add_option("--modes", modes_csv, "the two swept mode indices (default 1,2)")
        ->check(nonempty);
    sweep_cmd->add_option("--d", d_csv, "base dwell times for the unswept modes")
        ->check(nonempty);
    sweep_cmd->add_option("--out", out_path, "output prefix for .csv and .svg")
        ->required()
        ->check(nonempty);
    sweep_cmd->add_option("--threads", threads, "worker count (default: SWITCHSTAB_THREADS)");
    sweep_cmd->callback([&] {
        rc = detail::run_sweep(model_path, d_csv, grid_arg, modes_csv, out_path, threads);
    });

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo quadratic cost estimate");
    simulate->add_option("--model", model_path, "model JSON file")->required()->check(nonempty);
    simulate->add_option("--x0", x0_csv, "initial state, comma separated")
        ->required()
        ->check(nonempty);
    simulate->add_option("--r0", r0_user, "initial mode, 1-based (default 1)");
    simulate->add_option("--runs", runs, "replica count (default 10000)");
    simulate->add_option("--horizon", horizon, "time horizon (default 100)");
    simulate->add_option("--seed", seed, "random seed (default 0)");
    simulate->add_option("--threads", threads, "worker count (default: SWITCHSTAB_THREADS)");
    simulate->add_option("--d", d_csv, "override fixed dwell times")->check(nonempty);
    simulate->add_option("--out", out_path, "also write the estimate JSON here")
        ->check(nonempty);
    simulate->callback([&] {
        rc = detail::run_simulate(model_path, d_csv, x0_csv, r0_user, runs, horizon, seed,
                                  threads, out_path);
    });

    CLI::App* verify = app.add_subcommand("verify", "Re-check a stored certificate");
    verify->add_option("--model", model_path, "model JSON file")->required()->check(nonempty);
    verify->add_option("--cert", cert_path, "certificate JSON file")->required()->check(nonempty);
    verify->add_option("--d", d_csv, "override fixed dwell times")->check(nonempty);
    verify->callback([&] { rc = detail::run_verify(model_path, d_csv, cert_path); });

    CLI::App* lemmas = app.add_subcommand("lemmas", "Spot-check the supporting bounds");
    lemmas->add_option("--seed", seed, "random seed (default 0)");
    lemmas->add_option("--samples", samples, "Monte Carlo samples per cell (default 100000)");
    lemmas->callback([&] { rc = detail::run_lemmas(seed, samples); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

}  // namespace switchstab::cli
