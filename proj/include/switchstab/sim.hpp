#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "switchstab/format.hpp"
#include "switchstab/matrix.hpp"
#include "switchstab/model.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/rng.hpp"

namespace switchstab {

/// One visit to a mode: enter at `start`, hold for exactly `fixed_dwell`,
/// then stay a further `random_dwell` before jumping. The final segment of a
/// sampled path is stored untruncated; consumers clamp at the horizon.
struct Segment {
    int mode;
    double start;
    double fixed_dwell;
    double random_dwell;

    double length() const { return fixed_dwell + random_dwell; }
    double end() const { return start + length(); }
};

struct SwitchingSignalPath {
    std::vector<Segment> segments;
    double horizon = 0.0;
};

/// Segment of the transformed system in which the fixed dwells are removed
/// from the clock and replaced by a state jump at every mode entry.
struct JumpSegment {
    int mode;
    double start;
    double random_dwell;

    double end() const { return start + random_dwell; }
};

struct JumpSystemPath {
    std::vector<JumpSegment> segments;
    double horizon = 0.0;
};

struct PairedPaths {
    SwitchingSignalPath signal;
    JumpSystemPath jump;
};

namespace detail {

/// Embedded-chain transition: partition (0, 1] by pi_ij / nu_i over j != i.
/// Falls back to the last admissible target if u lands in residual round-off.
inline int next_mode(const ValidatedSystem& v, int from, double u) {
    const double nu = v.rate(from);
    double acc = 0.0;
    int last = -1;
    for (int j = 0; j < v.mode_count(); ++j) {
        if (j == from || v.system().Pi(from, j) <= 0.0) continue;
        last = j;
        acc += v.system().Pi(from, j) / nu;
        if (u <= acc) return j;
    }
    return last;
}

}  // namespace detail

/// Draw one switching-signal sample path from mode r0: hold each entered mode
/// for its fixed dwell plus an exponential sojourn, then move along the
/// embedded chain. Exactly one exponential and one jump draw are consumed per
/// segment, so paths sampled at different horizons from the same stream agree
/// on their common prefix.
inline SwitchingSignalPath sample_switching_signal(const ValidatedSystem& v, int r0,
                                                   double horizon, Pcg32& rng) {
    if (r0 < 0 || r0 >= v.mode_count()) {
        throw std::invalid_argument("sample_switching_signal: initial mode out of range");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_switching_signal: horizon must be > 0");

    SwitchingSignalPath path;
    path.horizon = horizon;
    int mode = r0;
    double t = 0.0;
    while (t < horizon) {
        const double eta = rng.exponential(v.rate(mode));
        path.segments.push_back({mode, t, v.dwell(mode), eta});
        t += v.dwell(mode) + eta;
        mode = detail::next_mode(v, mode, rng.uniform_unit());
    }
    return path;
}

/// Sample the signal path and its transformed companion from the same draws:
/// identical mode sequence and sojourns, with the fixed dwells accumulated in
/// the signal clock only. By construction the entry times satisfy
/// t_{k} = t~_{k} + sum of fixed dwells over the first k segments.
inline PairedPaths transform_paired_paths(const ValidatedSystem& v, int r0, double horizon,
                                          Pcg32& rng) {
    if (r0 < 0 || r0 >= v.mode_count()) {
        throw std::invalid_argument("transform_paired_paths: initial mode out of range");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("transform_paired_paths: horizon must be > 0");

    PairedPaths out;
    out.signal.horizon = horizon;
    int mode = r0;
    double t = 0.0;
    double jump_t = 0.0;
    while (t < horizon) {
        const double eta = rng.exponential(v.rate(mode));
        out.signal.segments.push_back({mode, t, v.dwell(mode), eta});
        out.jump.segments.push_back({mode, jump_t, eta});
        t += v.dwell(mode) + eta;
        jump_t += eta;
        mode = detail::next_mode(v, mode, rng.uniform_unit());
    }
    out.jump.horizon = jump_t;
    return out;
}

struct TrajectorySample {
    double t;
    int mode;
    Vector x;
};

using Trajectory = std::vector<TrajectorySample>;

/// Piecewise-exact propagation: within a segment, x(t_k + tau) is computed as
/// expm(A, tau) applied to the segment entry state, so the only error source
/// is the exponential itself. Samples are taken at every multiple of
/// sample_dt, at every switch instant, and at the horizon.
inline Trajectory propagate(const ValidatedSystem& v, const SwitchingSignalPath& path,
                            const Vector& x0, double sample_dt) {
    if (static_cast<int>(x0.size()) != v.dimension()) {
        throw std::invalid_argument("propagate: x0 dimension mismatch");
    }
    if (!(sample_dt > 0.0)) throw std::invalid_argument("propagate: sample_dt must be > 0");

    Trajectory out;
    Vector x_entry = x0;
    long next_tick = 0;
    double last_emitted = -1.0;
    auto emit = [&](double t, int mode, Vector x) {
        out.push_back({t, mode, std::move(x)});
        last_emitted = t;
    };

    for (std::size_t k = 0; k < path.segments.size(); ++k) {
        const Segment& seg = path.segments[k];
        if (seg.start >= path.horizon) break;
        const double stop = std::min(seg.end(), path.horizon);
        emit(seg.start, seg.mode, x_entry);
        for (; static_cast<double>(next_tick) * sample_dt < stop; ++next_tick) {
            const double t = static_cast<double>(next_tick) * sample_dt;
            if (t <= seg.start) continue;  // segment entry already emitted
            emit(t, seg.mode, mat_vec(expm(v.mode(seg.mode), t - seg.start), x_entry));
        }
        if (k + 1 < path.segments.size() && seg.end() < path.horizon) {
            x_entry = mat_vec(expm(v.mode(seg.mode), seg.length()), x_entry);
        } else {
            if (last_emitted < path.horizon) {
                emit(path.horizon, seg.mode,
                     mat_vec(expm(v.mode(seg.mode), path.horizon - seg.start), x_entry));
            }
            break;
        }
    }
    return out;
}

/// Per-segment exact cost integration. The Gramian over each mode's fixed
/// dwell recurs on every visit and is precomputed once; the random part of
/// every sojourn has a fresh length and gets a fresh Gramian.
class CostEvaluator {
public:
    explicit CostEvaluator(const ValidatedSystem& v) : v_(&v) {
        w_fixed_.reserve(v.mode_count());
        for (int i = 0; i < v.mode_count(); ++i) {
            w_fixed_.push_back(cost_gramian(v.mode(i), v.dwell(i)).mat());
        }
    }

    /// Integral of the squared state norm along the path from x0, truncated
    /// at min(up_to, path.horizon).
    double path_cost(const SwitchingSignalPath& path, const Vector& x0,
                     double up_to = std::numeric_limits<double>::infinity()) const {
        if (static_cast<int>(x0.size()) != v_->dimension()) {
            throw std::invalid_argument("path_cost: x0 dimension mismatch");
        }
        const double limit = std::min(up_to, path.horizon);
        double total = 0.0;
        Vector x = x0;
        for (const Segment& seg : path.segments) {
            if (seg.start >= limit) break;
            const double tau = std::min(seg.end(), limit) - seg.start;
            total += segment_cost(seg, tau, x);
            if (seg.end() >= limit) break;
            x = mat_vec(expm(v_->mode(seg.mode), seg.length()), x);
        }
        return total;
    }

private:
    double quadratic(const Matrix& w, const Vector& x) const { return dot(x, mat_vec(w, x)); }

    // Cost of the first tau time units of a segment entered at state x,
    // split at the fixed dwell so the precomputed Gramian applies. Hand-built
    // paths may carry a fixed dwell different from the system's; those fall
    // back to fresh evaluations.
    double segment_cost(const Segment& seg, double tau, const Vector& x) const {
        if (tau < seg.fixed_dwell) {
            return quadratic(cost_gramian(v_->mode(seg.mode), tau).mat(), x);
        }
        const bool canonical = seg.fixed_dwell == v_->dwell(seg.mode);
        double cost = canonical
                          ? quadratic(w_fixed_[seg.mode], x)
                          : quadratic(cost_gramian(v_->mode(seg.mode), seg.fixed_dwell).mat(), x);
        if (tau > seg.fixed_dwell) {
            const Vector y = canonical
                                 ? mat_vec(v_->jump_map(seg.mode), x)
                                 : mat_vec(expm(v_->mode(seg.mode), seg.fixed_dwell), x);
            cost += quadratic(cost_gramian(v_->mode(seg.mode), tau - seg.fixed_dwell).mat(), y);
        }
        return cost;
    }

    const ValidatedSystem* v_;
    std::vector<Matrix> w_fixed_;
};

inline double path_cost(const ValidatedSystem& v, const SwitchingSignalPath& path, const Vector& x0,
                        double up_to = std::numeric_limits<double>::infinity()) {
    return CostEvaluator(v).path_cost(path, x0, up_to);
}

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int runs = 0;
    double horizon = 0.0;
    double half_horizon_mean = 0.0;     // same paths truncated at horizon/2
    double truncated_fraction = 0.0;    // runs whose tail beyond horizon/2 exceeds 5% of total
    std::uint64_t seed = 0;
};

/// Monte Carlo estimate of the expected cost from (x0, r0) over [0, horizon].
/// Replica k draws from the independent stream (seed, k), so results are
/// reproducible bit-for-bit for any worker count; the reduction over the
/// preallocated per-replica results is sequential.
inline CostEstimate estimate_cost(const ValidatedSystem& v, const Vector& x0, int r0, int runs,
                                  double horizon, std::uint64_t seed, int threads = 1) {
    if (runs < 2) throw std::invalid_argument("estimate_cost: at least two runs required");
    if (static_cast<int>(x0.size()) != v.dimension()) {
        throw std::invalid_argument("estimate_cost: x0 dimension mismatch");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("estimate_cost: horizon must be > 0");

    const CostEvaluator eval(v);
    Vector full(static_cast<std::size_t>(runs));
    Vector half(static_cast<std::size_t>(runs));
    parallel_for(0, runs, resolve_threads(threads), [&](int rep) {
        Pcg32 rng(seed, static_cast<std::uint64_t>(rep));
        const SwitchingSignalPath path = sample_switching_signal(v, r0, horizon, rng);
        full[rep] = eval.path_cost(path, x0);
        half[rep] = eval.path_cost(path, x0, 0.5 * horizon);
    });

    CostEstimate est;
    est.runs = runs;
    est.horizon = horizon;
    est.seed = seed;
    double sum = 0.0;
    double half_sum = 0.0;
    int truncated = 0;
    for (int k = 0; k < runs; ++k) {
        sum += full[k];
        half_sum += half[k];
        if (full[k] > 0.0 && (full[k] - half[k]) > 0.05 * full[k]) ++truncated;
    }
    est.mean = sum / runs;
    est.half_horizon_mean = half_sum / runs;
    est.truncated_fraction = static_cast<double>(truncated) / runs;
    double sq = 0.0;
    for (int k = 0; k < runs; ++k) {
        const double delta = full[k] - est.mean;
        sq += delta * delta;
    }
    est.std_error = std::sqrt(sq / (static_cast<double>(runs) - 1.0) / runs);
    return est;
}

/// Propagate the original signal path and the transformed jump path from the
/// same initial state and return the largest state discrepancy
/// max over (k, tau) of || xi(t~_k + tau) - x(t_k + d_k + tau) ||
/// on a per-segment tau grid. The two sides deliberately use different
/// exponential compositions, so agreement is a real numerical check.
inline double check_path_correspondence(const ValidatedSystem& v, const PairedPaths& paths,
                                        const Vector& x0, int samples_per_segment = 8) {
    if (static_cast<int>(x0.size()) != v.dimension()) {
        throw std::invalid_argument("check_path_correspondence: x0 dimension mismatch");
    }
    if (paths.signal.segments.size() != paths.jump.segments.size()) {
        throw std::invalid_argument("check_path_correspondence: paths are not paired");
    }
    double worst = 0.0;
    Vector x_entry = x0;    // x at t_k (signal clock)
    Vector xi_before = x0;  // xi at t~_k^- (jump clock)
    for (std::size_t k = 0; k < paths.signal.segments.size(); ++k) {
        const Segment& seg = paths.signal.segments[k];
        // State jump at mode entry, then both systems evolve with A_{mode}.
        const Vector xi_after = mat_vec(v.jump_map(seg.mode), xi_before);
        for (int s = 0; s <= samples_per_segment; ++s) {
            const double tau = seg.random_dwell * s / samples_per_segment;
            const Vector x_side =
                mat_vec(expm(v.mode(seg.mode), seg.fixed_dwell + tau), x_entry);
            const Vector xi_side = mat_vec(expm(v.mode(seg.mode), tau), xi_after);
            double dev = 0.0;
            for (int c = 0; c < v.dimension(); ++c) {
                const double diff = x_side[c] - xi_side[c];
                dev += diff * diff;
            }
            worst = std::max(worst, std::sqrt(dev));
        }
        x_entry = mat_vec(expm(v.mode(seg.mode), seg.length()), x_entry);
        xi_before = mat_vec(expm(v.mode(seg.mode), seg.random_dwell), xi_after);
    }
    return worst;
}

/// CSV trajectory export: header t,mode,x_1..x_n; one row per sample; modes
/// printed 1-based to match the command-line convention.
inline void write_trajectory_csv(const Trajectory& traj, int dimension, std::ostream& out) {
    out << "t,mode";
    for (int c = 1; c <= dimension; ++c) out << ",x_" << c;
    out << "\n";
    for (const TrajectorySample& s : traj) {
        out << to_string_17(s.t) << "," << s.mode + 1;
        for (double xc : s.x) out << "," << to_string_17(xc);
        out << "\n";
    }
}

inline void save_trajectory_csv(const Trajectory& traj, int dimension, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
    write_trajectory_csv(traj, dimension, out);
}

inline nlohmann::json estimate_to_json(const CostEstimate& est) {
    nlohmann::json j;
    j["mean"] = est.mean;
    j["std_error"] = est.std_error;
    j["runs"] = est.runs;
    j["horizon"] = est.horizon;
    j["half_horizon_mean"] = est.half_horizon_mean;
    j["seed"] = est.seed;
    return j;
}

inline void save_estimate(const CostEstimate& est, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write estimate file: " + path);
    out << estimate_to_json(est).dump(2) << "\n";
}

}  // namespace switchstab
