#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "switchstab/matrix.hpp"

namespace switchstab {

/// Continuous-time switched linear system: m modes with dynamics matrices
/// A[i], a fixed dwell time d[i] spent in mode i after every entry, and a
/// generator Pi driving the random part of the sojourn and the jump chain.
struct SwitchedLinearSystem {
    int n = 0;
    int m = 0;
    std::vector<Matrix> A;
    Vector d;
    Matrix Pi;
};

/// Per-mode quantities derived at validation time: the state map over the
/// fixed dwell, E[i] = e^{A_i d_i}, and the exponential sojourn rate
/// nu[i] = -Pi(i, i).
struct ModeDerived {
    std::vector<Matrix> E;
    Vector nu;
};

enum class IssueKind { AbsorbingMode, NegativeDwell, BadGeneratorRow, DimensionMismatch };

struct ValidationIssue {
    IssueKind kind;
    int mode;  // -1 when the issue is not tied to one mode
    std::string detail;
};

inline std::string describe(const ValidationIssue& issue) {
    std::ostringstream out;
    switch (issue.kind) {
        case IssueKind::AbsorbingMode: out << "AbsorbingMode"; break;
        case IssueKind::NegativeDwell: out << "NegativeDwell"; break;
        case IssueKind::BadGeneratorRow: out << "BadGeneratorRow"; break;
        case IssueKind::DimensionMismatch: out << "DimensionMismatch"; break;
    }
    if (issue.mode >= 0) out << "(mode " << issue.mode + 1 << ")";
    if (!issue.detail.empty()) out << ": " << issue.detail;
    return out.str();
}

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<ValidationIssue> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<ValidationIssue>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<ValidationIssue>& issues) {
        std::string msg = "invalid system";
        const char* sep = ": ";
        for (const auto& issue : issues) {
            msg += sep;
            msg += describe(issue);
            sep = "; ";
        }
        return msg;
    }

    std::vector<ValidationIssue> issues_;
};

/// Collect every violated model invariant (empty result means valid).
inline std::vector<ValidationIssue> check_system(const SwitchedLinearSystem& sys) {
    std::vector<ValidationIssue> issues;
    auto add = [&issues](IssueKind kind, int mode, std::string detail) {
        issues.push_back({kind, mode, std::move(detail)});
    };

    if (sys.n < 1) add(IssueKind::DimensionMismatch, -1, "state dimension must be >= 1");
    if (sys.m < 2) add(IssueKind::DimensionMismatch, -1, "at least two modes required");
    if (static_cast<int>(sys.A.size()) != sys.m) {
        add(IssueKind::DimensionMismatch, -1,
            "expected " + std::to_string(sys.m) + " mode matrices, got " +
                std::to_string(sys.A.size()));
    }
    if (static_cast<int>(sys.d.size()) != sys.m) {
        add(IssueKind::DimensionMismatch, -1,
            "expected " + std::to_string(sys.m) + " dwell times, got " +
                std::to_string(sys.d.size()));
    }
    for (int i = 0; i < static_cast<int>(sys.A.size()); ++i) {
        if (sys.A[i].rows() != sys.n || sys.A[i].cols() != sys.n) {
            add(IssueKind::DimensionMismatch, i,
                "A is " + std::to_string(sys.A[i].rows()) + "x" + std::to_string(sys.A[i].cols()) +
                    ", expected " + std::to_string(sys.n) + "x" + std::to_string(sys.n));
        } else if (!sys.A[i].is_finite()) {
            add(IssueKind::DimensionMismatch, i, "A has non-finite entries");
        }
    }
    for (int i = 0; i < static_cast<int>(sys.d.size()); ++i) {
        if (!(sys.d[i] >= 0.0)) add(IssueKind::NegativeDwell, i, "d = " + std::to_string(sys.d[i]));
    }

    if (sys.Pi.rows() != sys.m || sys.Pi.cols() != sys.m) {
        add(IssueKind::DimensionMismatch, -1,
            "Pi is " + std::to_string(sys.Pi.rows()) + "x" + std::to_string(sys.Pi.cols()) +
                ", expected " + std::to_string(sys.m) + "x" + std::to_string(sys.m));
        return issues;
    }
    if (!sys.Pi.is_finite()) {
        add(IssueKind::BadGeneratorRow, -1, "Pi has non-finite entries");
        return issues;
    }
    const double row_tol = scaled_tol(1e-12, sys.Pi.frobenius_norm());
    for (int i = 0; i < sys.m; ++i) {
        double row_sum = 0.0;
        bool row_ok = true;
        for (int j = 0; j < sys.m; ++j) {
            row_sum += sys.Pi(i, j);
            if (j != i && sys.Pi(i, j) < 0.0) {
                add(IssueKind::BadGeneratorRow, i,
                    "negative off-diagonal rate " + std::to_string(sys.Pi(i, j)));
                row_ok = false;
                break;
            }
        }
        if (!row_ok) continue;
        if (std::abs(row_sum) > row_tol) {
            add(IssueKind::BadGeneratorRow, i, "row sums to " + std::to_string(row_sum));
        } else if (sys.Pi(i, i) >= 0.0) {
            // Zero diagonal with a zero row sum means the chain can never
            // leave mode i; that regime is rejected rather than modeled.
            add(IssueKind::AbsorbingMode, i, "diagonal rate is zero");
        }
    }
    return issues;
}

/// A system that passed validation, with the generator diagonal re-normalized
/// to make rows sum to zero exactly and the per-mode derived data attached.
class ValidatedSystem {
public:
    const SwitchedLinearSystem& system() const { return sys_; }
    const ModeDerived& derived() const { return derived_; }

    int dimension() const { return sys_.n; }
    int mode_count() const { return sys_.m; }
    const Matrix& mode(int i) const { return sys_.A[i]; }
    double dwell(int i) const { return sys_.d[i]; }
    /// E_i = e^{A_i d_i}, the state map across the fixed dwell of mode i.
    const Matrix& jump_map(int i) const { return derived_.E[i]; }
    /// nu_i = -Pi(i, i), rate of the exponential part of the sojourn.
    double rate(int i) const { return derived_.nu[i]; }

private:
    friend ValidatedSystem validate(SwitchedLinearSystem sys);
    ValidatedSystem(SwitchedLinearSystem sys, ModeDerived derived)
        : sys_(std::move(sys)), derived_(std::move(derived)) {}

    SwitchedLinearSystem sys_;
    ModeDerived derived_;
};

/// Validate and derive. Throws ValidationError carrying every violated
/// invariant at once.
inline ValidatedSystem validate(SwitchedLinearSystem sys) {
    auto issues = check_system(sys);
    if (!issues.empty()) throw ValidationError(std::move(issues));

    for (int i = 0; i < sys.m; ++i) {
        double off = 0.0;
        for (int j = 0; j < sys.m; ++j) {
            if (j != i) off += sys.Pi(i, j);
        }
        sys.Pi(i, i) = -off;
    }
    ModeDerived derived;
    derived.E.reserve(sys.m);
    derived.nu.reserve(sys.m);
    for (int i = 0; i < sys.m; ++i) {
        derived.E.push_back(expm(sys.A[i], sys.d[i]));
        derived.nu.push_back(-sys.Pi(i, i));
    }
    return ValidatedSystem(std::move(sys), std::move(derived));
}

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty()) {
        throw std::runtime_error(where + ": expected a non-empty array of rows");
    }
    const int nrows = static_cast<int>(rows.size());
    int ncols = -1;
    Matrix out;
    for (int r = 0; r < nrows; ++r) {
        const auto& row = rows[r];
        if (!row.is_array()) throw std::runtime_error(where + ": row " + std::to_string(r) + " is not an array");
        if (ncols < 0) {
            ncols = static_cast<int>(row.size());
            out = Matrix(nrows, ncols);
        }
        if (static_cast<int>(row.size()) != ncols) {
            throw ValidationError({{IssueKind::DimensionMismatch, -1,
                                    where + " row " + std::to_string(r) + " has " +
                                        std::to_string(row.size()) + " entries, expected " +
                                        std::to_string(ncols)}});
        }
        for (int c = 0; c < ncols; ++c) {
            if (!row[c].is_number()) {
                throw std::runtime_error(where + "[" + std::to_string(r) + "][" +
                                         std::to_string(c) + "]: expected a number");
            }
            out(r, c) = row[c].get<double>();
        }
    }
    return out;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline constexpr int kModelSchemaVersion = 1;

inline SwitchedLinearSystem system_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("model: expected a JSON object");
    if (j.contains("schema") && j.at("schema").get<int>() != kModelSchemaVersion) {
        throw std::runtime_error("model: unsupported schema version " + j.at("schema").dump());
    }
    for (const char* field : {"n", "m", "modes", "Pi"}) {
        if (!j.contains(field)) throw std::runtime_error(std::string("model: missing field \"") + field + "\"");
    }
    SwitchedLinearSystem sys;
    if (!j.at("n").is_number_integer() || !j.at("m").is_number_integer()) {
        throw std::runtime_error("model: \"n\" and \"m\" must be integers");
    }
    sys.n = j.at("n").get<int>();
    sys.m = j.at("m").get<int>();
    const auto& modes = j.at("modes");
    if (!modes.is_array()) throw std::runtime_error("model: \"modes\" must be an array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string where = "modes[" + std::to_string(i) + "]";
        const auto& mode = modes[i];
        if (!mode.is_object() || !mode.contains("A") || !mode.contains("d")) {
            throw std::runtime_error("model: " + where + " must be an object with \"A\" and \"d\"");
        }
        sys.A.push_back(detail::matrix_from_json(mode.at("A"), where + ".A"));
        if (!mode.at("d").is_number()) throw std::runtime_error("model: " + where + ".d must be a number");
        sys.d.push_back(mode.at("d").get<double>());
    }
    sys.Pi = detail::matrix_from_json(j.at("Pi"), "Pi");
    return sys;
}

inline nlohmann::json system_to_json(const SwitchedLinearSystem& sys) {
    nlohmann::json j;
    j["schema"] = kModelSchemaVersion;
    j["n"] = sys.n;
    j["m"] = sys.m;
    nlohmann::json modes = nlohmann::json::array();
    for (int i = 0; i < static_cast<int>(sys.A.size()); ++i) {
        nlohmann::json mode;
        mode["A"] = detail::matrix_to_json(sys.A[i]);
        mode["d"] = i < static_cast<int>(sys.d.size()) ? sys.d[i] : 0.0;
        modes.push_back(std::move(mode));
    }
    j["modes"] = std::move(modes);
    j["Pi"] = detail::matrix_to_json(sys.Pi);
    return j;
}

/// Read a system from a JSON model file. Errors carry the path and, where
/// possible, the offending field.
inline SwitchedLinearSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return system_from_json(j);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_system(const SwitchedLinearSystem& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << system_to_json(sys).dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing model file: " + path);
}

}  // namespace switchstab
