#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "switchstab/matrix.hpp"
#include "switchstab/model.hpp"

namespace switchstab {

/// Vectorized form of the coupled Lyapunov map underlying the stability test.
/// Block row i applied to the stack (vec P_1, ..., vec P_m) produces
/// vec(A_i^T P_i + P_i A_i + pi_ii P_i + sum_{j != i} pi_ij E_j^T P_j E_j).
struct CoupledOperator {
    int n = 0;
    int m = 0;
    Matrix L;
};

class SingularOperatorError : public std::runtime_error {
public:
    SingularOperatorError(const std::string& msg, double condition_estimate)
        : std::runtime_error(msg), condition_estimate_(condition_estimate) {}

    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

inline CoupledOperator assemble_coupled_operator(const ValidatedSystem& v) {
    const int n = v.dimension();
    const int m = v.mode_count();
    const int nn = n * n;
    CoupledOperator op{n, m, Matrix(m * nn, m * nn)};
    const Matrix ident = Matrix::identity(n);
    for (int i = 0; i < m; ++i) {
        Matrix diag = kron(ident, v.mode(i).transpose()) + kron(v.mode(i).transpose(), ident);
        for (int k = 0; k < nn; ++k) diag(k, k) += v.system().Pi(i, i);
        op.L.set_block(i * nn, i * nn, diag);
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const Matrix ejt = v.jump_map(j).transpose();
            op.L.set_block(i * nn, j * nn, v.system().Pi(i, j) * kron(ejt, ejt));
        }
    }
    return op;
}

/// Tolerances and flags for the stability decision. The positive-definiteness
/// tolerance is relative to each Lyapunov matrix with an absolute floor;
/// results within marginal_factor of a tolerance are flagged marginal.
struct CheckOptions {
    double pd_tol_rel = 1e-9;
    double pd_tol_floor = 1e-12;
    double marginal_factor = 10.0;
    double residual_rel_tol = 1e-9;
    double asymmetry_rel_tol = 1e-8;
};

struct StabilityCertificate {
    std::vector<SymmetricMatrix> P;
    std::vector<SymmetricMatrix> Q;
    double margin = 0.0;  // max_i of the largest eigenvalue of the residual map R_i
    bool marginal = false;
};

enum class UnstableReason { NonPositiveDefinite, SingularOperator };

struct UnstableWitness {
    UnstableReason reason;
    int mode = -1;                 // first mode failing positive definiteness, if any
    Vector min_eigenvalues;        // per-mode minimum eigenvalue of the solved P_i
    double condition_estimate = 0.0;
    bool marginal = false;
};

struct StabilityVerdict {
    std::optional<StabilityCertificate> certificate;
    std::optional<UnstableWitness> witness;

    bool stable() const { return certificate.has_value(); }
    bool marginal() const { return stable() ? certificate->marginal : witness->marginal; }
};

/// Solve the coupled equations R_i = -Q_i for {P_i} by one dense solve on the
/// assembled operator. The solution is checked (residual, asymmetry) before
/// the symmetrized matrices are returned; quality failures are reported the
/// same way as exact singularity since neither yields a usable solution.
inline std::vector<SymmetricMatrix> solve_coupled_lyapunov(const ValidatedSystem& v,
                                                           const std::vector<SymmetricMatrix>& q,
                                                           const CheckOptions& opts = {}) {
    const int n = v.dimension();
    const int m = v.mode_count();
    if (static_cast<int>(q.size()) != m) {
        throw std::invalid_argument("solve_coupled_lyapunov: expected one Q per mode");
    }
    for (const auto& qi : q) {
        if (qi.order() != n) throw std::invalid_argument("solve_coupled_lyapunov: Q order mismatch");
    }

    const CoupledOperator op = assemble_coupled_operator(v);
    const int nn = n * n;
    Vector rhs(static_cast<std::size_t>(m) * nn);
    for (int i = 0; i < m; ++i) {
        const Vector qi = vec(q[i].mat());
        for (int k = 0; k < nn; ++k) rhs[static_cast<std::size_t>(i) * nn + k] = -qi[k];
    }

    const LuFactorization lu(op.L);
    if (lu.singular()) {
        throw SingularOperatorError("coupled operator singular to working precision",
                                    lu.condition_estimate());
    }
    const Vector p = lu.solve(rhs);

    Vector residual = mat_vec(op.L, p);
    for (std::size_t k = 0; k < residual.size(); ++k) residual[k] -= rhs[k];
    if (norm2(residual) > scaled_tol(opts.residual_rel_tol, norm2(rhs))) {
        throw SingularOperatorError("coupled solve residual exceeds tolerance",
                                    lu.condition_estimate());
    }

    std::vector<SymmetricMatrix> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) {
        Vector pi(p.begin() + static_cast<std::ptrdiff_t>(i) * nn,
                  p.begin() + static_cast<std::ptrdiff_t>(i + 1) * nn);
        try {
            out.emplace_back(unvec(pi, n, n), opts.asymmetry_rel_tol);
        } catch (const std::invalid_argument&) {
            throw SingularOperatorError("coupled solve produced an asymmetric Lyapunov matrix",
                                        lu.condition_estimate());
        }
    }
    return out;
}

/// Evaluate the stability map directly on a candidate certificate and return
/// margin = max_i (largest eigenvalue of R_i). Negative means every R_i is
/// negative definite, i.e. the certificate witnesses stability. This path
/// never touches the assembled operator, so it independently cross-checks
/// solutions produced by solve_coupled_lyapunov.
inline double verify_certificate(const ValidatedSystem& v,
                                 const std::vector<SymmetricMatrix>& p) {
    const int n = v.dimension();
    const int m = v.mode_count();
    if (static_cast<int>(p.size()) != m) {
        throw std::invalid_argument("verify_certificate: expected one P per mode");
    }
    for (const auto& pi : p) {
        if (pi.order() != n) throw std::invalid_argument("verify_certificate: P order mismatch");
    }
    double margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        Matrix r = v.mode(i).transpose() * p[i].mat() + p[i].mat() * v.mode(i) +
                   v.system().Pi(i, i) * p[i].mat();
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            r += v.system().Pi(i, j) *
                 (v.jump_map(j).transpose() * p[j].mat() * v.jump_map(j));
        }
        margin = std::max(margin, max_eig_sym(r));
    }
    return margin;
}

inline double verify_certificate(const ValidatedSystem& v, const StabilityCertificate& cert) {
    return verify_certificate(v, cert.P);
}

/// Decide stochastic stability by solving with Q_i = I and testing every P_i
/// for positive definiteness. The test is exact in principle (existence of a
/// positive definite solution is equivalent to stability), so a failed solve
/// or an indefinite solution is returned as an Unstable verdict rather than
/// an error.
inline StabilityVerdict check_stochastic_stability(const ValidatedSystem& v,
                                                   const CheckOptions& opts = {}) {
    const int n = v.dimension();
    const int m = v.mode_count();
    std::vector<SymmetricMatrix> q(static_cast<std::size_t>(m), SymmetricMatrix::identity(n));

    std::vector<SymmetricMatrix> p;
    try {
        p = solve_coupled_lyapunov(v, q, opts);
    } catch (const SingularOperatorError& e) {
        StabilityVerdict verdict;
        // A singular operator sits exactly on the existence boundary; flag it
        // marginal so downstream consumers treat the cell as borderline.
        verdict.witness = UnstableWitness{UnstableReason::SingularOperator, -1, {},
                                          e.condition_estimate(), true};
        return verdict;
    }

    Vector min_eigs(static_cast<std::size_t>(m));
    bool marginal = false;
    int failing = -1;
    for (int i = 0; i < m; ++i) {
        min_eigs[i] = min_eig_sym(p[i]);
        const double pd_tol =
            std::max(opts.pd_tol_rel * p[i].mat().frobenius_norm(), opts.pd_tol_floor);
        if (min_eigs[i] <= pd_tol && failing < 0) failing = i;
        if (std::abs(min_eigs[i]) <= opts.marginal_factor * pd_tol) marginal = true;
    }

    StabilityVerdict verdict;
    if (failing >= 0) {
        verdict.witness = UnstableWitness{UnstableReason::NonPositiveDefinite, failing,
                                          std::move(min_eigs), 0.0, marginal};
        return verdict;
    }

    StabilityCertificate cert{std::move(p), std::move(q), 0.0, false};
    cert.margin = verify_certificate(v, cert.P);
    const double margin_tol = scaled_tol(opts.residual_rel_tol,
                                         std::sqrt(static_cast<double>(n) * m), opts.pd_tol_floor);
    cert.marginal = marginal || std::abs(cert.margin) <= opts.marginal_factor * margin_tol;
    verdict.certificate = std::move(cert);
    return verdict;
}

inline nlohmann::json certificate_to_json(const StabilityCertificate& cert) {
    nlohmann::json j;
    nlohmann::json p = nlohmann::json::array();
    for (const auto& pi : cert.P) p.push_back(detail::matrix_to_json(pi.mat()));
    nlohmann::json q = nlohmann::json::array();
    for (const auto& qi : cert.Q) q.push_back(detail::matrix_to_json(qi.mat()));
    j["P"] = std::move(p);
    j["Q"] = std::move(q);
    j["margin"] = cert.margin;
    j["marginal"] = cert.marginal;
    return j;
}

inline StabilityCertificate certificate_from_json(const nlohmann::json& j) {
    StabilityCertificate cert;
    if (!j.is_object() || !j.contains("P") || !j.contains("Q")) {
        throw std::runtime_error("certificate: expected object with \"P\" and \"Q\"");
    }
    for (std::size_t i = 0; i < j.at("P").size(); ++i) {
        cert.P.emplace_back(detail::matrix_from_json(j.at("P")[i], "P[" + std::to_string(i) + "]"));
    }
    for (std::size_t i = 0; i < j.at("Q").size(); ++i) {
        cert.Q.emplace_back(detail::matrix_from_json(j.at("Q")[i], "Q[" + std::to_string(i) + "]"));
    }
    cert.margin = j.value("margin", 0.0);
    cert.marginal = j.value("marginal", false);
    return cert;
}

inline void save_certificate(const StabilityCertificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write certificate file: " + path);
    out << certificate_to_json(cert).dump(2) << "\n";
}

inline StabilityCertificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open certificate file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        return certificate_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace switchstab
