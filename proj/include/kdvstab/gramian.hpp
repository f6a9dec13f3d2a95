#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "kdvstab/propagator.hpp"

namespace kdvstab {

enum class GramianMethod { Quadrature, Sylvester };

struct GramianMeta {
    double L = 0.0;
    int N = 0;
    double lambda = 0.0;
    std::string method;
    double horizon = 0.0;   // quadrature truncation S (0 for sylvester)
    double dt = 0.0;        // substep used by the quadrature (0 for sylvester)
    double solver_tol = 0.0;
    std::string build_hash;
};

/// Exponentially weighted boundary-trace Gramian of the free flow.
struct Gramian {
    Eigen::MatrixXd Q;
    double lambda = 0.0;
    GramianMethod method = GramianMethod::Sylvester;
    double horizon = 0.0;
    GramianMeta meta;
};

/// Q = int_0^S e^{-2 lambda s} g(s)^T g(s) ds with g(s) = b^T e^{sA},
/// accumulated window by window: fine Crank-Nicolson substeps resolve the
/// dispersive phase rotation inside one window (midpoint trace averages,
/// Richardson-extrapolated across substep halving), and the window
/// correlation is conjugated through the propagated basis. Truncation
/// S = ln(C_adm / tol) / (2 lambda) with the measured admissibility constant.
Gramian assemble_quadrature(const Generator& gen, double lambda, double tol,
                            const PropagatorConfig& cfg);

/// Dense solve of (A + lambda I) Q + Q (lambda I - A) = b b^T in the
/// eigenbasis of the Hermitian matrix iA; denominators are
/// 2 lambda + i(theta_j - theta_k), bounded below by 2 lambda.
Gramian assemble_sylvester(const Generator& gen, double lambda);

/// Relative Frobenius residual of the defining identity.
double lyapunov_residual(const Generator& gen, const Gramian& G);

struct GramianInverse {
    Eigen::MatrixXd Qinv;
    double cond = 0.0;        // lambda_max / lambda_min
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return llt.solve(v); }
};

/// Cholesky inversion with a spectral condition estimate; refuses when
/// cond > cond_limit (near-critical length or under-resolution).
GramianInverse invert(const Gramian& G, double cond_limit = 1e12);

struct NormBoundRow {
    double lambda;
    double lambda_min;
    double lambda_max;
};

struct NormBoundProbe {
    std::vector<NormBoundRow> rows;
    double fit_slope = 0.0;      // log(1/lambda_min) ~ slope * lambda^(1/3) + c
    double fit_residual = 0.0;   // RMS residual of that fit
};

/// Extreme eigenvalues of Q(lambda) per lambda; exploratory fit of
/// log(1/lambda_min) against lambda^(1/3) (reported, never asserted).
NormBoundProbe norm_bound_probe(const Generator& gen, const std::vector<double>& lambdas);

/// Cache round-trip: <hash>.meta.json + <hash>.q.bin (row-major little-endian
/// IEEE-754 doubles). The loader verifies the metadata against the request
/// before accepting the payload.
std::string gramian_cache_hash(const GramianMeta& meta);
void save_gramian(const Gramian& G, const std::filesystem::path& cache_dir);
std::optional<Gramian> load_gramian(const GramianMeta& want, const std::filesystem::path& cache_dir);

/// Assemble-or-load convenience used by the CLI and the staged simulator.
Gramian cached_sylvester(const Generator& gen, double lambda,
                         const std::optional<std::filesystem::path>& cache_dir);

}  // namespace kdvstab
