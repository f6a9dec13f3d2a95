#include "kdvstab/gramian.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kdvstab {

namespace {

// spectral norm of A via power iteration on -A^2 (A is skew, so -A^2 is PSD
// with top eigenvalue ||A||^2); deterministic start vector
double spectral_norm_estimate(const Eigen::MatrixXd& A) {
    Rng rng(0x5D1F00D5u);
    Eigen::VectorXd v = rng.normal_vector(A.rows());
    v.normalize();
    double mu = 0.0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd w = -(A * (A * v));
        double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        mu = nw;
    }
    return std::sqrt(mu);
}

// G = int_0^Delta e^{-2 lambda s} c(s) c(s)^T ds with c = e^{sA^T} b, CN
// substeps and midpoint (endpoint-average) trace sampling; also returns the
// one-substep forward map for the window propagation.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> window_correlation(const Generator& gen, double lambda,
                                                               double Delta, int M) {
    const Eigen::Index n = gen.size();
    const double delta = Delta / M;
    Eigen::MatrixXd Mm = Eigen::MatrixXd::Identity(n, n) - 0.5 * delta * gen.A;
    Eigen::MatrixXd Pm = Eigen::MatrixXd::Identity(n, n) + 0.5 * delta * gen.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Mm);
    Eigen::MatrixXd Cstep = lu.solve(Pm);
    Eigen::MatrixXd CstepT = Cstep.transpose();

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    const int chunk = 2048;
    Eigen::MatrixXd W(chunk, n);
    int fill = 0;
    Eigen::VectorXd c = gen.b;
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd c_next = CstepT * c;
        double w = delta * std::exp(-2.0 * lambda * (m + 0.5) * delta);
        W.row(fill++) = (0.5 * std::sqrt(w)) * (c + c_next);
        c = std::move(c_next);
        if (fill == chunk || m == M - 1) {
            G.noalias() += W.topRows(fill).transpose() * W.topRows(fill);
            fill = 0;
        }
    }
    return {std::move(G), std::move(Cstep)};
}

GramianMeta make_meta(const Generator& gen, double lambda, GramianMethod method, double horizon,
                      double dt, double solver_tol) {
    GramianMeta m;
    m.L = gen.grid.L;
    m.N = gen.grid.N;
    m.lambda = lambda;
    m.method = method == GramianMethod::Quadrature ? "quadrature" : "sylvester";
    m.horizon = horizon;
    m.dt = dt;
    m.solver_tol = solver_tol;
    m.build_hash = gramian_cache_hash(m);
    return m;
}

}  // namespace

Gramian assemble_quadrature(const Generator& gen, double lambda, double tol,
                            const PropagatorConfig& cfg) {
    if (!(lambda > 0.0)) throw ConfigError("gramian", "lambda must be positive");
    if (!(tol > 0.0)) throw ConfigError("gramian", "truncation tolerance must be positive");
    cfg.validate();
    const Eigen::Index n = gen.size();

    PropagatorConfig adm_cfg = cfg;
    adm_cfg.dt = std::min(cfg.dt, 1e-3);
    const double C_adm = std::max(admissibility_constant(gen, 1.0, 16, adm_cfg), 1e-12);
    const double S = std::log(std::max(C_adm / tol, M_E)) / (2.0 * lambda);
    const double Delta = std::min(0.25, S);
    const int K = std::max(1, static_cast<int>(std::ceil(S / Delta)));

    // substeps resolve the fastest phase rotation; Richardson across a
    // halving removes the remaining even-order quadrature/phase bias
    const double theta_max = spectral_norm_estimate(gen.A);
    int M = std::max(8, static_cast<int>(std::ceil(Delta * theta_max / 0.3)));
    int pow2 = 1;
    while (pow2 < M) pow2 <<= 1;
    M = pow2;

    auto [G1, C1] = window_correlation(gen, lambda, Delta, M);
    auto [G2, C2] = window_correlation(gen, lambda, Delta, 2 * M);
    Eigen::MatrixXd G = (4.0 * G2 - G1) / 3.0;

    // window map from the fine substep by squaring
    Eigen::MatrixXd Phi = C2;
    int doublings = 0;
    for (int m = 2 * M; m > 1; m >>= 1) ++doublings;
    for (int d = 0; d < doublings; ++d) Phi = Phi * Phi;

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Identity(n, n);
    const double rho = std::exp(-2.0 * lambda * Delta);
    double w = 1.0;
    for (int k = 0; k < K; ++k) {
        Q.noalias() += w * (Y.transpose() * G * Y);
        if (k + 1 < K) {
            Y = Phi * Y;
            w *= rho;
        }
    }
    Q = 0.5 * (Q + Q.transpose()).eval();

    Gramian out;
    out.Q = std::move(Q);
    out.lambda = lambda;
    out.method = GramianMethod::Quadrature;
    out.horizon = S;
    out.meta = make_meta(gen, lambda, out.method, S, Delta / (2 * M), cfg.solver_tol);
    return out;
}

Gramian assemble_sylvester(const Generator& gen, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("gramian", "lambda must be positive");
    const Eigen::Index n = gen.size();
    using Cplx = std::complex<double>;

    Eigen::MatrixXcd H = Cplx(0.0, 1.0) * gen.A.cast<Cplx>();  // Hermitian
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver", "Hermitian eigendecomposition of iA failed");
    Eigen::VectorXd theta = -es.eigenvalues();  // A = V diag(i theta) V^H
    const Eigen::MatrixXcd& V = es.eigenvectors();

    Eigen::MatrixXcd C = (gen.b * gen.b.transpose()).cast<Cplx>();
    Eigen::MatrixXcd Ct = V.adjoint() * C * V;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            Ct(j, k) /= Cplx(2.0 * lambda, theta[j] - theta[k]);
    Eigen::MatrixXd Q = (V * Ct * V.adjoint()).real();
    Q = 0.5 * (Q + Q.transpose()).eval();

    Gramian out;
    out.Q = std::move(Q);
    out.lambda = lambda;
    out.method = GramianMethod::Sylvester;
    out.horizon = 0.0;
    out.meta = make_meta(gen, lambda, out.method, 0.0, 0.0, 0.0);
    return out;
}

double lyapunov_residual(const Generator& gen, const Gramian& G) {
    const Eigen::Index n = gen.size();
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd rhs = gen.b * gen.b.transpose();
    Eigen::MatrixXd res =
        (gen.A + G.lambda * I) * G.Q + G.Q * (G.lambda * I - gen.A) - rhs;
    return res.norm() / rhs.norm();
}

GramianInverse invert(const Gramian& G, double cond_limit) {
    if (!(cond_limit > 0.0)) throw ConfigError("gramian", "cond_limit must be positive");
    const Eigen::Index n = G.Q.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.Q, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver", "eigenvalue computation for Q failed");
    double lmin = es.eigenvalues()[0];
    double lmax = es.eigenvalues()[n - 1];
    if (!(lmin > 0.0))
        throw NumericalError("near-critical-length",
                             "Q is not positive definite (L near the critical set or under-resolved)");
    double cond = lmax / lmin;
    if (cond > cond_limit)
        throw NumericalError("near-critical-length",
                             "cond(Q) = " + format_g17(cond) + " exceeds limit " +
                                 format_g17(cond_limit) +
                                 " (L near the critical set or under-resolved)");
    GramianInverse inv;
    inv.llt.compute(G.Q);
    if (inv.llt.info() != Eigen::Success)
        throw NumericalError("cholesky", "Cholesky factorization of Q failed");
    inv.Qinv = inv.llt.solve(Eigen::MatrixXd::Identity(n, n));
    inv.cond = cond;
    inv.lambda_min = lmin;
    inv.lambda_max = lmax;
    return inv;
}

NormBoundProbe norm_bound_probe(const Generator& gen, const std::vector<double>& lambdas) {
    NormBoundProbe probe;
    for (double lam : lambdas) {
        if (!(lam > 0.0)) throw ConfigError("gramian", "probe lambdas must be positive");
        Gramian G = assemble_sylvester(gen, lam);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.Q, Eigen::EigenvaluesOnly);
        probe.rows.push_back({lam, es.eigenvalues()[0], es.eigenvalues()[G.Q.rows() - 1]});
    }
    // exploratory: log(1/lambda_min) ~ slope * lambda^(1/3) + c
    const std::size_t m = probe.rows.size();
    if (m >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : probe.rows) {
            double x = std::cbrt(r.lambda), y = std::log(1.0 / std::max(r.lambda_min, 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double denom = m * sxx - sx * sx;
        if (denom > 0) {
            probe.fit_slope = (m * sxy - sx * sy) / denom;
            double c = (sy - probe.fit_slope * sx) / m;
            double rss = 0;
            for (const auto& r : probe.rows) {
                double x = std::cbrt(r.lambda), y = std::log(1.0 / std::max(r.lambda_min, 1e-300));
                double e = y - (probe.fit_slope * x + c);
                rss += e * e;
            }
            probe.fit_residual = std::sqrt(rss / m);
        }
    }
    return probe;
}

std::string gramian_cache_hash(const GramianMeta& meta) {
    std::ostringstream os;
    os << "L=" << format_g17(meta.L) << "|N=" << meta.N << "|lambda=" << format_g17(meta.lambda)
       << "|method=" << meta.method << "|horizon=" << format_g17(meta.horizon)
       << "|dt=" << format_g17(meta.dt) << "|solver_tol=" << format_g17(meta.solver_tol);
    return hex64(fnv1a64(os.str()));
}

namespace {

nlohmann::json meta_to_json(const GramianMeta& m) {
    return {{"L", m.L},           {"N", m.N},
            {"lambda", m.lambda}, {"method", m.method},
            {"horizon", m.horizon}, {"dt", m.dt},
            {"solver_tol", m.solver_tol}, {"build_hash", m.build_hash}};
}

}  // namespace

void save_gramian(const Gramian& G, const std::filesystem::path& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    const std::string hash = G.meta.build_hash;
    atomic_write(cache_dir / (hash + ".meta.json"), meta_to_json(G.meta).dump(2) + "\n");
    // row-major little-endian doubles
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = G.Q;
    atomic_write_binary(cache_dir / (hash + ".q.bin"), reinterpret_cast<const char*>(rm.data()),
                        sizeof(double) * static_cast<std::size_t>(rm.size()));
}

std::optional<Gramian> load_gramian(const GramianMeta& want,
                                    const std::filesystem::path& cache_dir) {
    const std::string hash = want.build_hash.empty() ? gramian_cache_hash(want) : want.build_hash;
    auto meta_path = cache_dir / (hash + ".meta.json");
    auto bin_path = cache_dir / (hash + ".q.bin");
    if (!std::filesystem::exists(meta_path) || !std::filesystem::exists(bin_path)) return {};

    std::ifstream in(meta_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (...) {
        return {};
    }
    auto close = [](double a, double b) { return a == b; };
    if (!(j.value("N", -1) == want.N && close(j.value("L", 0.0), want.L) &&
          close(j.value("lambda", 0.0), want.lambda) && j.value("method", "") == want.method))
        return {};

    const Eigen::Index n = want.N - 1;
    const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(n) * n;
    if (std::filesystem::file_size(bin_path) != bytes) return {};
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
    std::ifstream bin(bin_path, std::ios::binary);
    bin.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(bytes));
    if (!bin) return {};

    Gramian G;
    G.Q = rm;
    G.lambda = want.lambda;
    G.method = want.method == "quadrature" ? GramianMethod::Quadrature : GramianMethod::Sylvester;
    G.horizon = j.value("horizon", 0.0);
    G.meta = want;
    G.meta.horizon = G.horizon;
    G.meta.dt = j.value("dt", 0.0);
    G.meta.solver_tol = j.value("solver_tol", 0.0);
    G.meta.build_hash = hash;
    return G;
}

Gramian cached_sylvester(const Generator& gen, double lambda,
                         const std::optional<std::filesystem::path>& cache_dir) {
    GramianMeta want;
    want.L = gen.grid.L;
    want.N = gen.grid.N;
    want.lambda = lambda;
    want.method = "sylvester";
    want.build_hash = gramian_cache_hash(want);
    if (cache_dir) {
        if (auto G = load_gramian(want, *cache_dir)) return std::move(*G);
    }
    Gramian G = assemble_sylvester(gen, lambda);
    if (cache_dir) save_gramian(G, *cache_dir);
    return G;
}

}  // namespace kdvstab
