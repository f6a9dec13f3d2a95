#include "kdvstab/critical.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace kdvstab {

CriticalSet enumerate_critical_lengths(int k_max) {
    if (k_max < 1) throw ConfigError("critical", "k_max must be >= 1");
    CriticalSet set;
    set.k_max = k_max;
    for (int k = 1; k <= k_max; ++k)
        for (int l = k; l <= k_max; ++l) {
            double L = 2.0 * M_PI * std::sqrt((double(k) * k + double(k) * l + double(l) * l) / 3.0);
            set.entries.push_back({k, l, L});
        }
    std::sort(set.entries.begin(), set.entries.end(),
              [](const CriticalEntry& a, const CriticalEntry& b) { return a.L < b.L; });
    std::vector<CriticalEntry> dedup;
    for (const auto& e : set.entries)
        if (dedup.empty() || std::abs(e.L - dedup.back().L) > 1e-12) dedup.push_back(e);
    set.entries = std::move(dedup);
    return set;
}

CriticalQuery is_critical(double L, int k_max, double tol) {
    if (!(L > 0.0)) throw ConfigError("critical", "L must be positive");
    CriticalSet set = enumerate_critical_lengths(k_max);
    CriticalQuery q{};
    q.distance = std::numeric_limits<double>::infinity();
    for (const auto& e : set.entries) {
        double d = std::abs(e.L - L);
        if (d < q.distance) {
            q.distance = d;
            q.nearest = e;
        }
    }
    q.is_critical = q.distance <= tol;
    return q;
}

std::vector<ScanRow> conditioning_scan(double L_lo, double L_hi, int points, double lambda, int N,
                                       double near_tol, int k_max) {
    if (!(L_lo > 0.0) || !(L_hi > L_lo)) throw ConfigError("critical", "scan range must be positive");
    if (points < 1) throw ConfigError("critical", "scan needs at least one point");
    std::vector<ScanRow> rows;
    for (int i = 0; i < points; ++i) {
        double L = points == 1 ? L_lo : L_lo + (L_hi - L_lo) * i / (points - 1.0);
        ScanRow row{};
        row.L = L;
        auto q = is_critical(L, k_max, near_tol);
        row.is_near_critical = q.is_critical;
        row.nearest_critical_L = q.nearest.L;
        try {
            Grid grid = build_grid(L, N);
            Generator gen = build_generator(grid);
            Gramian G = assemble_sylvester(gen, lambda);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.Q, Eigen::EigenvaluesOnly);
            row.lambda_min = es.eigenvalues()[0];
            row.lambda_max = es.eigenvalues()[G.Q.rows() - 1];
            row.cond = row.lambda_min > 0.0 ? row.lambda_max / row.lambda_min
                                            : std::numeric_limits<double>::infinity();
            row.assembly_failed = false;
        } catch (const std::exception&) {
            row.assembly_failed = true;
            row.lambda_min = row.lambda_max = row.cond = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
    }
    return rows;
}

CsvTable scan_to_csv(const std::vector<ScanRow>& rows) {
    CsvTable t;
    t.header = {"L", "lambda_min", "lambda_max", "cond", "is_near_critical", "nearest_critical_L"};
    for (const auto& r : rows)
        t.rows.push_back({r.L, r.lambda_min, r.lambda_max, r.cond, r.is_near_critical ? 1.0 : 0.0,
                          r.nearest_critical_L});
    return t;
}

ModeProbe uncontrollable_mode_probe(double L, int N) {
    Grid grid = build_grid(L, N);
    Generator gen = build_generator(grid);
    using Cplx = std::complex<double>;
    Eigen::MatrixXcd H = Cplx(0.0, 1.0) * gen.A.cast<Cplx>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver", "eigendecomposition of the generator failed");
    const Eigen::Index n = gen.size();
    ModeProbe probe;
    probe.eigenvalues_imag = -es.eigenvalues();
    probe.max_real_part.resize(n);
    probe.couplings.resize(n);
    Eigen::MatrixXcd Ac = gen.A.cast<Cplx>();
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXcd v = es.eigenvectors().col(j);
        probe.max_real_part[j] = std::abs((v.adjoint() * (Ac * v))(0).real());
        probe.couplings[j] = std::abs(gen.b.cast<Cplx>().dot(v));
    }
    Eigen::VectorXd sorted = probe.couplings;
    std::sort(sorted.data(), sorted.data() + n);
    probe.min_coupling = sorted[0];
    probe.median_coupling = sorted[n / 2];
    return probe;
}

}  // namespace kdvstab
