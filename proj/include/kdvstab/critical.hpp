#pragma once

#include <vector>

#include "kdvstab/gramian.hpp"

namespace kdvstab {

struct CriticalEntry {
    int k;
    int l;
    double L;  // 2 pi sqrt((k^2 + k l + l^2) / 3)
};

/// The discrete set of lengths at which the linearized system loses exact
/// controllability; sorted by L, deduplicated.
struct CriticalSet {
    std::vector<CriticalEntry> entries;
    int k_max = 0;
};

CriticalSet enumerate_critical_lengths(int k_max);

struct CriticalQuery {
    bool is_critical;
    CriticalEntry nearest;
    double distance;
};

CriticalQuery is_critical(double L, int k_max, double tol);

struct ScanRow {
    double L;
    double lambda_min;
    double lambda_max;
    double cond;
    bool assembly_failed;
    bool is_near_critical;
    double nearest_critical_L;
};

/// Assembles Q(lambda) on the Sylvester path for each L in the range and
/// tabulates extreme eigenvalues; per-L failures are recorded and the scan
/// continues. Output ordered by L.
std::vector<ScanRow> conditioning_scan(double L_lo, double L_hi, int points, double lambda,
                                       int N, double near_tol = 1e-2, int k_max = 12);

CsvTable scan_to_csv(const std::vector<ScanRow>& rows);

struct ModeProbe {
    Eigen::VectorXd eigenvalues_imag;   // theta_j, A v_j = i theta_j v_j
    Eigen::VectorXd max_real_part;      // |Re| of each eigenvalue (round-off)
    Eigen::VectorXd couplings;          // |b^T v_j| per unit eigenvector
    double min_coupling = 0.0;
    double median_coupling = 0.0;
};

/// Full eigendecomposition of A (through the Hermitian matrix iA) with the
/// control coupling |b^T v| per mode; the minimum coupling is the discrete
/// uncontrollability indicator.
ModeProbe uncontrollable_mode_probe(double L, int N);

}  // namespace kdvstab
