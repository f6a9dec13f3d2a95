#pragma once

#include <optional>
#include <vector>

#include "kdvstab/closedloop.hpp"

namespace kdvstab {

/// Staged time-varying schedule: t_n increasing to the blow-up horizon T,
/// lambda_n increasing, partial sums s_n = sum_{k<n} lambda_k (t_{k+1}-t_k).
struct Schedule {
    double T = 0.0;
    std::vector<double> t;        // t_0 = 0 .. t_{n_max}, all < T
    std::vector<double> lambda;   // lambda_0 .. lambda_{n_max-1} (one per stage)
    std::vector<double> lambda1;  // dynamic variant, lambda1_n >= (2+c) lambda_n
    std::vector<double> s;        // s_0 = 0 .. s_{n_max}
    double gamma = 1.0;
    double c = 1.0;
    int n_max = 0;

    void recompute_partial_sums();
    void validate() const;
};

struct ScheduleFamily {
    double lambda_base = 0.5;
    double c = 1.0;
    double margin = 0.1;  // lambda1_n = (2+c) lambda_n (1+margin)
    std::optional<std::vector<double>> custom_t;       // overrides the default family
    std::optional<std::vector<double>> custom_lambda;
};

/// Default family: t_0 = 0, t_n = T (1 - 1/(n+1)^2), lambda_n =
/// lambda_base (n+1)^8.
Schedule build_schedule(double T, int n_max, const ScheduleFamily& family = {});

struct ScheduleCheckRow {
    int n;
    double gap_lambda;       // (t_{n+1} - t_n) lambda_n
    double gap_bound;        // gamma lambda_n^(1/3)
    bool gap_ok;             // gap_lambda >= gap_bound
    double growth_ratio;     // lambda_{n+1}(t_{n+2}-t_{n+1}) / (lambda_n (t_{n+1}-t_n))
    bool growth_ok;          // growth_ratio <= 1 + 1/gamma
    double divergence_ratio; // s_n / (n + lambda_{n+1}^(1/3))
};

struct ScheduleValidation {
    std::vector<ScheduleCheckRow> rows;
    bool divergence_flag = false;  // ratio sequence eventually increasing
};

/// Evaluates both staging inequalities for n <= horizon_n and the growth of
/// s_n / (n + lambda_{n+1}^(1/3)) as a finite-horizon proxy for its limit.
/// Reports failures, never throws.
ScheduleValidation validate_schedule(const Schedule& sched, double gamma, int horizon_n);

struct StageDiagnostics {
    int stage;
    double lambda_n;
    double cond_Qn;
    double norm_start;
    double norm_end;
    double contraction;         // norm_end / norm_start
    double dt;
    bool guard_passed;
};

enum class StagedStop { Completed, Floor, Guard, Conditioning };

struct StagedReport {
    std::vector<StageDiagnostics> stages;
    std::vector<std::size_t> stage_bounds;  // cumulative row count per stage
    RunReport combined;          // concatenated time series across stages
    StagedStop stop = StagedStop::Completed;
    std::string stop_detail;

    CsvTable to_csv() const;     // adds stage, lambda_n, cond_Qn columns
};

struct FiniteTimeOptions {
    LoopOptions loop;
    double floor = 1e-12;        // early-success threshold on ||y||; <= 0 disables
    std::optional<std::filesystem::path> cache_dir;
};

enum class FeedbackMode { Static, Dynamic };

/// Per stage n: assemble (or load) Q_n = Q(lambda_n), re-initialize the
/// companion state (static: ytilde(t_n) = Q_n^{-1} y(t_n)), and run the
/// closed loop on [t_n, t_{n+1}] with dt_n = min(cfg.dt, 1/(2 lambda_n))/2.
/// The plant state is continuous across stages. Stops early on the floor,
/// on a stage guard violation, or on Q_n conditioning past cond_limit,
/// returning the partial report.
StagedReport simulate_finite_time(const Generator& gen, const Eigen::VectorXd& y0,
                                  const Schedule& sched, FeedbackMode mode,
                                  const PropagatorConfig& cfg, const FiniteTimeOptions& opts = {});

}  // namespace kdvstab
