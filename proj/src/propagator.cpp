#include "kdvstab/propagator.hpp"

#include <cmath>

namespace kdvstab {

void PropagatorConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("propagator", "dt must be positive");
    if (!(solver_tol >= std::numeric_limits<double>::epsilon()))
        throw ConfigError("propagator", "solver_tol must be at least machine epsilon");
}

double default_dt(double h, double lambda) {
    double dt = std::min(h, 1e-2);
    if (lambda > 0.0) dt = std::min(dt, 1.0 / (2.0 * lambda));
    return dt;
}

double TraceSeries::squared_integral() const {
    if (values.size() < 2) return 0.0;
    double s = 0.0;
    for (Eigen::Index k = 0; k + 1 < values.size(); ++k)
        s += 0.5 * (values[k] * values[k] + values[k + 1] * values[k + 1]);
    return s * dt;
}

StepOperator::StepOperator(const Generator& gen, double dt, double lambda) : dt_(dt) {
    const Eigen::Index n = gen.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - 0.5 * dt * gen.A;
    P_ = Eigen::MatrixXd::Identity(n, n) + 0.5 * dt * gen.A;
    lu_.compute(M);
    bvec_ = gen.b;
    d_ = (1.0 - lambda * dt) / (1.0 + lambda * dt);
    fscale_ = dt / (1.0 + lambda * dt);
}

Eigen::VectorXd StepOperator::step(const Eigen::VectorXd& y, double u,
                                   const Eigen::VectorXd* source) const {
    Eigen::VectorXd out = d_ * lu_.solve(P_ * y);
    if (u != 0.0 || source) {
        Eigen::VectorXd g = u * bvec_;
        if (source) g += *source;
        out += fscale_ * lu_.solve(g);
    }
    return out;
}

Eigen::VectorXd step_linear(const Generator& gen, const Eigen::VectorXd& state, double dt,
                            double lambda, double u, const Eigen::VectorXd& source) {
    if (state.size() != gen.size())
        throw ConfigError("propagator", "state dimension does not match generator");
    StepOperator op(gen, dt, lambda);
    return op.step(state, u, source.size() ? &source : nullptr);
}

std::pair<Trajectory, TraceSeries> propagate(const Generator& gen, const Eigen::VectorXd& z0,
                                             double T, const PropagatorConfig& cfg) {
    cfg.validate();
    if (!(T > 0.0)) throw ConfigError("propagator", "horizon T must be positive");
    const int nsteps = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
    const double dt = T / nsteps;
    StepOperator op(gen, dt, 0.0);

    Trajectory traj;
    traj.times.resize(nsteps + 1);
    traj.states.resize(nsteps + 1, gen.size());
    TraceSeries tr;
    tr.times.resize(nsteps + 1);
    tr.values.resize(nsteps + 1);
    tr.midpoint_values.resize(nsteps);
    tr.dt = dt;

    Eigen::VectorXd y = z0;
    traj.times[0] = 0.0;
    traj.states.row(0) = y;
    tr.times[0] = 0.0;
    tr.values[0] = gen.b.dot(y);
    for (int k = 0; k < nsteps; ++k) {
        y = op.rotate(y);
        double t = (k + 1) * dt;
        traj.times[k + 1] = t;
        traj.states.row(k + 1) = y;
        tr.times[k + 1] = t;
        tr.values[k + 1] = gen.b.dot(y);
        tr.midpoint_values[k] = 0.5 * (tr.values[k] + tr.values[k + 1]);
    }
    return {std::move(traj), std::move(tr)};
}

double admissibility_constant(const Generator& gen, double T, int samples,
                              const PropagatorConfig& cfg, std::uint64_t seed) {
    if (!(T > 0.0)) throw ConfigError("propagator", "horizon T must be positive");
    Rng rng(seed);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd z = rng.normal_vector(gen.size());
        double nz = gen.grid.norm(z);
        if (nz == 0.0) continue;
        z /= nz;
        auto [traj, tr] = propagate(gen, z, T, cfg);
        best = std::max(best, tr.squared_integral());
    }
    return best;
}

TestFunction canonical_test_function(int kind, double L, double T) {
    struct Mode {
        double a;
        int k;
    };
    std::vector<Mode> modes;
    switch (kind) {
        case 0: modes = {{1.0, 1}}; break;
        case 1: modes = {{1.0, 2}}; break;
        case 2: modes = {{1.0, 1}, {0.5, 2}}; break;
        default: throw ConfigError("testfn", "canonical test function kind must be 0, 1 or 2");
    }
    auto chi = [modes, L](double x) {
        double s = 0;
        for (auto m : modes) s += m.a * std::sin(2 * M_PI * m.k * x / L);
        return s;
    };
    auto chix = [modes, L](double x) {
        double s = 0;
        for (auto m : modes) s += m.a * (2 * M_PI * m.k / L) * std::cos(2 * M_PI * m.k * x / L);
        return s;
    };
    auto chixxx = [modes, L](double x) {
        double s = 0;
        for (auto m : modes) {
            double w = 2 * M_PI * m.k / L;
            s += -m.a * w * w * w * std::cos(w * x);
        }
        return s;
    };
    auto psi = [T](double t) { return (1.0 - t / T) * (1.0 - t / T); };
    auto psit = [T](double t) { return -2.0 * (1.0 - t / T) / T; };
    TestFunction f;
    f.value = [chi, psi](double t, double x) { return psi(t) * chi(x); };
    f.dt = [chi, psit](double t, double x) { return psit(t) * chi(x); };
    f.dx = [chix, psi](double t, double x) { return psi(t) * chix(x); };
    f.dxxx = [chixxx, psi](double t, double x) { return psi(t) * chixxx(x); };
    return f;
}

namespace {

void check_test_function(const TestFunction& phi, double L, double T) {
    const double tol = 1e-9;
    for (double t : {0.0, 0.31 * T, 0.77 * T, T}) {
        if (std::abs(phi.value(t, 0.0)) > tol || std::abs(phi.value(t, L)) > tol)
            throw ConfigError("testfn", "test function must vanish at x = 0 and x = L");
        if (std::abs(phi.dx(t, L) - phi.dx(t, 0.0)) > tol)
            throw ConfigError("testfn", "test function must satisfy phi_x(t, L) = phi_x(t, 0)");
    }
    for (double x : {0.13 * L, 0.5 * L, 0.86 * L})
        if (std::abs(phi.value(T, x)) > tol)
            throw ConfigError("testfn", "test function must vanish at t = T");
}

}  // namespace

double weak_form_residual(const Grid& grid, const Trajectory& traj,
                          const Eigen::VectorXd& input_series,
                          const Eigen::MatrixXd& source_series, const TestFunction& phi,
                          double damping) {
    const Eigen::Index nt = traj.times.size();
    if (nt < 2) throw ConfigError("weakform", "trajectory needs at least two snapshots");
    const double T = traj.times[nt - 1];
    check_test_function(phi, grid.L, T);
    const bool have_u = input_series.size() > 0;
    const bool have_f = source_series.size() > 0;
    if (have_u && input_series.size() != nt)
        throw ConfigError("weakform", "input series length must match trajectory");
    if (have_f && (source_series.rows() != nt || source_series.cols() != grid.size()))
        throw ConfigError("weakform", "source series shape must match trajectory");

    Eigen::VectorXd slice_lhs(nt), slice_rhs(nt), xL(nt);
    for (Eigen::Index k = 0; k < nt; ++k) {
        double t = traj.times[k];
        double acc_lhs = 0.0, acc_rhs = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            double x = grid.nodes[i];
            double y = traj.states(k, i);
            double f = have_f ? source_series(k, i) : 0.0;
            acc_lhs += (f - damping * y) * phi.value(t, x);
            acc_rhs += y * (phi.dt(t, x) + phi.dx(t, x) + phi.dxxx(t, x));
        }
        slice_lhs[k] = grid.h * acc_lhs;
        slice_rhs[k] = grid.h * acc_rhs;
        xL[k] = have_u ? input_series[k] * phi.dx(t, grid.L) : 0.0;
    }
    auto trapz = [&](const Eigen::VectorXd& v) {
        double s = 0.0;
        for (Eigen::Index k = 0; k + 1 < nt; ++k)
            s += 0.5 * (traj.times[k + 1] - traj.times[k]) * (v[k] + v[k + 1]);
        return s;
    };
    double lhs = trapz(slice_lhs) + trapz(xL);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        lhs += grid.h * traj.states(0, i) * phi.value(0.0, grid.nodes[i]);
    double rhs = -trapz(slice_rhs);
    return std::abs(lhs - rhs);
}

}  // namespace kdvstab
