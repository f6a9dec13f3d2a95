#include "kdvstab/discretization.hpp"

#include <cmath>

namespace kdvstab {

double Grid::grad_norm(const Eigen::VectorXd& v) const {
    // forward differences over all N intervals, zero boundary values
    double s = 0.0;
    double prev = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double d = (v[i] - prev) / h;
        s += d * d;
        prev = v[i];
    }
    double dlast = (0.0 - prev) / h;
    s += dlast * dlast;
    return std::sqrt(h * s);
}

Grid build_grid(double L, int N) {
    if (!(L > 0.0)) throw ConfigError("grid", "domain length L must be positive");
    if (N < 8) throw ConfigError("grid", "node count N must be >= 8");
    Grid g;
    g.L = L;
    g.N = N;
    g.h = L / N;
    g.nodes.resize(N - 1);
    for (int i = 1; i < N; ++i) g.nodes[i - 1] = i * g.h;
    return g;
}

namespace {

// |<S w, v>_h| over a fixed family of smooth pairs in the boundary-condition
// class (w(0)=w(L)=0, w'(0)=w'(L)); this weak measure of the symmetric part
// decays at the stencil order, unlike entry-wise norms of S.
double weak_defect(const Grid& g, const Eigen::MatrixXd& S) {
    auto sine = [&](int k) {
        Eigen::VectorXd v(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i)
            v[i] = std::sin(2.0 * M_PI * k * g.nodes[i] / g.L);
        return v;
    };
    Eigen::VectorXd poly(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        double x = g.nodes[i];
        poly[i] = x * x * (g.L - x) * (g.L - x);
    }
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    pairs.emplace_back(sine(1), sine(2));
    pairs.emplace_back(sine(2), sine(3));
    pairs.emplace_back(sine(1), sine(3));
    pairs.emplace_back(poly, sine(1));
    double worst = 0.0;
    for (const auto& [w, v] : pairs) worst = std::max(worst, std::abs(g.dot(S * w, v)));
    return worst;
}

}  // namespace

Generator build_generator(const Grid& grid) {
    const Eigen::Index n = grid.size();
    const double h = grid.h;
    const double h3 = h * h * h;

    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) D1(i, i - 1) = -1.0 / (2 * h);
        if (i + 1 < n) D1(i, i + 1) = 1.0 / (2 * h);
    }

    Eigen::MatrixXd D3 = Eigen::MatrixXd::Zero(n, n);
    // centered rows; boundary values w_0 = w_N = 0 drop out
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        auto add = [&](Eigen::Index j, double c) {
            if (j >= 0 && j < n) D3(i, j) += c / (2 * h3);
        };
        add(i + 2, 1.0);
        add(i + 1, -2.0);
        add(i - 1, 2.0);
        add(i - 2, -1.0);
    }
    // first interior node: one-sided second-order stencil (w_0 = 0)
    D3(0, 0) += 5.0 / h3;
    D3(0, 1) += -6.0 / h3;
    D3(0, 2) += 3.0 / h3;
    D3(0, 3) += -0.5 / h3;
    // last interior node: centered with the ghost closed by the derivative
    // jump constraint, w_{N+1} = w_{N-1} + 4 w_1 - w_2
    {
        Eigen::Index i = n - 1;
        D3(i, i) += 1.0 / (2 * h3);
        D3(i, 0) += 4.0 / (2 * h3);
        D3(i, 1) += -1.0 / (2 * h3);
        D3(i, i - 1) += 2.0 / (2 * h3);
        D3(i, i - 2) += -1.0 / (2 * h3);
    }

    Eigen::MatrixXd Araw = -(D3 + D1);
    Eigen::MatrixXd S = 0.5 * (Araw + Araw.transpose());

    Generator gen;
    gen.grid = grid;
    gen.A = Araw - S;
    gen.D1 = std::move(D1);
    gen.antisym_defect = weak_defect(grid, S);
    gen.b = Eigen::VectorXd::Zero(n);
    gen.b[n - 1] = -2.0 / h;    // second-order one-sided trace, w_N = 0
    gen.b[n - 2] = 0.5 / h;
    return gen;
}

InterpolationCheck interpolation_bound_check(const Grid& grid, const Eigen::VectorXd& w) {
    if (w.size() != grid.size())
        throw ConfigError("interpolation", "grid function has wrong dimension");
    InterpolationCheck out{0.0, 0.0};
    out.lhs = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    double norm = grid.norm(w);
    // left-anchored gradient: intervals [x_0,x_1]..[x_{N-2},x_{N-1}], w_0 = 0;
    // the right endpoint is unconstrained so its interval is excluded
    double s = 0.0, prev = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        double d = (w[i] - prev) / grid.h;
        s += d * d;
        prev = w[i];
    }
    double grad = std::sqrt(grid.h * s);
    out.rhs = std::sqrt(norm) * std::sqrt(grad);
    return out;
}

}  // namespace kdvstab
