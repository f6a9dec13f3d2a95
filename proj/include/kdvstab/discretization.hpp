#pragma once

#include <Eigen/Dense>

#include "kdvstab/util.hpp"

namespace kdvstab {

/// Uniform mesh on (0, L) with N subintervals and N-1 interior nodes.
/// Grid functions live on the interior nodes; the homogeneous Dirichlet
/// values at x = 0 and x = L are implicit. The discrete L2 pairing is
/// <u, v>_h = h * u . v.
struct Grid {
    double L = 0.0;
    int N = 0;
    double h = 0.0;
    Eigen::VectorXd nodes;  // x_i = i h, i = 1..N-1

    Eigen::Index size() const { return nodes.size(); }
    /// h-weighted L2 norm of a grid function.
    double norm(const Eigen::VectorXd& v) const { return std::sqrt(h) * v.norm(); }
    /// h-weighted L2 inner product.
    double dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return h * u.dot(v); }
    /// Discrete H1 seminorm with zero boundary values (forward differences
    /// over all N subintervals).
    double grad_norm(const Eigen::VectorXd& v) const;
};

Grid build_grid(double L, int N);

/// Discrete generator of the linearized flow: A ~ -d/dx - d^3/dx^3 on
/// functions with w(0) = w(L) = 0 and w_x(L) = w_x(0), assembled from
/// centered second-order stencils with ghost elimination and then exactly
/// antisymmetrized. b is the boundary-trace functional, b . w ~ w_x(L),
/// and also the column through which the input u enters: y' = A y + b u.
struct Generator {
    Grid grid;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd D1;        // antisymmetric first-derivative matrix
    double antisym_defect = 0.0;
    int scheme_order = 2;

    Eigen::Index size() const { return A.rows(); }
};

/// The antisymmetrization discards the symmetric part S of the raw assembly.
/// antisym_defect records S as a weak form: max |<S w, v>_h| over a fixed
/// family of smooth pairs compatible with the boundary conditions. This is
/// the measure that vanishes at the stencil's consistency order; the raw
/// entry-wise norm of S does not (the closure rows carry O(1/h^3) entries).
Generator build_generator(const Grid& grid);

struct InterpolationCheck {
    double lhs;  // discrete sup norm
    double rhs;  // ||w||^(1/2) ||Dw||^(1/2), left-anchored forward differences
};

/// Both sides of the interpolation bound ||w||_inf <= ||w||^(1/2) ||w'||^(1/2)
/// for grid functions with w(0) = 0 (right endpoint unconstrained; the
/// gradient sum runs over the N-1 intervals left of the last node).
/// The constant-free form fails already for w(x) = x; callers assert
/// lhs <= sqrt(2) * rhs.
InterpolationCheck interpolation_bound_check(const Grid& grid, const Eigen::VectorXd& w);

}  // namespace kdvstab
