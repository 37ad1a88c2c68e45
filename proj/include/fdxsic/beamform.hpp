// SPDX-License-Identifier: Apache-2.0
//
// fdxsic: digital self-interference cancellation simulation library
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "signal.hpp"

namespace fdxsic {

struct singular_covariance : error {
    using error::error;
};
struct rank_deficient_constraints : error {
    using error::error;
};
struct too_many_constraints : error {
    using error::error;
};
struct too_few_snapshots : error {
    using error::error;
};
struct no_sharp_drop : error {
    using error::error;
};

enum class beam_method { conventional, mvdr, lcmv_oracle, lcmv_evd };

inline const char* to_string(beam_method m) {
    switch (m) {
    case beam_method::conventional: return "conventional";
    case beam_method::mvdr: return "mvdr";
    case beam_method::lcmv_oracle: return "lcmv_oracle";
    case beam_method::lcmv_evd: return "lcmv_evd";
    }
    return "?";
}

inline beam_method beam_method_from_string(const std::string& s) {
    if (s == "conventional")
        return beam_method::conventional;
    if (s == "mvdr")
        return beam_method::mvdr;
    if (s == "lcmv" || s == "lcmv_oracle")
        return beam_method::lcmv_oracle;
    if (s == "lcmv_evd")
        return beam_method::lcmv_evd;
    throw invalid_config("unknown beam method " + s);
}

struct beam_weights {
    cvec taps;
    beam_method method = beam_method::conventional;
};

struct constraint_set {
    cmat c;  // one column per constraint direction
    cvec g;  // desired responses, unity first then zeros
};

struct subspace_selection {
    int n_m = 1;
    double drop_ratio = 0.01;
    std::vector<double> eigenvalues; // projected spectrum, descending
};

namespace detail {

// small diagonal bump so noiseless covariances stay invertible
inline cmat loaded(const cmat& s) {
    cmat r = s;
    const double eps = 1e-10 * std::real(trace(s)) / static_cast<double>(s.rows());
    for (std::size_t i = 0; i < r.rows(); ++i)
        r(i, i) += eps;
    return r;
}

} // namespace detail

inline beam_weights conventional_weights(const array_geometry& geom, double desired_angle_deg) {
    cvec a = steering_vector(geom, desired_angle_deg);
    const double n = static_cast<double>(a.size());
    for (cplx& z : a)
        z /= n;
    return {std::move(a), beam_method::conventional};
}

/// Minimum-variance weights given a precomputed covariance inverse.
inline beam_weights mvdr_weights_from_inverse(const cmat& s_inv, const cvec& steering_d) {
    cvec x = matvec(s_inv, steering_d);
    const double denom = std::real(vdot(steering_d, x));
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw singular_covariance("mvdr: quadratic form not positive");
    for (cplx& z : x)
        z /= denom;
    return {std::move(x), beam_method::mvdr};
}

inline beam_weights mvdr_weights(const cmat& s_nu, const cvec& steering_d) {
    if (s_nu.rows() != s_nu.cols() || s_nu.rows() != steering_d.size())
        throw size_mismatch("mvdr_weights: covariance/steering sizes disagree");
    cvec x;
    try {
        x = solve(detail::loaded(s_nu), steering_d);
    } catch (const singular_matrix& e) {
        throw singular_covariance(e.what());
    }
    const double denom = std::real(vdot(steering_d, x));
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw singular_covariance("mvdr: quadratic form not positive");
    for (cplx& z : x)
        z /= denom;
    return {std::move(x), beam_method::mvdr};
}

namespace detail {

inline beam_weights lcmv_from_solved(cmat t1, const constraint_set& cs, beam_method tag) {
    const cmat m = matmul(adjoint(cs.c), t1);
    cvec y;
    try {
        y = solve(m, cs.g);
    } catch (const singular_matrix& e) {
        throw rank_deficient_constraints(e.what());
    }
    cvec w = matvec(t1, y);
    return {std::move(w), tag};
}

} // namespace detail

inline beam_weights lcmv_weights(const cmat& s_nu, const constraint_set& cs,
                                 beam_method tag = beam_method::lcmv_oracle) {
    if (s_nu.rows() != cs.c.rows())
        throw size_mismatch("lcmv_weights: covariance/constraint sizes disagree");
    if (cs.c.cols() > cs.c.rows())
        throw too_many_constraints("lcmv_weights: more constraints than antennas");
    cmat t1;
    try {
        t1 = solve(detail::loaded(s_nu), cs.c);
    } catch (const singular_matrix& e) {
        throw singular_covariance(e.what());
    }
    return detail::lcmv_from_solved(std::move(t1), cs, tag);
}

inline beam_weights lcmv_weights_from_inverse(const cmat& s_inv, const constraint_set& cs,
                                              beam_method tag = beam_method::lcmv_oracle) {
    if (s_inv.rows() != cs.c.rows())
        throw size_mismatch("lcmv_weights_from_inverse: sizes disagree");
    if (cs.c.cols() > cs.c.rows())
        throw too_many_constraints("lcmv_weights_from_inverse: more constraints than antennas");
    return detail::lcmv_from_solved(matmul(s_inv, cs.c), cs, tag);
}

inline constraint_set build_constraints_oracle(const array_geometry& geom, const scenario& sc) {
    validate(sc);
    const std::size_t n_cols = sc.int_angles_deg.size() + 1;
    if (n_cols > static_cast<std::size_t>(geom.n_antennas))
        throw too_many_constraints(detail::strprintf(
            "build_constraints_oracle: %zu constraints for %d antennas", n_cols, geom.n_antennas));
    constraint_set cs;
    cs.c = cmat(static_cast<std::size_t>(geom.n_antennas), n_cols);
    cs.c.set_col(0, steering_vector(geom, sc.desired_angle_deg));
    for (std::size_t l = 0; l + 1 < n_cols; ++l)
        cs.c.set_col(l + 1, steering_vector(geom, sc.int_angles_deg[l]));
    cs.g.assign(n_cols, 0.0);
    cs.g[0] = 1.0;
    return cs;
}

inline cmat sample_covariance(const snapshot_matrix& y) {
    const std::size_t n = y.rows();
    const std::size_t t = y.cols();
    cmat s(n, n);
    for (std::size_t k = 0; k < t; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            s(i, i) += std::norm(y(i, k));
            s(i, i) = std::real(s(i, i));
            for (std::size_t j = i + 1; j < n; ++j)
                s(i, j) += y(i, k) * std::conj(y(j, k));
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j > i)
                s(i, j) /= static_cast<double>(t);
            else if (j < i)
                s(i, j) = std::conj(s(j, i));
            else
                s(i, i) = std::real(s(i, i)) / static_cast<double>(t);
        }
    return s;
}

/// Eigen-structure constraint construction. The known desired steering vector
/// stays as the first column; the interference subspace is read off the
/// eigenvectors of the sample covariance after the desired direction is
/// projected out, which keeps the eigenvector-to-constraint assignment well
/// defined even when interference dominates.
inline std::pair<constraint_set, subspace_selection>
build_constraints_evd(const snapshot_matrix& snapshots, const cvec& steering_d,
                      double drop_ratio = 0.01) {
    const std::size_t n = snapshots.rows();
    if (steering_d.size() != n)
        throw size_mismatch("build_constraints_evd: steering length mismatch");
    if (snapshots.cols() < n)
        throw too_few_snapshots(detail::strprintf("build_constraints_evd: %zu snapshots for %zu antennas",
                                                  snapshots.cols(), n));

    const cmat a = sample_covariance(snapshots);

    cmat p = cmat::identity(n);
    const double a_norm2 = std::real(vdot(steering_d, steering_d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p(i, j) -= steering_d[i] * std::conj(steering_d[j]) / a_norm2;

    cmat ap = matmul(p, matmul(a, p));
    for (std::size_t i = 0; i < n; ++i) {
        ap(i, i) = std::real(ap(i, i));
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx v = 0.5 * (ap(i, j) + std::conj(ap(j, i)));
            ap(i, j) = v;
            ap(j, i) = std::conj(v);
        }
    }

    const evd_result evd = hermitian_evd(ap);
    const double lam0 = evd.eigenvalues[0];
    const double scale = std::real(trace(a)) / static_cast<double>(n);

    std::size_t kept = 0;
    if (lam0 > 1e-12 * std::max(scale, 1e-300)) {
        std::size_t m = n; // first index below the drop threshold
        for (std::size_t i = 1; i < n; ++i)
            if (evd.eigenvalues[i] < drop_ratio * lam0) {
                m = i;
                break;
            }
        // the projected-out direction always contributes one near-zero
        // eigenvalue, so a drop only at the last index means none was found
        if (m >= n - 1)
            throw no_sharp_drop(
                "build_constraints_evd: no eigenvalue drop below threshold; interference fills the aperture");
        kept = m;
    }

    constraint_set cs;
    cs.c = cmat(n, kept + 1);
    cvec d = steering_d;
    cs.c.set_col(0, d);
    for (std::size_t i = 0; i < kept; ++i)
        cs.c.set_col(i + 1, evd.eigenvectors.col(i));
    cs.g.assign(kept + 1, 0.0);
    cs.g[0] = 1.0;

    subspace_selection sel;
    sel.n_m = static_cast<int>(kept) + 1;
    sel.drop_ratio = drop_ratio;
    sel.eigenvalues = evd.eigenvalues;
    return {std::move(cs), std::move(sel)};
}

inline std::vector<double> default_angle_grid() {
    std::vector<double> grid(360);
    for (int i = 0; i < 360; ++i)
        grid[static_cast<std::size_t>(i)] = static_cast<double>(i - 179);
    return grid;
}

inline std::vector<double> beam_pattern(const beam_weights& w, const array_geometry& geom,
                                        const std::vector<double>& angle_grid_deg) {
    std::vector<double> gains(angle_grid_deg.size());
    for (std::size_t k = 0; k < angle_grid_deg.size(); ++k) {
        const cvec a = steering_vector(geom, angle_grid_deg[k]);
        const double mag = std::abs(vdot(w.taps, a));
        gains[k] = 20.0 * std::log10(std::max(mag, 1e-20));
    }
    return gains;
}

/// Post-combining signal-to-interference-plus-noise ratio for a unit-power
/// desired user, evaluated against the scenario's analytic covariances.
inline double output_sinr(const beam_weights& w, const scenario& sc, const array_geometry& geom) {
    const cvec a_d = steering_vector(geom, sc.desired_angle_deg);
    const double sig = std::norm(vdot(w.taps, a_d));
    double denom = db_to_linear(sc.noise_power_db) * std::real(vdot(w.taps, w.taps));
    for (std::size_t l = 0; l < sc.int_angles_deg.size(); ++l) {
        const cvec a_l = steering_vector(geom, sc.int_angles_deg[l]);
        denom += db_to_linear(sc.int_powers_db[l]) * std::norm(vdot(w.taps, a_l));
    }
    return sig / denom;
}

} // namespace fdxsic
