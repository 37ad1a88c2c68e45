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
//
// Reference implementations used only by the tests. Each is written
// independently of the library code it checks: Gauss-Jordan instead of LU,
// Simpson quadrature instead of erfc, finite differences instead of
// backpropagation.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fdxsic/linalg.hpp>
#include <fdxsic/mlp.hpp>
#include <fdxsic/signal.hpp>

namespace oracles {

using fdxsic::cmat;
using fdxsic::cplx;
using fdxsic::cvec;

/// Gauss-Jordan inverse with partial pivoting.
inline cmat gj_inverse(const cmat& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("gj_inverse: not square");
    const std::size_t n = a.rows();
    cmat work = a;
    cmat inv = cmat::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(work(col, col));
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > best) {
                best = std::abs(work(r, col));
                pivot = r;
            }
        if (!(best > 0.0))
            throw std::runtime_error("gj_inverse: singular");
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work(pivot, c), work(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        const cplx d = work(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            work(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const cplx f = work(r, col);
            if (f == cplx{})
                continue;
            for (std::size_t c = 0; c < n; ++c) {
                work(r, c) -= f * work(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

/// Classical Gram-Schmidt with one re-orthogonalization pass; the input
/// columns must be linearly independent.
inline cmat gram_schmidt(const cmat& a) {
    cmat q = a;
    for (std::size_t j = 0; j < q.cols(); ++j) {
        cvec v = q.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                const cvec u = q.col(k);
                const cplx proj = fdxsic::vdot(u, v);
                for (std::size_t i = 0; i < v.size(); ++i)
                    v[i] -= proj * u[i];
            }
        const double nrm = fdxsic::norm2(v);
        if (!(nrm > 1e-12))
            throw std::runtime_error("gram_schmidt: dependent columns");
        for (cplx& z : v)
            z /= nrm;
        q.set_col(j, v);
    }
    return q;
}

/// Gaussian tail probability by composite Simpson quadrature on [x, x+40].
inline double q_simpson(double x) {
    const double lo = x;
    const double hi = x + 40.0;
    const int n = 400000; // even
    const double h = (hi - lo) / n;
    const auto density = [](double t) {
        return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846);
    };
    double acc = density(lo) + density(hi);
    for (int i = 1; i < n; ++i)
        acc += density(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Central-difference Jacobian of the network outputs, rows ordered exactly
/// like fdxsic::jacobian: (sample, output) pairs across all parameters.
inline std::vector<double> fd_jacobian(const fdxsic::mlp_params& p, const fdxsic::dataset& d,
                                       double h = 1e-6) {
    const int np = p.n_params();
    const int ns = d.n_samples();
    const int no = d.n_out;
    std::vector<double> j(static_cast<std::size_t>(ns) * no * np);
    fdxsic::mlp_params probe = p;
    for (int k = 0; k < np; ++k) {
        const double save = probe.w[static_cast<std::size_t>(k)];
        const double step = h * std::max(1.0, std::abs(save));
        probe.w[static_cast<std::size_t>(k)] = save + step;
        std::vector<std::vector<double>> hi(static_cast<std::size_t>(ns));
        for (int s = 0; s < ns; ++s)
            hi[static_cast<std::size_t>(s)] = fdxsic::forward(
                probe, std::vector<double>(d.x_row(s), d.x_row(s) + d.n_in));
        probe.w[static_cast<std::size_t>(k)] = save - step;
        for (int s = 0; s < ns; ++s) {
            const std::vector<double> lo = fdxsic::forward(
                probe, std::vector<double>(d.x_row(s), d.x_row(s) + d.n_in));
            for (int o = 0; o < no; ++o) {
                const std::size_t row = static_cast<std::size_t>(s) * no + o;
                j[row * np + static_cast<std::size_t>(k)] =
                    (hi[static_cast<std::size_t>(s)][static_cast<std::size_t>(o)] -
                     lo[static_cast<std::size_t>(o)]) /
                    (2.0 * step);
            }
        }
        probe.w[static_cast<std::size_t>(k)] = save;
    }
    return j;
}

/// Random interference scene for identity and optimality sweeps.
struct random_scene {
    fdxsic::scenario sc;
    fdxsic::array_geometry geom;
    double sigma2 = 1.0;
};

inline random_scene make_random_scene(std::mt19937_64& g) {
    std::uniform_int_distribution<int> n_ant(4, 12);
    std::uniform_int_distribution<int> n_paths(1, 6);
    std::uniform_real_distribution<double> angle(-179.0, 180.0);
    std::uniform_real_distribution<double> power_db(-30.0, 10.0);
    std::uniform_real_distribution<double> noise_db(-30.0, 10.0);
    std::uniform_int_distribution<int> half_spacing(0, 1);

    random_scene r;
    r.geom.n_antennas = n_ant(g);
    r.geom.spacing_wavelengths = half_spacing(g) ? 0.5 : 0.25;
    r.sc.desired_angle_deg = angle(g);
    const int l = n_paths(g);
    for (int i = 0; i < l; ++i) {
        r.sc.int_angles_deg.push_back(angle(g));
        r.sc.int_powers_db.push_back(power_db(g));
        r.sc.path_delays_symbols.push_back(i);
    }
    r.sc.noise_power_db = noise_db(g);
    r.sigma2 = fdxsic::db_to_linear(r.sc.noise_power_db);
    return r;
}

/// Dense interference-plus-noise covariance assembled term by term.
inline cmat dense_covariance(const random_scene& r) {
    const std::size_t n = static_cast<std::size_t>(r.geom.n_antennas);
    cmat s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        s(i, i) = r.sigma2;
    for (std::size_t l = 0; l < r.sc.int_angles_deg.size(); ++l) {
        const cvec a = fdxsic::steering_vector(r.geom, r.sc.int_angles_deg[l]);
        const double p = fdxsic::db_to_linear(r.sc.int_powers_db[l]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                s(i, j) += p * a[i] * std::conj(a[j]);
    }
    return s;
}

inline double rel_frobenius(const cmat& a, const cmat& b) {
    cmat d = a;
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            d(i, j) -= b(i, j);
    return fdxsic::frobenius_norm(d) / fdxsic::frobenius_norm(b);
}

/// Beamformer output power against a covariance, wᴴ·S·w.
inline double output_power(const cvec& w, const cmat& s) {
    return std::real(fdxsic::vdot(w, fdxsic::matvec(s, w)));
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace oracles
