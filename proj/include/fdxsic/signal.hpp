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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace fdxsic {

struct invalid_config : error {
    using error::error;
};
struct odd_bit_count : error {
    using error::error;
};
struct stream_too_short : error {
    using error::error;
};

struct array_geometry {
    int n_antennas = 10;
    double spacing_wavelengths = 0.5;
};

inline void validate(const array_geometry& g) {
    if (g.n_antennas < 2)
        throw invalid_config("array.n_antennas must be at least 2");
    if (!(g.spacing_wavelengths > 0.0))
        throw invalid_config("array.spacing_wavelengths must be positive");
}

struct scenario {
    std::string label;
    double desired_angle_deg = 30.0;
    std::vector<double> int_angles_deg;
    std::vector<double> int_powers_db;
    std::vector<int> path_delays_symbols;
    double noise_power_db = -20.0;
};

inline void validate(const scenario& s) {
    if (s.int_angles_deg.size() != s.int_powers_db.size() ||
        s.int_angles_deg.size() != s.path_delays_symbols.size())
        throw invalid_config("scenario: interference angle/power/delay lists differ in length");
    const auto angle_ok = [](double a) { return a > -180.0 && a <= 180.0; };
    if (!angle_ok(s.desired_angle_deg))
        throw invalid_config("scenario: desired angle outside (-180, 180]");
    for (double a : s.int_angles_deg)
        if (!angle_ok(a))
            throw invalid_config("scenario: interference angle outside (-180, 180]");
    for (int d : s.path_delays_symbols)
        if (d < 0)
            throw invalid_config("scenario: path delay must be non-negative");
}

struct frame_spec {
    int block_len = 1000;
    double pilot_fraction = 0.10;

    int pilot_len() const { return static_cast<int>(std::llround(pilot_fraction * block_len)); }
    int payload_len() const { return block_len - pilot_len(); }
};

inline void validate(const frame_spec& f) {
    if (f.block_len < 2)
        throw invalid_config("frame.block_len must be at least 2");
    if (!(f.pilot_fraction > 0.0 && f.pilot_fraction < 1.0))
        throw invalid_config("frame.pilot_fraction must lie in (0, 1)");
    if (f.pilot_len() < 1)
        throw invalid_config("frame: pilot count rounds to zero");
    if (f.payload_len() < 1)
        throw invalid_config("frame: no payload symbols left");
}

/// sin of an angle in degrees, folded so that theta and 180-theta give the
/// same double bit for bit. The fold is what makes the mirrored-null
/// symmetry of the array exact instead of merely close.
inline double sind(double angle_deg) {
    double d = angle_deg;
    if (d > 180.0 || d <= -180.0) {
        d = std::fmod(d, 360.0);
        if (d > 180.0)
            d -= 360.0;
        else if (d <= -180.0)
            d += 360.0;
    }
    if (d > 90.0)
        d = 180.0 - d;
    else if (d < -90.0)
        d = -180.0 - d;
    return std::sin(d * (pi / 180.0));
}

inline cvec steering_vector(const array_geometry& g, double angle_deg) {
    validate(g);
    const double step = 2.0 * pi * g.spacing_wavelengths * sind(angle_deg);
    cvec a(static_cast<std::size_t>(g.n_antennas));
    for (int n = 0; n < g.n_antennas; ++n)
        a[static_cast<std::size_t>(n)] = std::polar(1.0, step * n);
    return a;
}

struct symbol_stream {
    cvec symbols;
    std::vector<std::uint8_t> bits; // two per symbol
};

inline constexpr double inv_sqrt2 = 0.7071067811865475244;

/// Gray-mapped QPSK. First bit selects the imaginary sign, second the real.
inline symbol_stream qpsk_modulate(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0)
        throw odd_bit_count("qpsk_modulate: " + std::to_string(bits.size()) + " bits");
    symbol_stream s;
    s.bits = bits;
    s.symbols.resize(bits.size() / 2);
    for (std::size_t k = 0; k < s.symbols.size(); ++k) {
        const double im = bits[2 * k] ? -inv_sqrt2 : inv_sqrt2;
        const double re = bits[2 * k + 1] ? -inv_sqrt2 : inv_sqrt2;
        s.symbols[k] = cplx(re, im);
    }
    return s;
}

inline std::vector<std::uint8_t> qpsk_demodulate(const cvec& symbols) {
    std::vector<std::uint8_t> bits(symbols.size() * 2);
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        bits[2 * k] = symbols[k].imag() < 0.0 ? 1 : 0;
        bits[2 * k + 1] = symbols[k].real() < 0.0 ? 1 : 0;
    }
    return bits;
}

inline std::vector<std::uint8_t> random_bits(std::size_t count, rng& g) {
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits)
        b = static_cast<std::uint8_t>(g.next() >> 63);
    return bits;
}

inline symbol_stream random_qpsk(std::size_t n_symbols, rng& g) {
    return qpsk_modulate(random_bits(2 * n_symbols, g));
}

using snapshot_matrix = cmat;

inline int max_delay(const scenario& s) {
    int m = 0;
    for (int d : s.path_delays_symbols)
        m = std::max(m, d);
    return m;
}

/// Received block: desired user plus delayed self-interference copies plus
/// white noise, one column per symbol instant. The si stream must carry
/// max_delay(sc) extra lead-in symbols in front of the block.
inline snapshot_matrix synthesize(const scenario& sc, const array_geometry& g,
                                  const frame_spec& frame, const symbol_stream& desired,
                                  const symbol_stream& si, std::uint64_t seed) {
    validate(sc);
    validate(g);
    validate(frame);
    const std::size_t n = static_cast<std::size_t>(g.n_antennas);
    const std::size_t t_len = static_cast<std::size_t>(frame.block_len);
    const int maxd = max_delay(sc);
    if (desired.symbols.size() < t_len)
        throw stream_too_short("synthesize: desired stream shorter than block");
    if (si.symbols.size() < t_len + static_cast<std::size_t>(maxd))
        throw stream_too_short("synthesize: si stream does not cover the max path delay");

    const cvec a_d = steering_vector(g, sc.desired_angle_deg);
    const std::size_t n_paths = sc.int_angles_deg.size();
    std::vector<cvec> a_i(n_paths);
    std::vector<double> amp(n_paths);
    for (std::size_t l = 0; l < n_paths; ++l) {
        a_i[l] = steering_vector(g, sc.int_angles_deg[l]);
        amp[l] = std::sqrt(db_to_linear(sc.int_powers_db[l]));
    }
    const double sigma2 = db_to_linear(sc.noise_power_db);

    rng noise(seed, streams::noise);
    snapshot_matrix y(n, t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        const cplx sd = desired.symbols[t];
        for (std::size_t i = 0; i < n; ++i)
            y(i, t) = a_d[i] * sd;
        for (std::size_t l = 0; l < n_paths; ++l) {
            const std::size_t idx =
                t + static_cast<std::size_t>(maxd - sc.path_delays_symbols[l]);
            const cplx ss = amp[l] * si.symbols[idx];
            for (std::size_t i = 0; i < n; ++i)
                y(i, t) += a_i[l][i] * ss;
        }
        for (std::size_t i = 0; i < n; ++i)
            y(i, t) += noise.complex_normal(sigma2);
    }
    return y;
}

/// Interference-plus-noise covariance built from the scenario description.
inline cmat analytic_covariance(const scenario& sc, const array_geometry& g) {
    validate(sc);
    validate(g);
    const std::size_t n = static_cast<std::size_t>(g.n_antennas);
    cmat s(n, n);
    const double sigma2 = db_to_linear(sc.noise_power_db);
    for (std::size_t i = 0; i < n; ++i)
        s(i, i) = sigma2;
    for (std::size_t l = 0; l < sc.int_angles_deg.size(); ++l) {
        const double p = db_to_linear(sc.int_powers_db[l]);
        const cvec a = steering_vector(g, sc.int_angles_deg[l]);
        for (std::size_t i = 0; i < n; ++i) {
            s(i, i) += p * std::norm(a[i]);
            s(i, i) = std::real(s(i, i));
            for (std::size_t j = i + 1; j < n; ++j) {
                s(i, j) += p * a[i] * std::conj(a[j]);
                s(j, i) = std::conj(s(i, j));
            }
        }
    }
    return s;
}

/// Steering matrix of the interference paths, one column per path.
inline cmat interference_steering(const scenario& sc, const array_geometry& g) {
    const std::size_t n = static_cast<std::size_t>(g.n_antennas);
    cmat v(n, sc.int_angles_deg.size());
    for (std::size_t l = 0; l < sc.int_angles_deg.size(); ++l)
        v.set_col(l, steering_vector(g, sc.int_angles_deg[l]));
    return v;
}

inline std::vector<double> interference_powers_linear(const scenario& sc) {
    std::vector<double> p(sc.int_powers_db.size());
    for (std::size_t l = 0; l < p.size(); ++l)
        p[l] = db_to_linear(sc.int_powers_db[l]);
    return p;
}

} // namespace fdxsic
