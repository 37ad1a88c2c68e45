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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"
#include "signal.hpp"

namespace fdxsic {

struct divergent_training : error {
    using error::error;
};
struct empty_split : error {
    using error::error;
};
struct model_io_error : error {
    using error::error;
};

enum class activation { sigmoid_sym, relu };

inline const char* to_string(activation a) {
    return a == activation::sigmoid_sym ? "sigmoid_sym" : "relu";
}

inline activation activation_from_string(const std::string& s) {
    if (s == "sigmoid_sym" || s == "tanh")
        return activation::sigmoid_sym;
    if (s == "relu")
        return activation::relu;
    throw invalid_config("unknown activation " + s);
}

/// Symmetric sigmoid 2/(1+e^{-2x}) - 1, which is tanh exactly.
inline double sigmoid_sym(double x) { return std::tanh(x); }

/// Fully connected network. Parameters live in one flat vector: per layer the
/// weight block in fan-out-major order, then that layer's biases.
struct mlp_params {
    std::vector<int> layer_sizes{20, 2, 2};
    activation hidden_act = activation::sigmoid_sym;
    std::vector<double> w;

    int n_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

    int n_params() const {
        int c = 0;
        for (int l = 0; l < n_layers(); ++l)
            c += (layer_sizes[l] + 1) * layer_sizes[l + 1];
        return c;
    }

    int layer_offset(int layer) const {
        int off = 0;
        for (int l = 0; l < layer; ++l)
            off += (layer_sizes[l] + 1) * layer_sizes[l + 1];
        return off;
    }

    int bias_offset(int layer) const {
        return layer_offset(layer) + layer_sizes[layer] * layer_sizes[layer + 1];
    }
};

inline mlp_params make_mlp(const std::vector<int>& layer_sizes, activation hidden_act,
                           std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw invalid_config("make_mlp: need at least input and output layer");
    for (int s : layer_sizes)
        if (s < 1)
            throw invalid_config("make_mlp: zero-width layer");
    mlp_params p;
    p.layer_sizes = layer_sizes;
    p.hidden_act = hidden_act;
    p.w.resize(static_cast<std::size_t>(p.n_params()));
    rng g(seed, streams::net_init);
    std::size_t k = 0;
    for (int l = 0; l < p.n_layers(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
        const int count = (layer_sizes[l] + 1) * layer_sizes[l + 1];
        for (int i = 0; i < count; ++i)
            p.w[k++] = (g.uniform() - 0.5) * scale;
    }
    return p;
}

namespace detail {

inline double act_apply(activation a, double x) {
    return a == activation::sigmoid_sym ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

// derivative from the post-activation value
inline double act_deriv(activation a, double y) {
    return a == activation::sigmoid_sym ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

inline void forward_trace(const mlp_params& p, const double* input,
                          std::vector<std::vector<double>>& acts) {
    const int nl = p.n_layers();
    acts.resize(static_cast<std::size_t>(nl) + 1);
    acts[0].assign(input, input + p.layer_sizes[0]);
    for (int l = 0; l < nl; ++l) {
        const int fan_in = p.layer_sizes[l];
        const int fan_out = p.layer_sizes[l + 1];
        const double* wl = p.w.data() + p.layer_offset(l);
        const double* bl = p.w.data() + p.bias_offset(l);
        auto& out = acts[static_cast<std::size_t>(l) + 1];
        out.assign(static_cast<std::size_t>(fan_out), 0.0);
        const auto& in = acts[static_cast<std::size_t>(l)];
        for (int o = 0; o < fan_out; ++o) {
            double z = bl[o];
            const double* row = wl + static_cast<std::ptrdiff_t>(o) * fan_in;
            for (int i = 0; i < fan_in; ++i)
                z += row[i] * in[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(o)] = l + 1 < nl ? act_apply(p.hidden_act, z) : z;
        }
    }
}

} // namespace detail

inline std::vector<double> forward(const mlp_params& p, const std::vector<double>& input) {
    if (static_cast<int>(input.size()) != p.layer_sizes[0])
        throw size_mismatch("forward: input length " + std::to_string(input.size()) +
                            " for " + std::to_string(p.layer_sizes[0]) + " inputs");
    std::vector<std::vector<double>> acts;
    detail::forward_trace(p, input.data(), acts);
    return acts.back();
}

struct dataset {
    int n_in = 0;
    int n_out = 0;
    std::vector<double> x; // samples x n_in, row-major
    std::vector<double> t; // samples x n_out

    int n_samples() const { return n_in > 0 ? static_cast<int>(x.size()) / n_in : 0; }

    const double* x_row(int s) const { return x.data() + static_cast<std::ptrdiff_t>(s) * n_in; }
    const double* t_row(int s) const { return t.data() + static_cast<std::ptrdiff_t>(s) * n_out; }
};

/// Supervised pairs for the equalizer: antenna I/Q interleaved as inputs,
/// known pilot I/Q as targets.
inline dataset make_pilot_dataset(const snapshot_matrix& y, const cvec& pilots) {
    const std::size_t count = std::min(y.cols(), pilots.size());
    dataset d;
    d.n_in = static_cast<int>(2 * y.rows());
    d.n_out = 2;
    d.x.reserve(count * 2 * y.rows());
    d.t.reserve(count * 2);
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t i = 0; i < y.rows(); ++i) {
            d.x.push_back(y(i, s).real());
            d.x.push_back(y(i, s).imag());
        }
        d.t.push_back(pilots[s].real());
        d.t.push_back(pilots[s].imag());
    }
    return d;
}

inline void append(dataset& dst, const dataset& src) {
    if (dst.n_in == 0) {
        dst = src;
        return;
    }
    if (dst.n_in != src.n_in || dst.n_out != src.n_out)
        throw size_mismatch("dataset append: shape mismatch");
    dst.x.insert(dst.x.end(), src.x.begin(), src.x.end());
    dst.t.insert(dst.t.end(), src.t.begin(), src.t.end());
}

namespace detail {

// J rows are (sample, output) pairs; entries are d(output)/d(param).
// e holds the matching residuals y - t.
inline void jacobian_and_errors(const mlp_params& p, const dataset& d, std::vector<double>& j,
                                std::vector<double>& e) {
    const int np = p.n_params();
    const int ns = d.n_samples();
    const int no = d.n_out;
    const int nl = p.n_layers();
    j.assign(static_cast<std::size_t>(ns) * no * np, 0.0);
    e.assign(static_cast<std::size_t>(ns) * no, 0.0);

    std::vector<std::vector<double>> acts;
    std::vector<double> delta, prev;
    for (int s = 0; s < ns; ++s) {
        forward_trace(p, d.x_row(s), acts);
        const double* tgt = d.t_row(s);
        for (int k = 0; k < no; ++k) {
            const std::size_t row = static_cast<std::size_t>(s) * no + k;
            e[row] = acts.back()[static_cast<std::size_t>(k)] - tgt[k];
            double* jr = j.data() + row * np;

            delta.assign(static_cast<std::size_t>(no), 0.0);
            delta[static_cast<std::size_t>(k)] = 1.0;
            for (int l = nl - 1; l >= 0; --l) {
                const int fan_in = p.layer_sizes[l];
                const int fan_out = p.layer_sizes[l + 1];
                const double* wl = p.w.data() + p.layer_offset(l);
                double* jw = jr + p.layer_offset(l);
                double* jb = jr + p.bias_offset(l);
                const auto& in = acts[static_cast<std::size_t>(l)];
                for (int o = 0; o < fan_out; ++o) {
                    const double dk = delta[static_cast<std::size_t>(o)];
                    if (dk == 0.0)
                        continue;
                    double* jrow = jw + static_cast<std::ptrdiff_t>(o) * fan_in;
                    for (int i = 0; i < fan_in; ++i)
                        jrow[i] = dk * in[static_cast<std::size_t>(i)];
                    jb[o] = dk;
                }
                if (l > 0) {
                    prev.assign(static_cast<std::size_t>(fan_in), 0.0);
                    for (int o = 0; o < fan_out; ++o) {
                        const double dk = delta[static_cast<std::size_t>(o)];
                        if (dk == 0.0)
                            continue;
                        const double* wrow = wl + static_cast<std::ptrdiff_t>(o) * fan_in;
                        for (int i = 0; i < fan_in; ++i)
                            prev[static_cast<std::size_t>(i)] += wrow[i] * dk;
                    }
                    for (int i = 0; i < fan_in; ++i)
                        prev[static_cast<std::size_t>(i)] *=
                            act_deriv(p.hidden_act, in[static_cast<std::size_t>(i)]);
                    delta = prev;
                }
            }
        }
    }
}

} // namespace detail

inline std::vector<double> jacobian(const mlp_params& p, const dataset& d) {
    if (d.n_samples() < 1)
        throw empty_split("jacobian: empty dataset");
    if (d.n_in != p.layer_sizes[0] || d.n_out != p.layer_sizes.back())
        throw size_mismatch("jacobian: dataset shape does not match network");
    std::vector<double> j, e;
    detail::jacobian_and_errors(p, d, j, e);
    return j;
}

enum class stop_reason { min_gradient, max_epochs, mu_overflow };

inline const char* to_string(stop_reason r) {
    switch (r) {
    case stop_reason::min_gradient: return "min_gradient";
    case stop_reason::max_epochs: return "max_epochs";
    case stop_reason::mu_overflow: return "mu_overflow";
    }
    return "?";
}

struct train_config {
    int max_epochs = 1000;
    double min_gradient = 1e-7;
    double mu_init = 0.005;
    double mu_inc = 10.0;
    double mu_dec = 0.1;
    double mu_max = 1e10;
    double split_train = 0.70;
    double split_val = 0.15;
    double split_test = 0.15;
    std::uint64_t seed = 1;
};

inline void validate(const train_config& c) {
    if (std::abs(c.split_train + c.split_val + c.split_test - 1.0) > 1e-9)
        throw invalid_config("train: split fractions must sum to 1");
    if (!(c.split_train > 0.5))
        throw invalid_config("train: training fraction must exceed one half");
    if (c.max_epochs < 1 || !(c.min_gradient > 0.0))
        throw invalid_config("train: bad epoch cap or gradient floor");
}

struct train_report {
    int epochs_run = 0;
    int best_epoch = 0;
    int n_params = 0;
    double gamma = 0.0; // effective parameter count at the last epoch
    stop_reason stopping = stop_reason::max_epochs;
    double final_train_mse = 0.0;
    double final_val_mse = 0.0;
    double final_test_mse = 0.0;
    double wall_time_s = 0.0;
    std::vector<double> val_mse_history;   // entry 0 is the initial point
    std::vector<double> train_sse_history; // one entry per accepted step
    std::vector<double> gamma_history;
    std::vector<double> grad_inf_history; // objective gradient at each epoch start
};

namespace detail {

// lower Cholesky in place; false when the matrix is not positive definite
inline bool cholesky(std::vector<double>& a, int n) {
    for (int i = 0; i < n; ++i) {
        for (int jj = 0; jj <= i; ++jj) {
            double s = a[static_cast<std::size_t>(i) * n + jj];
            for (int k = 0; k < jj; ++k)
                s -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(jj) * n + k];
            if (i == jj) {
                if (!(s > 0.0))
                    return false;
                a[static_cast<std::size_t>(i) * n + jj] = std::sqrt(s);
            } else {
                a[static_cast<std::size_t>(i) * n + jj] = s / a[static_cast<std::size_t>(jj) * n + jj];
            }
        }
    }
    return true;
}

inline void chol_solve(const std::vector<double>& l, int n, std::vector<double>& x) {
    for (int i = 0; i < n; ++i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k)
            s -= l[static_cast<std::size_t>(i) * n + k] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k)
            s -= l[static_cast<std::size_t>(k) * n + i] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
    }
}

// trace(A^-1) via the Frobenius norm of L^-1
inline double trace_inverse_from_chol(const std::vector<double>& l, int n) {
    std::vector<double> col(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int jj = 0; jj < n; ++jj) {
        std::fill(col.begin(), col.end(), 0.0);
        col[static_cast<std::size_t>(jj)] = 1.0;
        for (int i = jj; i < n; ++i) {
            double s = col[static_cast<std::size_t>(i)];
            for (int k = jj; k < i; ++k)
                s -= l[static_cast<std::size_t>(i) * n + k] * col[static_cast<std::size_t>(k)];
            col[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
        }
        for (int i = jj; i < n; ++i)
            acc += col[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(i)];
    }
    return acc;
}

inline double sse(const mlp_params& p, const dataset& d) {
    std::vector<std::vector<double>> acts;
    double s = 0.0;
    for (int i = 0; i < d.n_samples(); ++i) {
        forward_trace(p, d.x_row(i), acts);
        const double* tgt = d.t_row(i);
        for (int k = 0; k < d.n_out; ++k) {
            const double diff = acts.back()[static_cast<std::size_t>(k)] - tgt[k];
            s += diff * diff;
        }
    }
    return s;
}

inline double mse(const mlp_params& p, const dataset& d) {
    const int denom = d.n_samples() * d.n_out;
    return denom > 0 ? sse(p, d) / denom : 0.0;
}

inline dataset take_rows(const dataset& d, const std::vector<int>& rows, int from, int count) {
    dataset out;
    out.n_in = d.n_in;
    out.n_out = d.n_out;
    out.x.reserve(static_cast<std::size_t>(count) * d.n_in);
    out.t.reserve(static_cast<std::size_t>(count) * d.n_out);
    for (int i = from; i < from + count; ++i) {
        const int s = rows[static_cast<std::size_t>(i)];
        out.x.insert(out.x.end(), d.x_row(s), d.x_row(s) + d.n_in);
        out.t.insert(out.t.end(), d.t_row(s), d.t_row(s) + d.n_out);
    }
    return out;
}

} // namespace detail

/// Levenberg-Marquardt with Bayesian re-estimation of the data and prior
/// weighting. Returns the parameters of the epoch with the lowest validation
/// MSE together with the stopping bookkeeping.
inline std::pair<mlp_params, train_report> train_bayesian_lm(const mlp_params& start,
                                                             const dataset& full,
                                                             const train_config& cfg) {
    validate(cfg);
    if (full.n_in != start.layer_sizes[0] || full.n_out != start.layer_sizes.back())
        throw size_mismatch("train_bayesian_lm: dataset shape does not match network");
    const int n = full.n_samples();
    const int n_val = static_cast<int>(cfg.split_val * n);
    const int n_test = static_cast<int>(cfg.split_test * n);
    const int n_train = n - n_val - n_test;
    if (n_train < 1 || (cfg.split_val > 0.0 && n_val < 1) || (cfg.split_test > 0.0 && n_test < 1))
        throw empty_split(detail::strprintf("train_bayesian_lm: split of %d samples leaves an empty part", n));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng split_rng(cfg.seed, streams::net_split);
    shuffle(order, split_rng);
    const dataset tr = detail::take_rows(full, order, 0, n_train);
    const dataset va = detail::take_rows(full, order, n_train, n_val);
    const dataset te = detail::take_rows(full, order, n_train + n_val, n_test);

    const auto t0 = std::chrono::steady_clock::now();

    mlp_params p = start;
    const int np = p.n_params();
    const double n_errs = static_cast<double>(n_train) * p.layer_sizes.back();

    std::vector<double> j, e;
    detail::jacobian_and_errors(p, tr, j, e);
    double e_d = 0.0;
    for (double v : e)
        e_d += v * v;
    double e_w = 0.0;
    for (double v : p.w)
        e_w += v * v;

    double gamma = static_cast<double>(np);
    double beta = e_d > 0.0 ? (n_errs - gamma) / (2.0 * e_d) : 1.0;
    if (!(beta > 0.0) || !std::isfinite(beta))
        beta = 1.0;
    double alpha = e_w > 0.0 ? gamma / (2.0 * e_w) : 1.0;
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        alpha = 1.0;
    double f_obj = beta * e_d + alpha * e_w;
    double mu = cfg.mu_init;

    train_report rep;
    rep.n_params = np;
    rep.gamma = gamma;
    mlp_params best = p;
    double best_val = detail::mse(p, va);
    rep.val_mse_history.push_back(best_val);
    rep.best_epoch = 0;

    const std::size_t rows = e.size();
    std::vector<double> jj(static_cast<std::size_t>(np) * np);
    std::vector<double> je(static_cast<std::size_t>(np));
    std::vector<double> a(static_cast<std::size_t>(np) * np);
    std::vector<double> dx(static_cast<std::size_t>(np));

    const auto build_normal_eq = [&]() {
        std::fill(jj.begin(), jj.end(), 0.0);
        std::fill(je.begin(), je.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* jr = j.data() + r * np;
            const double er = e[r];
            for (int a_i = 0; a_i < np; ++a_i) {
                const double v = jr[a_i];
                if (v == 0.0)
                    continue;
                je[static_cast<std::size_t>(a_i)] += v * er;
                double* out = jj.data() + static_cast<std::size_t>(a_i) * np;
                for (int b_i = a_i; b_i < np; ++b_i)
                    out[b_i] += v * jr[b_i];
            }
        }
        for (int a_i = 0; a_i < np; ++a_i)
            for (int b_i = 0; b_i < a_i; ++b_i)
                jj[static_cast<std::size_t>(a_i) * np + b_i] =
                    jj[static_cast<std::size_t>(b_i) * np + a_i];
    };
    build_normal_eq();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double grad_inf = 0.0;
        for (int i = 0; i < np; ++i)
            grad_inf = std::max(grad_inf,
                                std::abs(2.0 * (beta * je[static_cast<std::size_t>(i)] +
                                                alpha * p.w[static_cast<std::size_t>(i)])));
        rep.grad_inf_history.push_back(grad_inf);
        if (grad_inf < cfg.min_gradient) {
            rep.stopping = stop_reason::min_gradient;
            break;
        }

        bool accepted = false;
        mlp_params cand = p;
        double e_d2 = 0.0, e_w2 = 0.0;
        while (mu <= cfg.mu_max) {
            for (int r = 0; r < np; ++r) {
                double* arow = a.data() + static_cast<std::size_t>(r) * np;
                const double* jrow = jj.data() + static_cast<std::size_t>(r) * np;
                for (int c = 0; c < np; ++c)
                    arow[c] = beta * jrow[c];
                arow[r] += alpha + mu;
                dx[static_cast<std::size_t>(r)] =
                    -(beta * je[static_cast<std::size_t>(r)] + alpha * p.w[static_cast<std::size_t>(r)]);
            }
            if (!detail::cholesky(a, np)) {
                mu *= cfg.mu_inc;
                continue;
            }
            detail::chol_solve(a, np, dx);
            for (int i = 0; i < np; ++i)
                cand.w[static_cast<std::size_t>(i)] = p.w[static_cast<std::size_t>(i)] + dx[static_cast<std::size_t>(i)];
            e_d2 = detail::sse(cand, tr);
            e_w2 = 0.0;
            for (double v : cand.w)
                e_w2 += v * v;
            const double f2 = beta * e_d2 + alpha * e_w2;
            // accept ties within the rounding floor of the objective sum, or the
            // evidence re-estimation cannot settle its last digits
            const double tol = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f_obj));
            if (std::isfinite(f2) && f2 <= f_obj + tol) {
                accepted = true;
                mu = std::max(mu * cfg.mu_dec, 1e-20);
                break;
            }
            mu *= cfg.mu_inc;
        }
        if (!accepted) {
            rep.stopping = stop_reason::mu_overflow;
            break;
        }

        p.w = cand.w;
        e_d = e_d2;
        e_w = e_w2;
        if (!std::isfinite(e_d) || !std::isfinite(e_w))
            throw divergent_training("train_bayesian_lm: loss is not finite");
        rep.epochs_run = epoch;

        detail::jacobian_and_errors(p, tr, j, e);
        build_normal_eq();

        if (alpha > 0.0) {
            for (int r = 0; r < np; ++r) {
                double* arow = a.data() + static_cast<std::size_t>(r) * np;
                const double* jrow = jj.data() + static_cast<std::size_t>(r) * np;
                for (int c = 0; c < np; ++c)
                    arow[c] = beta * jrow[c];
                arow[r] += alpha;
            }
            if (detail::cholesky(a, np))
                gamma = np - alpha * detail::trace_inverse_from_chol(a, np);
        } else {
            gamma = static_cast<double>(np);
        }
        alpha = e_w > 1e-300 ? gamma / (2.0 * e_w) : 1.0;
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            alpha = 1.0;
        beta = e_d > 1e-300 ? (n_errs - gamma) / (2.0 * e_d) : 1.0;
        if (!(beta > 0.0) || !std::isfinite(beta))
            beta = 1.0;
        f_obj = beta * e_d + alpha * e_w;

        rep.train_sse_history.push_back(e_d);
        rep.gamma_history.push_back(gamma);
        const double val = detail::mse(p, va);
        rep.val_mse_history.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = p;
            rep.best_epoch = epoch;
        }
    }
    if (rep.epochs_run == cfg.max_epochs && rep.stopping != stop_reason::mu_overflow &&
        rep.stopping != stop_reason::min_gradient)
        rep.stopping = stop_reason::max_epochs;

    rep.gamma = gamma;
    rep.final_train_mse = detail::mse(best, tr);
    rep.final_val_mse = best_val;
    rep.final_test_mse = detail::mse(best, te);
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(best), std::move(rep)};
}

/// Raw network outputs without the decision stage.
inline cvec equalize_soft(const mlp_params& p, const snapshot_matrix& y) {
    if (p.layer_sizes[0] != static_cast<int>(2 * y.rows()))
        throw size_mismatch("equalize_soft: network input width does not match array size");
    cvec soft(y.cols());
    std::vector<double> input(static_cast<std::size_t>(p.layer_sizes[0]));
    std::vector<std::vector<double>> acts;
    for (std::size_t s = 0; s < y.cols(); ++s) {
        for (std::size_t i = 0; i < y.rows(); ++i) {
            input[2 * i] = y(i, s).real();
            input[2 * i + 1] = y(i, s).imag();
        }
        detail::forward_trace(p, input.data(), acts);
        soft[s] = cplx(acts.back()[0], acts.back()[1]);
    }
    return soft;
}

/// Run the equalizer over a block and make hard QPSK decisions.
inline symbol_stream equalize(const mlp_params& p, const snapshot_matrix& y) {
    symbol_stream out;
    out.bits = qpsk_demodulate(equalize_soft(p, y));
    out.symbols = qpsk_modulate(out.bits).symbols;
    return out;
}

inline void save_mlp(const mlp_params& p, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw model_io_error("save_mlp: cannot open " + path);
    out << "fdxsic-mlp 1 " << to_string(p.hidden_act) << "\n";
    for (std::size_t i = 0; i < p.layer_sizes.size(); ++i)
        out << (i ? " " : "") << p.layer_sizes[i];
    out << "\n";
    char buf[64];
    for (double v : p.w) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
    }
    if (!out)
        throw model_io_error("save_mlp: write failed for " + path);
}

inline mlp_params load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw model_io_error("load_mlp: cannot open " + path);
    std::string magic, act;
    int version = 0;
    if (!(in >> magic >> version >> act) || magic != "fdxsic-mlp" || version != 1)
        throw model_io_error("load_mlp: unrecognized header in " + path);
    mlp_params p;
    if (act == "sigmoid_sym")
        p.hidden_act = activation::sigmoid_sym;
    else if (act == "relu")
        p.hidden_act = activation::relu;
    else
        throw model_io_error("load_mlp: unknown activation " + act);
    std::string line;
    std::getline(in, line);
    if (!std::getline(in, line))
        throw model_io_error("load_mlp: missing layer-size line");
    p.layer_sizes.clear();
    {
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && line[pos] == ' ')
                ++pos;
            if (pos >= line.size())
                break;
            std::size_t used = 0;
            p.layer_sizes.push_back(std::stoi(line.substr(pos), &used));
            pos += used;
        }
    }
    if (p.layer_sizes.size() < 2)
        throw model_io_error("load_mlp: layer-size line too short");
    p.w.resize(static_cast<std::size_t>(p.n_params()));
    for (double& v : p.w)
        if (!(in >> v))
            throw model_io_error("load_mlp: parameter list truncated");
    return p;
}

} // namespace fdxsic
