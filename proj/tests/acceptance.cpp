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
// Release gate. Each test case checks one numbered criterion end to end and
// prints a single PASS/FAIL line; run this binary directly to see them all.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sys/wait.h>

#include <fdxsic/experiments.hpp>
#include <fdxsic/scenario_io.hpp>

#include "oracles.hpp"

using namespace fdxsic;

namespace {

void criterion(int n, const char* desc, bool ok) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, desc);
    std::fflush(stdout);
    REQUIRE(ok);
}

std::size_t grid_index(double angle_deg) {
    return static_cast<std::size_t>(static_cast<int>(angle_deg) + 179);
}

const std::vector<double>& gains_for(const pattern_set& ps, beam_method m) {
    for (const auto& [method, gains] : ps.patterns)
        if (method == m)
            return gains;
    throw std::runtime_error("method not in pattern set");
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// snr where the log-BER curve crosses 1e-2, by linear interpolation in log10
double ber_crossing(const std::vector<double>& snr, const std::vector<double>& ber) {
    for (std::size_t i = 0; i + 1 < snr.size(); ++i) {
        if (ber[i] >= 1e-2 && ber[i + 1] <= 1e-2 && ber[i + 1] > 0.0) {
            const double l0 = std::log10(ber[i]);
            const double l1 = std::log10(ber[i + 1]);
            if (l0 == l1)
                return snr[i];
            return snr[i] + (snr[i + 1] - snr[i]) * (l0 - (-2.0)) / (l0 - l1);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

int run_cli(const std::string& env, const std::string& args) {
    const std::string cmd = env + " " + FDXSIC_CLI_PATH + " " + args;
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        n += c == '\n';
    return n;
}

} // namespace

TEST_CASE("criterion 1") {
    const mlp_params net = make_mlp({20, 2, 2}, activation::sigmoid_sym, 1);
    bool ok = net.n_params() == 48 && net.w.size() == 48;
    for (const sim_config& cfg : preset_configs())
        ok = ok && make_mlp({2 * cfg.geom.n_antennas, 2, 2}, activation::sigmoid_sym, 1)
                           .n_params() == 48;
    criterion(1, "architecture [20,2,2] reports exactly 48 parameters", ok);
}

TEST_CASE("criterion 2") {
    const sim_config& cfg = *find_preset("epa");
    const auto t0 = std::chrono::steady_clock::now();
    const pattern_set ps =
        run_beampatterns(cfg, {beam_method::lcmv_oracle, beam_method::mvdr}, 1);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::vector<double>& lcmv = gains_for(ps, beam_method::lcmv_oracle);
    const std::vector<double>& mvdr = gains_for(ps, beam_method::mvdr);
    bool ok = secs < 1.0;
    for (double ang : {60.0, 20.0, 80.0, -30.0}) {
        ok = ok && lcmv[grid_index(ang)] <= -80.0;
        ok = ok && mvdr[grid_index(ang)] <= -40.0;
    }
    ok = ok && std::abs(lcmv[grid_index(30.0)]) <= 1e-6;
    criterion(2, "lcmv nulls reach -80 dB and mvdr -40 dB on epa in under a second", ok);
}

TEST_CASE("criterion 3") {
    const pattern_set ps = run_beampatterns(
        *find_preset("epa"),
        {beam_method::conventional, beam_method::mvdr, beam_method::lcmv_oracle,
         beam_method::lcmv_evd},
        1);
    double worst = 0.0;
    for (const auto& [method, gains] : ps.patterns) {
        (void)method;
        for (std::size_t k = 0; k < ps.angle_grid_deg.size(); ++k) {
            double mirror = 180.0 - ps.angle_grid_deg[k];
            if (mirror > 180.0)
                mirror -= 360.0;
            worst = std::max(worst, std::abs(gains[k] - gains[grid_index(mirror)]));
        }
    }
    criterion(3, "patterns are mirror symmetric within 1e-9 dB for every method", worst <= 1e-9);
}

TEST_CASE("criterion 4") {
    std::mt19937_64 g(1234);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const oracles::random_scene r = oracles::make_random_scene(g);
        const cmat lemma = inv_by_lemma(r.sigma2, interference_steering(r.sc, r.geom),
                                        interference_powers_linear(r.sc));
        const cmat dense = oracles::gj_inverse(oracles::dense_covariance(r));
        worst = std::max(worst, oracles::rel_frobenius(lemma, dense));
    }
    criterion(4, "lemma inverse matches the dense inverse within 1e-10 over 100 scenarios",
              worst <= 1e-10);
}

TEST_CASE("criterion 5") {
    std::mt19937_64 g(4321);
    std::normal_distribution<double> n;
    bool ok = true;
    for (int rep = 0; rep < 100 && ok; ++rep) {
        const oracles::random_scene r = oracles::make_random_scene(g);
        const cmat s = oracles::dense_covariance(r);
        const cvec a = steering_vector(r.geom, r.sc.desired_angle_deg);
        const double na = static_cast<double>(a.size());
        const beam_weights w = mvdr_weights_from_inverse(
            inv_by_lemma(r.sigma2, interference_steering(r.sc, r.geom),
                         interference_powers_linear(r.sc)),
            a);
        const double p_opt = oracles::output_power(w.taps, s);
        for (int c = 0; c < 1000 && ok; ++c) {
            cvec comp = w.taps;
            cvec u(a.size());
            for (cplx& z : u)
                z = cplx(n(g), n(g));
            const cplx coeff = vdot(a, u);
            for (std::size_t i = 0; i < u.size(); ++i)
                comp[i] += u[i] - a[i] * coeff / na;
            ok = oracles::output_power(comp, s) >= p_opt * (1.0 - 1e-12);
        }
    }

    // the zero-interference special case collapses onto the conventional taps
    scenario clean;
    clean.desired_angle_deg = 30.0;
    clean.noise_power_db = -20.0;
    const array_geometry geom{10, 0.5};
    const beam_weights w0 = mvdr_weights_from_inverse(
        inv_by_lemma(db_to_linear(-20.0), interference_steering(clean, geom),
                     interference_powers_linear(clean)),
        steering_vector(geom, 30.0));
    const beam_weights conv = conventional_weights(geom, 30.0);
    for (std::size_t i = 0; i < w0.taps.size(); ++i)
        ok = ok && std::abs(w0.taps[i] - conv.taps[i]) <= 1e-10;

    criterion(5, "mvdr output power beats 1000 random distortionless competitors per scenario",
              ok);
}

TEST_CASE("criterion 6") {
    std::mt19937_64 g(99);
    std::normal_distribution<double> dist;
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> shape;
        if (rep == 0)
            shape = {20, 2, 2};
        else
            shape = {2 + static_cast<int>(g() % 7), 1 + static_cast<int>(g() % 6),
                     1 + static_cast<int>(g() % 3)};
        const mlp_params p = make_mlp(shape, activation::sigmoid_sym, 500 + rep);
        dataset d;
        d.n_in = shape.front();
        d.n_out = shape.back();
        const int samples = 3 + static_cast<int>(g() % 8);
        for (int s = 0; s < samples; ++s) {
            for (int i = 0; i < d.n_in; ++i)
                d.x.push_back(dist(g));
            for (int o = 0; o < d.n_out; ++o)
                d.t.push_back(dist(g));
        }
        const std::vector<double> ja = jacobian(p, d);
        const std::vector<double> jf = oracles::fd_jacobian(p, d);
        double scale = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < ja.size(); ++i) {
            scale = std::max(scale, std::abs(jf[i]));
            diff = std::max(diff, std::abs(ja[i] - jf[i]));
        }
        worst = std::max(worst, diff / scale);
    }
    criterion(6, "jacobian matches central differences within 1e-6 over 20 configurations",
              worst < 1e-6);
}

TEST_CASE("criterion 7") {
    experiment_plan plan;
    plan.cfg = *find_preset("epa");
    plan.snr_db = {-5.0, -4.0, -3.0, -2.0, -1.0, 0.0};
    plan.blocks = 600;
    plan.methods = {sic_method::lcmv_oracle, sic_method::ann};
    plan.seed = 1;

    const std::vector<ber_point> pts = run_ber(plan);
    std::vector<double> lcmv_ber, ann_ber;
    bool bits_ok = true;
    for (const ber_point& p : pts) {
        if (p.method == sic_method::lcmv_oracle)
            lcmv_ber.push_back(p.ber);
        else
            ann_ber.push_back(p.ber);
        bits_ok = bits_ok && p.bits >= 1000000 && p.std_err > 0.0;
    }
    const double x_lcmv = ber_crossing(plan.snr_db, lcmv_ber);
    const double x_ann = ber_crossing(plan.snr_db, ann_ber);
    std::printf("  ber 1e-2 crossings: lcmv %.3f dB, ann %.3f dB\n", x_lcmv, x_ann);
    const bool ok = bits_ok && std::isfinite(x_lcmv) && std::isfinite(x_ann) &&
                    std::abs(x_ann - x_lcmv) <= 1.0;
    criterion(7, "equalizer ber crossing within 1 dB of lcmv at 1e6 bits per point", ok);
}

TEST_CASE("criterion 8") {
    const std::vector<int> widths{1, 3, 4, 5, 6};
    std::vector<std::vector<double>> mse_by_width(widths.size());
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        experiment_plan plan;
        plan.cfg = *find_preset("epa");
        plan.seed = seed;
        const std::vector<sweep_result> rows = run_neuron_sweep(plan, widths);
        for (std::size_t i = 0; i < rows.size(); ++i)
            mse_by_width[i].push_back(rows[i].val_mse);
    }
    std::vector<double> means(widths.size());
    for (std::size_t i = 0; i < widths.size(); ++i)
        means[i] = mean(mse_by_width[i]);
    std::printf("  mean val mse by width:");
    for (std::size_t i = 0; i < widths.size(); ++i)
        std::printf(" w%d=%.4f", widths[i], means[i]);
    std::printf("\n");

    double lo = means[1], hi = means[1];
    for (std::size_t i = 1; i < widths.size(); ++i) {
        lo = std::min(lo, means[i]);
        hi = std::max(hi, means[i]);
    }
    const bool plateau = hi <= 1.2 * lo;
    const double gap = means[0] - means[1];
    const double sigma =
        std::sqrt(sample_var(mse_by_width[0]) / 5.0 + sample_var(mse_by_width[1]) / 5.0);
    const bool separated = gap > 3.0 * sigma;
    criterion(8, "widths 3-6 plateau within 20% and width 1 is worse at 3 sigma",
              plateau && separated);
}

TEST_CASE("criterion 9") {
    const std::vector<scenario_report> rows = run_scenarios(preset_configs(), 1, train_config{});
    bool ok = rows.size() == 7;
    const char* expected_labels[] = {"epa", "s1", "s2", "s3", "s4", "s5", "s6"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const train_report& r = rows[i].rep;
        ok = ok && rows[i].label == expected_labels[i];
        ok = ok && r.stopping == stop_reason::min_gradient;
        ok = ok && r.epochs_run >= 5 && r.epochs_run <= 100;
        ok = ok && r.gamma > 0.0 && r.gamma <= 48.0;
        ok = ok && r.n_params == 48;
        std::printf("  %-4s epochs=%-3d gamma=%.2f stop=%s\n", rows[i].label.c_str(),
                    r.epochs_run, r.gamma, to_string(r.stopping));
    }

    write_table1_csv("acc_table1.csv", rows);
    const std::string csv = oracles::slurp("acc_table1.csv");
    ok = ok && csv.rfind("label,epochs,best_epoch,n_params,gamma,stopping\n", 0) == 0;
    ok = ok && count_lines(csv) == 8;
    std::remove("acc_table1.csv");
    criterion(9, "all seven presets stop on min_gradient in 5..100 epochs with gamma <= 48", ok);
}

TEST_CASE("criterion 10") {
    experiment_plan plan;
    plan.cfg = *find_preset("epa");
    plan.cfg.sc.label = "clean";
    plan.cfg.sc.int_angles_deg.clear();
    plan.cfg.sc.int_powers_db.clear();
    plan.cfg.sc.path_delays_symbols.clear();
    plan.snr_db = {-3.0};
    plan.blocks = 600;
    plan.methods = {sic_method::conventional};
    plan.seed = 2;

    const std::vector<ber_point> pts = run_ber(plan);
    const ber_point& p = pts.at(0);
    const double ebn0 = db_to_linear(-3.0) / 2.0;
    const double expect = oracles::q_simpson(std::sqrt(2.0 * 10.0 * ebn0));
    const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(p.bits));
    std::printf("  measured %.5e vs analytic %.5e at %llu bits (3 se = %.2e)\n", p.ber, expect,
                static_cast<unsigned long long>(p.bits), 3.0 * se);
    const bool ok = p.bits >= 1000000 && std::abs(p.ber - expect) <= 3.0 * se;
    criterion(10, "interference-free conventional ber matches the analytic bound within 3 se",
              ok);
}

TEST_CASE("criterion 11") {
    const std::string base = "acc11";
    std::filesystem::remove_all(base);

    bool ok = true;
    const auto run = [&](const std::string& env, const std::string& args) {
        const int rc = run_cli(env, args + " >/dev/null 2>&1");
        ok = ok && rc == 0;
    };
    const auto same = [&](const std::string& f1, const std::string& f2) {
        const std::string a = oracles::slurp(f1);
        ok = ok && !a.empty() && a == oracles::slurp(f2);
    };

    const std::string ber_args =
        "--scenario epa --seed 7 --snr 0,2 --blocks 12 "
        "--methods conventional,mvdr,lcmv,lcmv_evd,ann,matched_bound "
        "--set plan.train_blocks=4";
    run("FDXSIC_THREADS=1", "ber " + ber_args + " --out " + base + "/a");
    run("FDXSIC_THREADS=4", "ber " + ber_args + " --out " + base + "/b");
    same(base + "/a/ber.csv", base + "/b/ber.csv");

    // a manifest re-run must reproduce the artifact byte for byte
    run("FDXSIC_THREADS=2",
        "ber --scenario " + base + "/a/manifest.cfg --out " + base + "/c");
    same(base + "/a/ber.csv", base + "/c/ber.csv");

    run("FDXSIC_THREADS=1",
        "beampattern --scenario epa --methods lcmv,mvdr,conventional --out " + base + "/p1");
    run("FDXSIC_THREADS=4",
        "beampattern --scenario epa --methods lcmv,mvdr,conventional --out " + base + "/p2");
    same(base + "/p1/pattern.csv", base + "/p2/pattern.csv");
    ok = ok && count_lines(oracles::slurp(base + "/p1/pattern.csv")) == 1 + 3 * 360;

    const std::string sweep_args = "--scenario epa --widths 1:2 --set plan.train_blocks=4";
    run("FDXSIC_THREADS=1", "sweep-neurons " + sweep_args + " --out " + base + "/w1");
    run("FDXSIC_THREADS=4", "sweep-neurons " + sweep_args + " --out " + base + "/w2");
    same(base + "/w1/sweep.csv", base + "/w2/sweep.csv");
    ok = ok && count_lines(oracles::slurp(base + "/w1/sweep.csv")) == 3;

    run("FDXSIC_THREADS=1", "scenarios --set plan.train_blocks=4 --out " + base + "/s1");
    run("FDXSIC_THREADS=4", "scenarios --set plan.train_blocks=4 --out " + base + "/s2");
    same(base + "/s1/table1.csv", base + "/s2/table1.csv");

    const std::string train_args = "--scenario epa --set plan.train_blocks=4 --set plan.width=3";
    run("FDXSIC_THREADS=1", "train " + train_args + " --out " + base + "/t1");
    run("FDXSIC_THREADS=4", "train " + train_args + " --out " + base + "/t2");
    same(base + "/t1/model.txt", base + "/t2/model.txt");

    criterion(11, "cli reruns with one seed are byte identical across worker counts", ok);
}

TEST_CASE("cli rejects bad usage with exit code 2 and names the flag") {
    const std::string base = "acc11_err";
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);

    REQUIRE(run_cli("FDXSIC_THREADS=1", "ber --scenario nosuchpreset --out " + base +
                                            "/x >/dev/null 2>" + base + "/err1.txt") == 2);
    REQUIRE(oracles::slurp(base + "/err1.txt").find("--scenario") != std::string::npos);

    REQUIRE(run_cli("FDXSIC_THREADS=1", "ber --scenario epa --out " + base +
                                            "/x --methods warp >/dev/null 2>" + base +
                                            "/err2.txt") == 2);
    REQUIRE(oracles::slurp(base + "/err2.txt").find("--methods") != std::string::npos);

    REQUIRE(run_cli("FDXSIC_THREADS=1",
                    "ber --scenario epa --out " + base + "/x --set plan.bogus=1 >/dev/null 2>" +
                        base + "/err3.txt") == 2);
    REQUIRE(oracles::slurp(base + "/err3.txt").find("--set") != std::string::npos);
}
