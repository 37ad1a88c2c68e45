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

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <fdxsic/fdxsic.hpp>

namespace {

using namespace fdxsic;

/// Usage failure bound to a specific flag; main reports it and exits 2.
struct usage_error {
    std::string msg;
};

[[noreturn]] void usage_fail(const std::string& flag, const std::string& what) {
    throw usage_error{flag + ": " + what};
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(detail::trim(s.substr(start)));
            break;
        }
        out.push_back(detail::trim(s.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw invalid_config("bad integer for " + key);
    return v;
}

/// Accepts "lo:hi" inclusive ranges and comma lists.
std::vector<int> parse_widths(const std::string& s) {
    std::vector<int> out;
    const std::size_t colon = s.find(':');
    if (colon != std::string::npos) {
        const int lo = static_cast<int>(detail::parse_int(s.substr(0, colon), "widths"));
        const int hi = static_cast<int>(detail::parse_int(s.substr(colon + 1), "widths"));
        if (lo < 1 || hi < lo)
            throw invalid_config("bad width range " + s);
        for (int w = lo; w <= hi; ++w)
            out.push_back(w);
        return out;
    }
    for (const std::string& tok : split_commas(s)) {
        const int w = static_cast<int>(detail::parse_int(tok, "widths"));
        if (w < 1)
            throw invalid_config("width must be at least 1");
        out.push_back(w);
    }
    return out;
}

/// Everything a subcommand needs beyond the scenario itself.
struct run_options {
    experiment_plan plan;
    std::vector<std::string> methods; // raw names, parsed per subcommand
    std::vector<int> widths = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int evd_blocks = 10;
    int net_width = 2;
    std::string net_activation = "sigmoid_sym";
};

bool apply_plan_key(run_options& opt, const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "plan.seed")
        opt.plan.seed = parse_u64(value, key);
    else if (key == "plan.snr_db")
        opt.plan.snr_db = detail::parse_list<double>(value, key, parse_double);
    else if (key == "plan.blocks")
        opt.plan.blocks = static_cast<int>(parse_int(value, key));
    else if (key == "plan.methods")
        opt.methods = split_commas(value);
    else if (key == "plan.widths")
        opt.widths = parse_widths(value);
    else if (key == "plan.train_blocks")
        opt.plan.train_blocks = static_cast<int>(parse_int(value, key));
    else if (key == "plan.drop_ratio")
        opt.plan.drop_ratio = parse_double(value, key);
    else if (key == "plan.train_noise_db")
        opt.plan.train_noise_db = parse_double(value, key);
    else if (key == "plan.evd_blocks")
        opt.evd_blocks = static_cast<int>(parse_int(value, key));
    else if (key == "plan.width")
        opt.net_width = static_cast<int>(parse_int(value, key));
    else if (key == "plan.activation")
        opt.net_activation = to_string(activation_from_string(detail::trim(value)));
    else if (key == "train.max_epochs")
        opt.plan.tcfg.max_epochs = static_cast<int>(parse_int(value, key));
    else if (key == "train.min_gradient")
        opt.plan.tcfg.min_gradient = parse_double(value, key);
    else if (key == "train.mu_init")
        opt.plan.tcfg.mu_init = parse_double(value, key);
    else if (key == "train.mu_inc")
        opt.plan.tcfg.mu_inc = parse_double(value, key);
    else if (key == "train.mu_dec")
        opt.plan.tcfg.mu_dec = parse_double(value, key);
    else if (key == "train.mu_max")
        opt.plan.tcfg.mu_max = parse_double(value, key);
    else
        return false;
    return true;
}

/// Resolves a preset name or scenario/manifest file into run options. Files
/// may carry plan.* and train.* keys (manifests do); those become defaults
/// that explicit flags and --set pairs still override.
run_options load_options(const std::string& scenario_arg) {
    run_options opt;
    if (const sim_config* p = find_preset(scenario_arg)) {
        opt.plan.cfg = *p;
        return opt;
    }
    const kv_list kv = parse_kv_file(scenario_arg);
    opt.plan.cfg = config_from_kv(kv);
    for (const auto& [k, v] : kv.items) {
        const bool plan_family = k.rfind("plan.", 0) == 0 || k.rfind("train.", 0) == 0;
        if (plan_family && !apply_plan_key(opt, k, v))
            throw invalid_config("unknown configuration key " + k);
        // run.* and artifact.* entries are provenance, not inputs
    }
    return opt;
}

std::filesystem::path prepare_out(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec && !std::filesystem::is_directory(out))
        usage_fail("--out", "cannot create directory " + out + ": " + ec.message());
    return {out};
}

template <typename T, typename Fn>
std::string join_names(const std::vector<T>& v, Fn name) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ',';
        s += name(v[i]);
    }
    return s;
}

void add_train_keys(kv_list& kv, const run_options& opt) {
    using detail::format_double;
    kv.set("plan.train_blocks", std::to_string(opt.plan.train_blocks));
    kv.set("plan.train_noise_db", format_double(opt.plan.train_noise_db));
    kv.set("train.max_epochs", std::to_string(opt.plan.tcfg.max_epochs));
    kv.set("train.min_gradient", format_double(opt.plan.tcfg.min_gradient));
    kv.set("train.mu_init", format_double(opt.plan.tcfg.mu_init));
    kv.set("train.mu_inc", format_double(opt.plan.tcfg.mu_inc));
    kv.set("train.mu_dec", format_double(opt.plan.tcfg.mu_dec));
    kv.set("train.mu_max", format_double(opt.plan.tcfg.mu_max));
}

void finish_manifest(const std::filesystem::path& dir, kv_list kv, const char* command) {
    kv.set("run.command", command);
    kv.set("artifact.version", version_string);
    const std::string path = (dir / "manifest.cfg").string();
    write_manifest(path, kv);
    std::printf("wrote %s\n", path.c_str());
}

int cmd_ber(run_options opt, const std::string& out) {
    if (!opt.methods.empty()) {
        opt.plan.methods.clear();
        for (const std::string& m : opt.methods)
            try {
                opt.plan.methods.push_back(sic_method_from_string(m));
            } catch (const invalid_config& e) {
                usage_fail("--methods", e.what());
            }
    }
    const auto dir = prepare_out(out);
    const std::vector<ber_point> points = run_ber(opt.plan);
    const std::string path = (dir / "ber.csv").string();
    write_ber_csv(path, points);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), points.size());

    kv_list kv = config_to_kv(opt.plan.cfg);
    kv.set("plan.seed", std::to_string(opt.plan.seed));
    kv.set("plan.snr_db", detail::format_double_list(opt.plan.snr_db));
    kv.set("plan.blocks", std::to_string(opt.plan.blocks));
    kv.set("plan.methods", join_names(opt.plan.methods, [](sic_method m) { return to_string(m); }));
    kv.set("plan.drop_ratio", detail::format_double(opt.plan.drop_ratio));
    add_train_keys(kv, opt);
    finish_manifest(dir, std::move(kv), "ber");
    return 0;
}

int cmd_beampattern(const run_options& opt, const std::string& out) {
    std::vector<beam_method> methods = {beam_method::conventional, beam_method::mvdr,
                                        beam_method::lcmv_oracle, beam_method::lcmv_evd};
    if (!opt.methods.empty()) {
        methods.clear();
        for (const std::string& m : opt.methods)
            try {
                methods.push_back(beam_method_from_string(m));
            } catch (const invalid_config& e) {
                usage_fail("--methods", e.what());
            }
    }
    const auto dir = prepare_out(out);
    const pattern_set ps =
        run_beampatterns(opt.plan.cfg, methods, opt.plan.seed, opt.plan.drop_ratio, opt.evd_blocks);
    const std::string path = (dir / "pattern.csv").string();
    write_pattern_csv(path, ps);
    std::printf("wrote %s (%zu rows)\n", path.c_str(),
                ps.patterns.size() * ps.angle_grid_deg.size());

    kv_list kv = config_to_kv(opt.plan.cfg);
    kv.set("plan.seed", std::to_string(opt.plan.seed));
    kv.set("plan.methods", join_names(methods, [](beam_method m) { return to_string(m); }));
    kv.set("plan.drop_ratio", detail::format_double(opt.plan.drop_ratio));
    kv.set("plan.evd_blocks", std::to_string(opt.evd_blocks));
    finish_manifest(dir, std::move(kv), "beampattern");
    return 0;
}

int cmd_sweep_neurons(const run_options& opt, const std::string& out) {
    const auto dir = prepare_out(out);
    const std::vector<sweep_result> rows = run_neuron_sweep(opt.plan, opt.widths);
    const std::string path = (dir / "sweep.csv").string();
    write_sweep_csv(path, rows);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());

    kv_list kv = config_to_kv(opt.plan.cfg);
    kv.set("plan.seed", std::to_string(opt.plan.seed));
    kv.set("plan.widths", detail::format_int_list(opt.widths));
    add_train_keys(kv, opt);
    finish_manifest(dir, std::move(kv), "sweep-neurons");
    return 0;
}

int cmd_scenarios(const run_options& opt, const std::string& out) {
    const auto dir = prepare_out(out);
    const std::vector<scenario_report> rows =
        run_scenarios(preset_configs(), opt.plan.seed, opt.plan.tcfg, opt.plan.train_blocks,
                      opt.plan.train_noise_db);
    const std::string path = (dir / "table1.csv").string();
    write_table1_csv(path, rows);
    for (const scenario_report& r : rows)
        std::printf("%-4s epochs=%-3d best=%-3d gamma=%.2f stop=%s time=%.3fs\n", r.label.c_str(),
                    r.rep.epochs_run, r.rep.best_epoch, r.rep.gamma, to_string(r.rep.stopping),
                    r.rep.wall_time_s);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());

    kv_list kv;
    kv.set("plan.seed", std::to_string(opt.plan.seed));
    add_train_keys(kv, opt);
    finish_manifest(dir, std::move(kv), "scenarios");
    return 0;
}

int cmd_train(const run_options& opt, const std::string& out) {
    const auto dir = prepare_out(out);
    const auto [params, rep] =
        run_train(opt.plan, opt.net_width, activation_from_string(opt.net_activation));
    const std::string path = (dir / "model.txt").string();
    save_mlp(params, path);
    std::printf("epochs=%d best=%d n_params=%d gamma=%.4f stop=%s\n", rep.epochs_run,
                rep.best_epoch, rep.n_params, rep.gamma, to_string(rep.stopping));
    std::printf("mse train=%.6e val=%.6e test=%.6e\n", rep.final_train_mse, rep.final_val_mse,
                rep.final_test_mse);
    std::printf("wrote %s\n", path.c_str());

    kv_list kv = config_to_kv(opt.plan.cfg);
    kv.set("plan.seed", std::to_string(opt.plan.seed));
    kv.set("plan.width", std::to_string(opt.net_width));
    kv.set("plan.activation", opt.net_activation);
    add_train_keys(kv, opt);
    finish_manifest(dir, std::move(kv), "train");
    return 0;
}

/// Raw flag values plus the Option handles needed to tell "provided" from
/// "default". Flags shared by several subcommands bind the same variable;
/// only the parsed subcommand ever writes it.
struct cli_args {
    std::string scenario = "epa";
    std::string out = "out";
    std::uint64_t seed = 1;
    std::vector<double> snr;
    int blocks = 50;
    std::string methods;
    std::string widths;
    std::vector<std::string> sets;

    std::vector<CLI::Option*> seed_opts, snr_opts, blocks_opts, methods_opts, widths_opts;

    static bool provided(const std::vector<CLI::Option*>& opts) {
        for (const CLI::Option* o : opts)
            if (o->count() > 0)
                return true;
        return false;
    }
};

int dispatch(const std::string& cmd, const cli_args& args) {
    run_options opt;
    try {
        opt = load_options(args.scenario);
    } catch (const error& e) {
        usage_fail("--scenario", e.what());
    }

    if (cli_args::provided(args.seed_opts))
        opt.plan.seed = args.seed;
    if (cli_args::provided(args.snr_opts))
        opt.plan.snr_db = args.snr;
    if (cli_args::provided(args.blocks_opts))
        opt.plan.blocks = args.blocks;
    if (cli_args::provided(args.methods_opts))
        opt.methods = split_commas(args.methods);
    if (cli_args::provided(args.widths_opts)) {
        try {
            opt.widths = parse_widths(args.widths);
        } catch (const error& e) {
            usage_fail("--widths", e.what());
        }
    }

    for (const std::string& pair : args.sets) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            usage_fail("--set", "expected key=value, got '" + pair + "'");
        const std::string k = detail::trim(pair.substr(0, eq));
        const std::string v = detail::trim(pair.substr(eq + 1));
        try {
            if (!set_config_key(opt.plan.cfg, k, v) && !apply_plan_key(opt, k, v))
                usage_fail("--set", "unknown key " + k);
        } catch (const error& e) {
            usage_fail("--set", e.what());
        }
    }

    if (cmd == "ber")
        return cmd_ber(std::move(opt), args.out);
    if (cmd == "beampattern")
        return cmd_beampattern(opt, args.out);
    if (cmd == "sweep-neurons")
        return cmd_sweep_neurons(opt, args.out);
    if (cmd == "scenarios")
        return cmd_scenarios(opt, args.out);
    return cmd_train(opt, args.out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"full-duplex self-interference cancellation laboratory"};
    app.set_version_flag("--version", fdxsic::version_string);
    app.require_subcommand(1);

    cli_args args;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", args.scenario, "preset name or scenario file")
            ->capture_default_str();
        sub->add_option("--out", args.out, "output directory")->capture_default_str();
        args.seed_opts.push_back(
            sub->add_option("--seed", args.seed, "master random seed")->capture_default_str());
        sub->add_option("--set", args.sets, "override, e.g. scenario.noise_power_db=-10");
    };

    CLI::App* ber = app.add_subcommand("ber", "Monte-Carlo bit error rates -> ber.csv");
    add_common(ber);
    args.snr_opts.push_back(
        ber->add_option("--snr", args.snr, "per-antenna SNR grid in dB, comma separated")
            ->delimiter(','));
    args.blocks_opts.push_back(
        ber->add_option("--blocks", args.blocks, "payload blocks per SNR point")
            ->capture_default_str());
    args.methods_opts.push_back(
        ber->add_option("--methods", args.methods, "canceller subset, comma separated"));

    CLI::App* pat = app.add_subcommand("beampattern", "spatial response grids -> pattern.csv");
    add_common(pat);
    args.methods_opts.push_back(
        pat->add_option("--methods", args.methods, "beamformer subset, comma separated"));

    CLI::App* sweep =
        app.add_subcommand("sweep-neurons", "hidden-width validation sweep -> sweep.csv");
    add_common(sweep);
    args.widths_opts.push_back(
        sweep->add_option("--widths", args.widths, "width list, e.g. 1:10 or 2,4,8"));

    CLI::App* scen =
        app.add_subcommand("scenarios", "training report over all presets -> table1.csv");
    add_common(scen);

    CLI::App* train = app.add_subcommand("train", "fit one equalizer -> model.txt");
    add_common(train);

    try {
        app.parse(argc, argv);
        return dispatch(app.get_subcommands().front()->get_name(), args);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const usage_error& e) {
        std::fprintf(stderr, "fdxsic: %s\n", e.msg.c_str());
        return 2;
    } catch (const fdxsic::error& e) {
        std::fprintf(stderr, "fdxsic: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fdxsic: internal error: %s\n", e.what());
        return 1;
    }
}
