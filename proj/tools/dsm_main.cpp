// Command-line driver: environment construction, DP and TD runs, Monte Carlo
// oracles, zero-shot evaluation, transition recovery, and artifact
// validation. Every run echoes its resolved configuration, the tool version,
// and the seed into the output directory; rerunning from that file
// reproduces the artifacts byte for byte.

#include "dsm/dsm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string config_path;
    std::string env_name = "three_state_c1";
    std::string env_params_json = "{}";
    double gamma = 0.95;
    int m = 4;
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string out_dir = "out";
    std::string kernel_family = "rational_quadric_mixture";
    std::vector<double> alphas;
    double length_scale = 1.0;
    std::string sigma_policy = "median_heuristic";
    double sigma = 1.0;
};

void add_common_flags(CLI::App* cmd, CommonArgs* args) {
    cmd->add_option("--config", args->config_path, "JSON config file; flags override its fields");
    cmd->add_option("--env", args->env_name, "environment name");
    cmd->add_option("--env-params", args->env_params_json, "environment parameters as JSON");
    cmd->add_option("--gamma", args->gamma, "discount factor");
    cmd->add_option("--m", args->m, "model atoms per state");
    cmd->add_option("--seed", args->seed, "64-bit seed");
    cmd->add_option("--threads", args->threads, "worker threads");
    cmd->add_option("--out", args->out_dir, "output directory");
    cmd->add_option("--kernel", args->kernel_family, "state kernel family");
    cmd->add_option("--alphas", args->alphas, "rational quadric mixture exponents");
    cmd->add_option("--length-scale", args->length_scale, "gaussian kernel length scale");
    cmd->add_option("--sigma-policy", args->sigma_policy, "model kernel bandwidth policy");
    cmd->add_option("--sigma", args->sigma, "fixed model kernel bandwidth");
}

/// Layered config: file values first, command-line flags on top.
json resolve_config(const CLI::App& cmd, const CommonArgs& args) {
    json cfg = json::object();
    if (!args.config_path.empty()) {
        if (!fs::exists(args.config_path))
            throw MissingArtifactError("config file not found: " + args.config_path);
        cfg = read_json(args.config_path);
    }
    auto overlay = [&](const char* flag, const char* key, const json& value) {
        if (cmd.count(flag) > 0 || !cfg.contains(key)) cfg[key] = value;
    };
    overlay("--env", "env", json{{"name", args.env_name},
                                 {"params", json::parse(args.env_params_json)}});
    if (cmd.count("--env-params") > 0)
        cfg["env"]["params"] = json::parse(args.env_params_json);
    overlay("--gamma", "gamma", args.gamma);
    overlay("--m", "m", args.m);
    overlay("--seed", "seed", args.seed);
    overlay("--threads", "threads", args.threads);
    overlay("--out", "out", args.out_dir);
    json kernel{{"family", args.kernel_family}, {"length_scale", args.length_scale}};
    if (!args.alphas.empty()) kernel["alphas"] = args.alphas;
    overlay("--kernel", "kernel", kernel);
    if (cmd.count("--alphas") > 0) cfg["kernel"]["alphas"] = args.alphas;
    if (cmd.count("--length-scale") > 0) cfg["kernel"]["length_scale"] = args.length_scale;
    overlay("--sigma-policy", "model_kernel",
            json{{"sigma_policy", args.sigma_policy}, {"sigma", args.sigma}});
    if (cmd.count("--sigma") > 0) cfg["model_kernel"]["sigma"] = args.sigma;
    cfg["version"] = kVersion;
    return cfg;
}

struct Workbench {
    TabularMdp mdp;
    Policy policy;
    DiscountedMdp dm;
    GramCache gram;
    ModelKernelSpec mks;
    CostMatrix cost;
    json config;
    fs::path out;
};

StateKernelSpec kernel_from_config(const json& cfg) {
    StateKernelSpec spec;
    if (cfg.contains("kernel")) {
        const json& k = cfg.at("kernel");
        const std::string family = k.value("family", "rational_quadric_mixture");
        if (family == "rational_quadric_mixture") {
            spec.family = StateKernelFamily::rational_quadric_mixture;
        } else if (family == "gaussian") {
            spec.family = StateKernelFamily::gaussian;
        } else {
            throw ConfigError("unknown kernel family '" + family + "'");
        }
        if (k.contains("alphas")) spec.mixture_alphas = k.at("alphas").get<std::vector<double>>();
        spec.length_scale = k.value("length_scale", 1.0);
    }
    spec.validate();
    return spec;
}

ModelKernelSpec model_kernel_from_config(const json& cfg) {
    ModelKernelSpec mks;
    if (cfg.contains("model_kernel")) {
        const json& mk = cfg.at("model_kernel");
        const std::string policy = mk.value("sigma_policy", "median_heuristic");
        if (policy == "median_heuristic") {
            mks.sigma_policy = SigmaPolicy::median_heuristic;
        } else if (policy == "fixed") {
            mks.sigma_policy = SigmaPolicy::fixed;
        } else {
            throw ConfigError("unknown sigma policy '" + policy + "'");
        }
        mks.sigma = mk.value("sigma", 1.0);
    }
    mks.validate();
    return mks;
}

Workbench open_workbench(const CLI::App& cmd, const CommonArgs& args) {
    json cfg = resolve_config(cmd, args);
    const double gamma = cfg.at("gamma").get<double>();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    auto [mdp, policy] = env_from_config(cfg.at("env"));
    DiscountedMdp dm = build_ppi(mdp, policy, gamma);
    GramCache gram = build_gram(mdp.embedding, kernel_from_config(cfg));
    ModelKernelSpec mks = model_kernel_from_config(cfg);
    CostMatrix cost = cost_from_embedding(mdp.embedding);

    Workbench bench{std::move(mdp), std::move(policy), std::move(dm), std::move(gram),
                    mks,            std::move(cost),   cfg,           fs::path()};
    bench.out = fs::path(cfg.at("out").get<std::string>());
    fs::create_directories(bench.out);
    write_json((bench.out / "resolved_config.json").string(), cfg);
    return bench;
}

int fail_with(const std::string& kind, const std::string& message, int code) {
    json err{{"error", {{"kind", kind}, {"message", message}}}};
    std::cout << err.dump() << "\n";
    return code;
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const ConfigError& e) {
        return fail_with("configuration", e.what(), kExitConfig);
    } catch (const DomainError& e) {
        return fail_with("configuration", e.what(), kExitConfig);
    } catch (const MissingArtifactError& e) {
        return fail_with("missing_artifact", e.what(), kExitMissing);
    } catch (const NumericError& e) {
        return fail_with("numeric", e.what(), kExitNumeric);
    } catch (const json::exception& e) {
        return fail_with("configuration", e.what(), kExitConfig);
    } catch (const std::exception& e) {
        return fail_with("numeric", e.what(), kExitNumeric);
    }
}

json summary_header(const Workbench& bench) {
    return json{{"version", kVersion},
                {"seed", bench.config.at("seed").get<std::uint64_t>()},
                {"gamma", bench.config.at("gamma").get<double>()},
                {"env", bench.config.at("env").at("name").get<std::string>()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributional successor measure toolkit"};
    app.require_subcommand(1);

    // dp: converge the delta model by dynamic programming.
    auto dp_args = std::make_shared<CommonArgs>();
    auto dp_iters = std::make_shared<int>(0);
    auto dp_tol = std::make_shared<double>(1e-6);
    auto dp_mode = std::make_shared<std::string>("herding");
    auto dp_trace_states = std::make_shared<bool>(false);
    CLI::App* dp_cmd = app.add_subcommand("dp", "dynamic programming to the DSM fixed point");
    add_common_flags(dp_cmd, dp_args.get());
    dp_cmd->add_option("--iters", *dp_iters, "iteration budget (default from gamma)");
    dp_cmd->add_option("--tol", *dp_tol, "successive Wasserstein stopping tolerance");
    dp_cmd->add_option("--projection", *dp_mode, "projection mode: herding or resample");
    dp_cmd->add_flag("--per-state-trace", *dp_trace_states, "emit per-state distances");

    // td: sample-based temporal-difference training.
    auto td_args = std::make_shared<CommonArgs>();
    auto td_cfg_json = std::make_shared<std::string>("{}");
    auto td_steps = std::make_shared<long>(10000);
    auto td_nstep = std::make_shared<int>(5);
    auto td_lr = std::make_shared<double>(1e-2);
    auto td_lambda = std::make_shared<double>(0.01);
    auto td_batch = std::make_shared<int>(32);
    auto td_trace_every = std::make_shared<int>(1000);
    auto td_sweep = std::make_shared<std::string>("");
    auto td_ref = std::make_shared<bool>(false);
    CLI::App* td_cmd = app.add_subcommand("td", "train a delta model from sampled windows");
    add_common_flags(td_cmd, td_args.get());
    td_cmd->add_option("--steps", *td_steps, "gradient steps");
    td_cmd->add_option("--n-step", *td_nstep, "bootstrap window length");
    td_cmd->add_option("--learning-rate", *td_lr, "gradient step size");
    td_cmd->add_option("--polyak-lambda", *td_lambda, "target update rate");
    td_cmd->add_option("--batch-size", *td_batch, "windows per step");
    td_cmd->add_option("--trace-every", *td_trace_every, "trace cadence in steps");
    td_cmd->add_option("--nstep-sweep", *td_sweep, "sweep n over a range, e.g. 1..10");
    td_cmd->add_flag("--dp-reference", *td_ref, "track distance to a DP reference model");
    td_cmd->add_option("--td-config", *td_cfg_json, "additional TdConfig fields as JSON");

    // eval: zero-shot return distributions, risk reports, rankings.
    auto ev_args = std::make_shared<CommonArgs>();
    auto ev_models = std::make_shared<std::vector<std::string>>();
    auto ev_rewards = std::make_shared<std::vector<std::string>>();
    auto ev_state = std::make_shared<int>(0);
    auto ev_alpha = std::make_shared<double>(0.4);
    auto ev_oracle = std::make_shared<bool>(false);
    auto ev_ntraj = std::make_shared<int>(10000);
    CLI::App* ev_cmd = app.add_subcommand("eval", "zero-shot evaluation from model artifacts");
    add_common_flags(ev_cmd, ev_args.get());
    ev_cmd->add_option("--model", *ev_models, "model CSV artifact(s), name=path or path")
        ->expected(-1);
    ev_cmd->add_option("--reward", *ev_rewards, "reward names from the bank")->expected(-1);
    ev_cmd->add_option("--state", *ev_state, "evaluation source state");
    ev_cmd->add_option("--cvar-level", *ev_alpha, "CVaR level");
    ev_cmd->add_flag("--oracle", *ev_oracle, "score against a Monte Carlo oracle");
    ev_cmd->add_option("--n-traj", *ev_ntraj, "oracle trajectory count");

    // oracle: Monte Carlo occupancy and return particles.
    auto or_args = std::make_shared<CommonArgs>();
    auto or_state = std::make_shared<int>(0);
    auto or_ntraj = std::make_shared<int>(10000);
    auto or_horizon = std::make_shared<int>(0);
    auto or_reward = std::make_shared<std::string>("");
    CLI::App* or_cmd = app.add_subcommand("oracle", "Monte Carlo occupancy/return particles");
    add_common_flags(or_cmd, or_args.get());
    or_cmd->add_option("--state", *or_state, "source state");
    or_cmd->add_option("--n-traj", *or_ntraj, "trajectory count");
    or_cmd->add_option("--horizon", *or_horizon, "truncation horizon (default from gamma)");
    or_cmd->add_option("--reward", *or_reward, "reward name (default: first in bank)");

    // recover: successor-matrix round trip back to the one-step kernel.
    auto rec_args = std::make_shared<CommonArgs>();
    CLI::App* rec_cmd = app.add_subcommand("recover", "recover p_pi from the successor matrix");
    add_common_flags(rec_cmd, rec_args.get());

    // validate: check emitted artifact schemas.
    auto val_paths = std::make_shared<std::vector<std::string>>();
    CLI::App* val_cmd = app.add_subcommand("validate", "validate artifact schemas");
    val_cmd->add_option("paths", *val_paths, "CSV/JSON artifacts or run directories")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (dp_cmd->parsed()) {
        return run_guarded([&] {
            Workbench bench = open_workbench(*dp_cmd, *dp_args);
            const double gamma = bench.dm.gamma;
            DpOptions opts;
            opts.iters = *dp_iters > 0 ? *dp_iters : dp_default_iters(gamma) + 40;
            if (dp_cmd->count("--iters") > 0 && *dp_iters < 1)
                throw ConfigError("--iters must be positive");
            opts.tol = *dp_tol;
            if (*dp_mode == "herding") {
                opts.mode = ProjectionMode::herding;
            } else if (*dp_mode == "resample") {
                opts.mode = ProjectionMode::resample;
            } else {
                throw ConfigError("unknown projection mode '" + *dp_mode + "'");
            }
            opts.seed = bench.config.at("seed").get<std::uint64_t>();
            opts.threads = bench.config.at("threads").get<int>();
            opts.per_state_trace = *dp_trace_states;
            const int m = bench.config.at("m").get<int>();
            const DpResult res = dp_iterate(init_delta_model(bench.dm.n_states(), m, gamma),
                                            bench.dm, bench.gram, bench.mks, bench.cost, opts);
            write_model_csv((bench.out / "model.csv").string(), res.model);
            write_dp_trace_csv((bench.out / "trace.csv").string(), res.trace);
            if (*dp_trace_states) {
                std::vector<std::vector<std::string>> rows;
                for (std::size_t k = 0; k < res.per_state_distances.size(); ++k)
                    for (std::size_t x = 0; x < res.per_state_distances[k].size(); ++x)
                        rows.push_back({std::to_string(k), std::to_string(x),
                                        fmt_double(res.per_state_distances[k][x])});
                write_csv((bench.out / "per_state_trace.csv").string(), "dp_state_trace",
                          {"iteration", "state", "outer_distance"}, rows);
            }
            json summary = summary_header(bench);
            summary["m"] = m;
            summary["iterations"] = res.iterations;
            summary["converged"] = res.converged;
            summary["final_successive_wbar"] = res.trace.back().successive_wbar;
            summary["projection_residual"] = res.projection_residual;
            write_json((bench.out / "summary.json").string(), summary);
            std::cout << summary.dump() << "\n";
        });
    }

    if (td_cmd->parsed()) {
        return run_guarded([&] {
            Workbench bench = open_workbench(*td_cmd, *td_args);
            TdConfig cfg;
            cfg.gamma = bench.dm.gamma;
            cfg.m = bench.config.at("m").get<int>();
            cfg.seed = bench.config.at("seed").get<std::uint64_t>();
            cfg.threads = bench.config.at("threads").get<int>();
            cfg.steps = *td_steps;
            cfg.n_step = *td_nstep;
            cfg.learning_rate = *td_lr;
            cfg.polyak_lambda = *td_lambda;
            cfg.batch_size = *td_batch;
            cfg.trace_every = *td_trace_every;
            const json extra = json::parse(*td_cfg_json);
            if (extra.contains("init_scale")) cfg.init_scale = extra.at("init_scale").get<double>();
            if (bench.mks.sigma_policy == SigmaPolicy::fixed) {
                cfg.sigma_policy = SigmaPolicy::fixed;
                cfg.fixed_sigma = bench.mks.sigma;
            }
            cfg.validate();

            std::optional<DpResult> reference;
            if (*td_ref) {
                DpOptions dopts;
                dopts.iters = dp_default_iters(cfg.gamma) + 20;
                dopts.seed = cfg.seed;
                dopts.threads = cfg.threads;
                reference = dp_iterate(init_delta_model(bench.dm.n_states(), cfg.m, cfg.gamma),
                                       bench.dm, bench.gram, bench.mks, bench.cost, dopts);
                write_model_csv((bench.out / "dp_reference.csv").string(), reference->model);
            }

            auto run_once = [&](const TdConfig& run_cfg, const fs::path& dir) {
                fs::create_directories(dir);
                const TrainResult res =
                    train(bench.dm, run_cfg, bench.gram,
                          reference ? &reference->model : nullptr,
                          reference ? &bench.cost : nullptr);
                write_td_trace_csv((dir / "trace.csv").string(), res.trace);
                write_model_csv((dir / "model.csv").string(),
                                atoms_from_params(res.params));
                json summary = summary_header(bench);
                summary["m"] = run_cfg.m;
                summary["steps"] = run_cfg.steps;
                summary["n_step"] = run_cfg.n_step;
                summary["final_loss"] = res.trace.back().loss;
                summary["final_full_mmd"] = res.trace.back().full_mmd2;
                if (reference) {
                    summary["final_wbar_ref"] = res.trace.back().wbar_ref;
                    summary["dp_projection_residual"] = reference->projection_residual;
                }
                write_json((dir / "summary.json").string(), summary);
                return summary;
            };

            if (td_sweep->empty()) {
                const json summary = run_once(cfg, bench.out);
                std::cout << summary.dump() << "\n";
            } else {
                const auto sep = td_sweep->find("..");
                if (sep == std::string::npos)
                    throw ConfigError("--nstep-sweep expects lo..hi");
                const int lo = std::stoi(td_sweep->substr(0, sep));
                const int hi = std::stoi(td_sweep->substr(sep + 2));
                if (lo < 1 || hi < lo) throw ConfigError("--nstep-sweep expects 1 <= lo <= hi");
                json sweep = json::array();
                for (int n = lo; n <= hi; ++n) {
                    TdConfig run_cfg = cfg;
                    run_cfg.n_step = n;
                    sweep.push_back(run_once(run_cfg, bench.out / ("n" + std::to_string(n))));
                }
                json summary = summary_header(bench);
                summary["sweep"] = sweep;
                write_json((bench.out / "sweep_summary.json").string(), summary);
                std::cout << summary.dump() << "\n";
            }
        });
    }

    if (ev_cmd->parsed()) {
        return run_guarded([&] {
            Workbench bench = open_workbench(*ev_cmd, *ev_args);
            if (ev_models->empty())
                throw MissingArtifactError("eval requires at least one --model artifact");
            const double gamma = bench.dm.gamma;
            std::map<std::string, DeltaModel> models;
            for (const std::string& entry : *ev_models) {
                const auto eq = entry.find('=');
                const std::string name =
                    eq == std::string::npos ? fs::path(entry).stem().string()
                                            : entry.substr(0, eq);
                const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
                models.emplace(name, read_model_csv(path, gamma));
            }
            std::vector<std::string> reward_names = *ev_rewards;
            if (reward_names.empty())
                throw ConfigError("eval requires at least one --reward name");

            json report = summary_header(bench);
            report["state"] = *ev_state;
            json per_reward = json::object();
            for (const std::string& rname : reward_names) {
                if (!bench.mdp.reward_bank.count(rname))
                    throw ConfigError("reward '" + rname + "' not in the bank");
                const Vec& r = bench.mdp.reward_bank.at(rname);
                json entry = json::object();
                for (const auto& [mname, model] : models) {
                    const ReturnDistribution dist = returns_from_dsm(model, *ev_state, r);
                    write_returns_csv(
                        (bench.out / ("returns_" + mname + "_" + rname + ".csv")).string(), dist);
                    const RiskReport risk = risk_report(dist, {*ev_alpha});
                    json rj{{"mean", risk.mean},
                            {"cvar", {{std::to_string(*ev_alpha), risk.cvar_by_level.at(*ev_alpha)}}}};
                    if (*ev_oracle) {
                        const McOracleResult oracle = mc_oracle(
                            bench.dm, *ev_state, r, *ev_ntraj, mc_default_horizon(gamma),
                            bench.config.at("seed").get<std::uint64_t>(),
                            bench.config.at("threads").get<int>());
                        rj["cramer_to_oracle"] = cramer_distance(dist, oracle.returns);
                        rj["oracle_mean"] = particle_mean(oracle.returns);
                        rj["oracle_cvar"] = cvar(oracle.returns, *ev_alpha);
                    }
                    entry[mname] = rj;
                }
                // Rankings by mean and CVaR across the supplied models.
                const auto rankings = rank_policies(models, r, *ev_state,
                                                    {{CriterionSpec::Kind::mean, 0.0},
                                                     {CriterionSpec::Kind::cvar, *ev_alpha}});
                json rank_json = json::array();
                for (const auto& ranking : rankings) {
                    json rj{{"criterion", ranking.criterion}, {"ordering", json::array()}};
                    for (const auto& score : ranking.ordering)
                        rj["ordering"].push_back({{"policy", score.policy},
                                                  {"value", score.value},
                                                  {"tied_with_next", score.tied_with_next}});
                    rank_json.push_back(rj);
                }
                entry["rankings"] = rank_json;
                per_reward[rname] = entry;
            }
            report["rewards"] = per_reward;
            write_json((bench.out / "risk_report.json").string(), report);
            std::cout << report.dump() << "\n";
        });
    }

    if (or_cmd->parsed()) {
        return run_guarded([&] {
            Workbench bench = open_workbench(*or_cmd, *or_args);
            const double gamma = bench.dm.gamma;
            std::string rname = *or_reward;
            if (rname.empty()) rname = bench.mdp.reward_bank.begin()->first;
            if (!bench.mdp.reward_bank.count(rname))
                throw ConfigError("reward '" + rname + "' not in the bank");
            const int horizon = *or_horizon > 0 ? *or_horizon : mc_default_horizon(gamma);
            const McOracleResult res = mc_oracle(
                bench.dm, *or_state, bench.mdp.reward_bank.at(rname), *or_ntraj, horizon,
                bench.config.at("seed").get<std::uint64_t>(), bench.config.at("threads").get<int>());
            write_returns_csv((bench.out / "oracle_returns.csv").string(), res.returns);
            write_matrix_csv((bench.out / "oracle_occupancy.csv").string(), "occupancy_particles",
                             res.occupancy);
            json summary = summary_header(bench);
            summary["state"] = *or_state;
            summary["n_traj"] = *or_ntraj;
            summary["horizon"] = horizon;
            summary["reward"] = rname;
            summary["mean_return"] = particle_mean(res.returns);
            write_json((bench.out / "summary.json").string(), summary);
            std::cout << summary.dump() << "\n";
        });
    }

    if (rec_cmd->parsed()) {
        return run_guarded([&] {
            Workbench bench = open_workbench(*rec_cmd, *rec_args);
            const SuccessorMatrix sm = compute_sm(bench.dm);
            const RecoveredTransition rec = recover_transition(sm);
            write_matrix_csv((bench.out / "successor_matrix.csv").string(), "successor_matrix",
                             sm.psi);
            write_matrix_csv((bench.out / "recovered_p_pi.csv").string(), "transition_kernel",
                             rec.p_pi);
            json summary = summary_header(bench);
            summary["max_abs_error"] = (rec.p_pi - bench.dm.p_pi).cwiseAbs().maxCoeff();
            summary["condition_estimate"] = rec.condition_estimate;
            summary["renormalized"] = sm.renormalized;
            write_json((bench.out / "summary.json").string(), summary);
            std::cout << summary.dump() << "\n";
        });
    }

    if (val_cmd->parsed()) {
        return run_guarded([&] {
            // Known CSV schema -> required header. JSON artifacts must parse
            // and carry a version.
            const std::map<std::string, std::vector<std::string>> schemas{
                {"delta_model", {"state", "atom", "state_prime", "probability"}},
                {"dp_trace", {"iteration", "successive_wbar", "ref_wbar", "max_state"}},
                {"dp_state_trace", {"iteration", "state", "outer_distance"}},
                {"td_trace", {"step", "loss", "full_mmd", "wbar_ref"}},
                {"trajectories", {"trajectory_id", "t", "state"}},
                {"return_distribution", {"particle", "return"}}};
            std::vector<fs::path> files;
            for (const std::string& p : *val_paths) {
                if (!fs::exists(p)) throw MissingArtifactError("no such artifact: " + p);
                if (fs::is_directory(p)) {
                    for (const auto& entry : fs::directory_iterator(p))
                        if (entry.is_regular_file()) files.push_back(entry.path());
                } else {
                    files.push_back(p);
                }
            }
            json results = json::array();
            for (const fs::path& file : files) {
                if (file.extension() == ".json") {
                    const json j = read_json(file.string());
                    results.push_back({{"file", file.string()}, {"schema", "json"}, {"ok", true}});
                } else if (file.extension() == ".csv") {
                    const CsvFile csv = read_csv(file.string());
                    const auto space = csv.schema.find(' ');
                    const std::string name = csv.schema.substr(0, space);
                    bool ok = true;
                    std::string note;
                    auto it = schemas.find(name);
                    if (it == schemas.end()) {
                        // Matrix exports have generated headers; accept any.
                        ok = !csv.header.empty();
                        note = "unregistered schema";
                    } else if (csv.header != it->second) {
                        ok = false;
                        note = "header mismatch";
                    }
                    if (!ok) throw ConfigError("schema validation failed: " + file.string() +
                                               " (" + note + ")");
                    results.push_back({{"file", file.string()}, {"schema", name}, {"ok", true}});
                }
            }
            std::cout << json{{"validated", results}}.dump() << "\n";
        });
    }

    return 0;
}
