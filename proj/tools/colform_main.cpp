#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "colform/bench.hpp"
#include "colform/checkpoint.hpp"
#include "colform/mcts.hpp"
#include "colform/serialize.hpp"
#include "colform/solve.hpp"
#include "colform/train.hpp"

namespace fs = std::filesystem;
using namespace colform;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitOracleWarn = 3;

struct BudgetFlags {
    std::string mode = "wall";
    double amount = 60.0;

    Budget make() const {
        if (mode == "wall") return Budget::wall(amount);
        if (mode == "count") return Budget::of_count(static_cast<uint64_t>(amount));
        throw ConfigError("--budget-mode must be wall or count");
    }
};

Instance load_or_generate_instance(const std::string& instance_path,
                                   const std::string& domain, int n, uint64_t seed) {
    if (!instance_path.empty()) return read_instance(instance_path);
    return generate_instance(domain_from_name(domain), n, seed);
}

std::string slurp_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void print_report(const BenchResult& result) {
    std::printf("%-8s %6s %12s %10s %12s\n", "method", "n", "mean_ratio", "std", "reference");
    for (const auto& row : result.report) {
        std::printf("%-8s %6d %12.4f %10.4f %12s\n", method_name(row.method), row.n,
                    row.mean_ratio, row.std_ratio,
                    row.exact_reference ? "exact" : "best-known");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"colform: attention-generated candidate pools + exact weighted set packing"};
    app.require_subcommand(1);

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train a policy with REINFORCE");
    std::string tr_domain = "ridesharing", tr_out = "runs/train", tr_profile = "desk";
    std::string tr_config;
    int tr_n = 10, tr_epochs = -1, tr_iters = -1, tr_batch = -1, tr_eval = -1;
    double tr_tau = 0.05, tr_lr = -1.0, tr_alpha = 0.05;
    uint64_t tr_seed = 1;
    bool tr_resume = false, tr_count_mode = false;
    train_cmd->add_option("--config", tr_config, "JSON config file (flags override)");
    train_cmd->add_option("--domain", tr_domain, "ridesharing | team_formation");
    train_cmd->add_option("--n", tr_n, "agents per training instance");
    train_cmd->add_option("--epochs", tr_epochs, "number of epochs");
    train_cmd->add_option("--iters", tr_iters, "iterations per epoch");
    train_cmd->add_option("--batch", tr_batch, "instances per iteration");
    train_cmd->add_option("--eval-instances", tr_eval, "fixed eval set size");
    train_cmd->add_option("--tau", tr_tau, "entropy temperature");
    train_cmd->add_option("--lr", tr_lr, "Adam learning rate");
    train_cmd->add_option("--alpha", tr_alpha, "T-test significance");
    train_cmd->add_option("--seed", tr_seed, "training seed");
    train_cmd->add_option("--out", tr_out, "checkpoint/log directory");
    train_cmd->add_option("--profile", tr_profile, "desk | paper architecture");
    train_cmd->add_flag("--resume", tr_resume, "resume from out dir");
    train_cmd->add_flag("--deterministic-timing", tr_count_mode,
                        "log wall_ms as 0 for reproducible logs");

    // --- gen ---
    auto* gen_cmd = app.add_subcommand("gen", "generate a candidate pool from a checkpoint");
    std::string g_ckpt, g_instance, g_domain = "ridesharing", g_out = "pool.jsonl";
    std::string g_dump_instance;
    int g_n = 10;
    uint64_t g_seed = 0;
    BudgetFlags g_budget;
    gen_cmd->add_option("--checkpoint", g_ckpt, "trained checkpoint")->required();
    gen_cmd->add_option("--instance", g_instance, "instance JSON file");
    gen_cmd->add_option("--domain", g_domain, "domain when generating the instance");
    gen_cmd->add_option("--n", g_n, "agents when generating the instance");
    gen_cmd->add_option("--seed", g_seed, "instance seed / rollout stream seed");
    gen_cmd->add_option("--budget-mode", g_budget.mode, "wall | count");
    gen_cmd->add_option("--budget", g_budget.amount, "seconds (wall) or rollouts (count)");
    gen_cmd->add_option("--out", g_out, "pool JSONL output path");
    gen_cmd->add_option("--dump-instance", g_dump_instance, "also write the instance JSON");

    // --- solve ---
    auto* solve_cmd = app.add_subcommand("solve", "solve a pool as weighted set packing");
    std::string s_pool, s_mode = "packing", s_instance, s_out;
    int s_n = -1;
    bool s_bruteforce = false;
    BudgetFlags s_budget;
    solve_cmd->add_option("--pool", s_pool, "pool JSONL file")->required();
    solve_cmd->add_option("--mode", s_mode, "packing | partition");
    solve_cmd->add_option("--n", s_n, "number of agents (or use --instance)");
    solve_cmd->add_option("--instance", s_instance, "instance JSON (for n)");
    solve_cmd->add_flag("--bruteforce", s_bruteforce, "use the exhaustive reference solver");
    solve_cmd->add_option("--budget-mode", s_budget.mode, "wall | count");
    solve_cmd->add_option("--budget", s_budget.amount, "seconds or node expansions");
    solve_cmd->add_option("--out", s_out, "write packing JSON here (stdout otherwise)");

    // --- mcts ---
    auto* mcts_cmd = app.add_subcommand("mcts", "run an MCTS baseline");
    std::string m_instance, m_domain = "ridesharing", m_policy = "greedy", m_out;
    int m_n = 10;
    uint64_t m_seed = 0;
    double m_c = std::sqrt(2.0);
    BudgetFlags m_budget;
    mcts_cmd->add_option("--instance", m_instance, "instance JSON file");
    mcts_cmd->add_option("--domain", m_domain, "domain when generating the instance");
    mcts_cmd->add_option("--n", m_n, "agents when generating the instance");
    mcts_cmd->add_option("--seed", m_seed, "instance seed / search seed");
    mcts_cmd->add_option("--policy", m_policy, "greedy | adapted | random");
    mcts_cmd->add_option("--c", m_c, "UCB exploration constant");
    mcts_cmd->add_option("--budget-mode", m_budget.mode, "wall | count");
    mcts_cmd->add_option("--budget", m_budget.amount, "seconds or iterations");
    mcts_cmd->add_option("--out", m_out, "write packing JSON here (stdout otherwise)");

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "optimality-ratio experiment harness");
    std::string b_config, b_out, b_ckpt, b_budget_mode;
    double b_budget = -1.0;
    int b_threads = -1;
    uint64_t b_seed = 0;
    bool b_seed_set = false;
    bench_cmd->add_option("--config", b_config, "experiment config JSON")->required();
    bench_cmd->add_option("--out", b_out, "output directory (overrides config)");
    bench_cmd->add_option("--checkpoint", b_ckpt, "checkpoint (overrides config)");
    bench_cmd->add_option("--budget-mode", b_budget_mode, "wall | count (overrides config)");
    bench_cmd->add_option("--budget", b_budget, "budget override");
    bench_cmd->add_option("--threads", b_threads, "worker threads");
    bench_cmd->add_option("--seed", b_seed, "instance seed base override")
        ->each([&](const std::string&) { b_seed_set = true; });

    // --- diversity ---
    auto* div_cmd = app.add_subcommand("diversity", "compare pool diversity of two models");
    std::string d_a, d_b, d_instance, d_domain = "ridesharing", d_out = "diversity.csv";
    int d_n = 10, d_bins = 30;
    uint64_t d_seed = 0;
    BudgetFlags d_budget;
    div_cmd->add_option("--checkpoint-a", d_a, "first checkpoint")->required();
    div_cmd->add_option("--checkpoint-b", d_b, "second checkpoint")->required();
    div_cmd->add_option("--instance", d_instance, "instance JSON file");
    div_cmd->add_option("--domain", d_domain, "domain when generating the instance");
    div_cmd->add_option("--n", d_n, "agents when generating the instance");
    div_cmd->add_option("--seed", d_seed, "instance seed / rollout stream seed");
    div_cmd->add_option("--bins", d_bins, "histogram bins");
    div_cmd->add_option("--budget-mode", d_budget.mode, "wall | count");
    div_cmd->add_option("--budget", d_budget.amount, "seconds or rollouts per model");
    div_cmd->add_option("--out", d_out, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            TrainConfig cfg;
            if (!tr_config.empty()) {
                const auto j = nlohmann::json::parse(slurp_file(tr_config));
                if (j.contains("domain")) tr_domain = j["domain"];
                if (j.contains("n")) tr_n = j["n"];
                if (j.contains("epochs")) tr_epochs = j["epochs"];
                if (j.contains("iters")) tr_iters = j["iters"];
                if (j.contains("batch")) tr_batch = j["batch"];
                if (j.contains("eval_instances")) tr_eval = j["eval_instances"];
                if (j.contains("tau")) tr_tau = j["tau"];
                if (j.contains("lr")) tr_lr = j["lr"];
                if (j.contains("alpha")) tr_alpha = j["alpha"];
                if (j.contains("seed")) tr_seed = j["seed"];
                if (j.contains("profile")) tr_profile = j["profile"];
                if (j.contains("out")) tr_out = j["out"];
            }
            const Domain domain = domain_from_name(tr_domain);
            if (tr_profile == "desk") {
                cfg = TrainConfig::desk(domain, tr_n, tr_tau, tr_seed);
            } else if (tr_profile == "paper") {
                cfg.domain = domain;
                cfg.n_agents = tr_n;
                cfg.arch = nn::AttentionConfig::paper();
                cfg.tau = tr_tau;
                cfg.seed = tr_seed;
            } else {
                throw ConfigError("--profile must be desk or paper");
            }
            if (tr_epochs > 0) cfg.epochs = tr_epochs;
            if (tr_iters > 0) cfg.iters_per_epoch = tr_iters;
            if (tr_batch > 0) cfg.batch = tr_batch;
            if (tr_eval > 0) cfg.eval_instances = tr_eval;
            if (tr_lr > 0) cfg.lr = tr_lr;
            cfg.alpha = tr_alpha;
            cfg.out_dir = tr_out;
            cfg.deterministic_timing = tr_count_mode;
            const TrainResult r = tr_resume ? train_resume(cfg) : train(cfg);
            for (const auto& e : r.log) std::cout << epoch_log_json(e) << "\n";
            std::cerr << "checkpoints in " << cfg.out_dir << ", baseline swaps: "
                      << r.baseline_swaps << "\n";
        } else if (*gen_cmd) {
            const PolicyParams params = load_checkpoint(g_ckpt);
            const Instance inst =
                load_or_generate_instance(g_instance, g_domain, g_n, g_seed);
            if (params.domain != inst.domain)
                throw ConfigError("checkpoint domain does not match the instance");
            Rng rng(mix_seed(inst.seed, 0x9e4, g_seed));
            const CandidatePool pool = generate_pool(params, inst, g_budget.make(), rng);
            write_pool_file(g_out, pool.collectives);
            if (!g_dump_instance.empty()) write_instance(g_dump_instance, inst);
            std::cerr << "pool size " << pool.collectives.size() << " (rollouts "
                      << pool.stats.rollouts << ", duplicates " << pool.stats.duplicates
                      << ")\n";
        } else if (*solve_cmd) {
            const auto pool = read_pool_file(s_pool);
            int n = s_n;
            if (!s_instance.empty()) n = read_instance(s_instance).n();
            if (n <= 0) {
                for (const auto& c : pool)
                    for (int m : c.members) n = std::max(n, m + 1);
            }
            WspMode mode;
            if (s_mode == "packing")
                mode = WspMode::Packing;
            else if (s_mode == "partition")
                mode = WspMode::Partition;
            else
                throw ConfigError("--mode must be packing or partition");
            const WspInstance wsp = wsp_from_collectives(n, mode, pool);
            const Packing packing =
                s_bruteforce ? solve_bruteforce(wsp) : solve_bnb(wsp, s_budget.make());
            const std::string json = packing_to_json(packing);
            if (s_out.empty()) {
                std::cout << json << "\n";
            } else {
                std::ofstream(s_out) << json << "\n";
            }
        } else if (*mcts_cmd) {
            const Instance inst =
                load_or_generate_instance(m_instance, m_domain, m_n, m_seed);
            MctsConfig cfg;
            cfg.exploration_c = m_c;
            cfg.budget = m_budget.make();
            cfg.seed = m_seed;
            if (m_policy == "greedy")
                cfg.policy = MctsRollout::Greedy;
            else if (m_policy == "adapted")
                cfg.policy = MctsRollout::Adapted;
            else if (m_policy == "random")
                cfg.policy = MctsRollout::Random;
            else
                throw ConfigError("--policy must be greedy, adapted or random");
            const Packing packing = mcts_search(inst, cfg);
            const std::string json = packing_to_json(packing);
            if (m_out.empty()) {
                std::cout << json << "\n";
            } else {
                std::ofstream(m_out) << json << "\n";
            }
        } else if (*bench_cmd) {
            ExperimentConfig cfg = ExperimentConfig::from_json(slurp_file(b_config));
            if (!b_out.empty()) cfg.out_dir = b_out;
            if (!b_ckpt.empty()) cfg.checkpoint = b_ckpt;
            if (!b_budget_mode.empty()) {
                if (b_budget_mode == "wall")
                    cfg.budget_mode = Budget::Mode::Wall;
                else if (b_budget_mode == "count")
                    cfg.budget_mode = Budget::Mode::Count;
                else
                    throw ConfigError("--budget-mode must be wall or count");
            }
            if (b_budget > 0) cfg.budget = b_budget;
            if (b_threads > 0) cfg.threads = b_threads;
            if (b_seed_set) cfg.instance_seed_base = b_seed;
            const BenchResult result = run_experiment(cfg);
            print_report(result);
            if (!cfg.out_dir.empty())
                std::cerr << "runs written to " << cfg.out_dir << "/runs.csv\n";
            if (result.oracle_limit_hit) {
                std::cerr << "warning: exact reference out of reach for some instances; "
                             "best-known used\n";
                return kExitOracleWarn;
            }
        } else if (*div_cmd) {
            const Instance inst =
                load_or_generate_instance(d_instance, d_domain, d_n, d_seed);
            const DiversityResult result =
                diversity_report(d_a, d_b, inst, d_budget.make(), d_seed, d_bins);
            std::ofstream(d_out) << diversity_csv(result);
            std::cerr << "distinct collectives: a=" << result.a.distinct
                      << " b=" << result.b.distinct << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
