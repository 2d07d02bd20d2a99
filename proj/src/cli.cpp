#include "btmg/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "btmg/baselines.hpp"
#include "btmg/config.hpp"
#include "btmg/harness.hpp"
#include "btmg/parallel.hpp"
#include "btmg/perf_model.hpp"
#include "btmg/records_io.hpp"

namespace fs = std::filesystem;

namespace btmg {

namespace {

// Common flags shared by the stages; a config file (or BTMG_ADAPT_CONFIG)
// loads first, explicit flags override it.
struct Common {
    std::string task = "obstacle";
    std::string profile = "sim";
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    int iters = 120, n_train = 20, n_test = 20, reps = 5, jobs = 1;

    CLI::Option *o_task = nullptr, *o_profile = nullptr, *o_config = nullptr, *o_out = nullptr;
    CLI::Option *o_seed = nullptr, *o_iters = nullptr, *o_n_train = nullptr;
    CLI::Option *o_n_test = nullptr, *o_reps = nullptr, *o_jobs = nullptr;

    void attach(CLI::App* s) {
        o_task = s->add_option("--task", task, "task id (obstacle|push)");
        o_profile = s->add_option("--profile", profile, "evaluation profile (sim|real_profile)");
        o_seed = s->add_option("--seed", seed, "master seed");
        o_iters = s->add_option("--iters", iters, "BO evaluations per variation");
        o_n_train = s->add_option("--n-train", n_train, "training variations per repetition");
        o_n_test = s->add_option("--n-test", n_test, "test variations per repetition");
        o_reps = s->add_option("--reps", reps, "protocol repetitions");
        o_jobs = s->add_option("--jobs", jobs, "parallel workers");
        o_config =
            s->add_option("--config", config, "INI config file")->envname("BTMG_ADAPT_CONFIG");
        o_out = s->add_option("--out", out, "output directory");
    }

    ExperimentConfig make_config() const {
        ExperimentConfig cfg;
        if (o_config->count()) cfg = load_config_file(config, std::move(cfg));
        if (o_task->count()) cfg.task.id = parse_task(task);
        if (o_profile->count()) cfg.task.profile = parse_profile(profile);
        if (o_seed->count()) cfg.master_seed = seed;
        if (o_iters->count()) cfg.bo.t_max = iters;
        if (o_n_train->count()) cfg.n_train = n_train;
        if (o_n_test->count()) cfg.n_test = n_test;
        if (o_reps->count()) cfg.repetitions = reps;
        if (o_jobs->count()) cfg.jobs = jobs;
        // short --iters runs shrink the initial design instead of erroring
        cfg.bo.n_init = std::min(cfg.bo.n_init, cfg.bo.t_max);
        cfg.validate();
        return cfg;
    }
};

void write_snapshot(const ExperimentConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / "config.snapshot");
    if (!out) throw std::runtime_error("cannot write " + (dir / "config.snapshot").string());
    out << config_snapshot(cfg);
}

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
    return out;
}

void write_params_csv(const fs::path& path, const std::vector<PolicyParams>& params, int dim) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int i = 0; i < dim; ++i) out << (i ? "," : "") << "theta_" << i;
    out << "\n";
    for (const auto& p : params) {
        for (int i = 0; i < dim; ++i) out << (i ? "," : "") << format_double(p.theta[i]);
        out << "\n";
    }
}

std::vector<PolicyParams> read_params_csv(const fs::path& path, int dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    ++line_no;
    std::string expected;
    for (int i = 0; i < dim; ++i) expected += (i ? "," : "") + ("theta_" + std::to_string(i));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected)
        throw std::runtime_error(path.string() + ": expected header '" + expected + "'");

    std::vector<PolicyParams> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        try {
            vals = parse_value_list(line);
        } catch (const std::exception& ex) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                                     ex.what());
        }
        if (static_cast<int>(vals.size()) != dim)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(dim) + " values");
        PolicyParams p;
        p.theta = Eigen::Map<Eigen::VectorXd>(vals.data(), dim);
        out.push_back(std::move(p));
    }
    return out;
}

// Rebuilds the trainer input from a `learn` output directory
// (variations.csv + history/<i>.csv).
TrainingData load_learn_dir(TaskId task, const fs::path& dir) {
    TrainingData data;
    data.task = task;
    data.variations = read_variations(dir / "variations.csv");
    for (std::size_t i = 0; i < data.variations.size(); ++i) {
        if (data.variations[i].task != task)
            throw std::runtime_error("variation file task does not match --task");
        const fs::path h = dir / "history" / (std::to_string(i) + ".csv");
        auto records = read_records(h);
        if (records.empty()) throw std::runtime_error(h.string() + ": empty history");
        std::size_t best = 0;
        for (std::size_t t = 1; t < records.size(); ++t)
            if (records[t].reward > records[best].reward) best = t;
        data.best_params.push_back(records[best].params);
        data.best_rewards.push_back(records[best].reward);
        data.records.insert(data.records.end(), records.begin(), records.end());
    }
    return data;
}

int run_sample(const ExperimentConfig& cfg, int n, const fs::path& out) {
    auto vars = cfg.task.sample(n, seeds::train_vars(cfg.master_seed, 0));
    write_snapshot(cfg, out);
    write_variations(out / "variations.csv", cfg.task.id, vars);
    std::cout << "sampled " << n << " " << task_name(cfg.task.id) << " variations -> "
              << (out / "variations.csv").string() << "\n";
    return 0;
}

int run_learn(const ExperimentConfig& cfg, const fs::path& variations_file, const fs::path& out) {
    auto vars = read_variations(variations_file);
    if (vars.empty()) throw std::runtime_error("no variations in " + variations_file.string());
    for (const auto& v : vars)
        if (v.task != cfg.task.id)
            throw std::runtime_error("variation file task does not match --task");

    write_snapshot(cfg, out);
    fs::create_directories(out / "history");
    const int n = static_cast<int>(vars.size());
    std::vector<BOResult> results(n);
    par::parallel_for_jobs(n, cfg.jobs, [&](int i) {
        BOConfig b = cfg.bo;
        b.seed = seeds::learn(cfg.master_seed, 0, i);
        results[i] = bo_learn(
            [&](const PolicyParams& th) { return cfg.task.evaluate(vars[i], th); },
            cfg.task.policy_bounds(), b);
    });

    write_variations(out / "variations.csv", cfg.task.id, vars);
    std::vector<double> bests;
    for (int i = 0; i < n; ++i) {
        write_records(out / "history" / (std::to_string(i) + ".csv"), cfg.task.id,
                      results[i].history);
        bests.push_back(results[i].best_reward);
    }
    std::cout << "learned " << n << " variations (" << cfg.bo.t_max
              << " evaluations each), median best reward " << percentile(bests, 0.5) << " -> "
              << (out / "history").string() << "\n";
    return 0;
}

int run_train_model(const ExperimentConfig& cfg, const fs::path& data_dir, const std::string& kind,
                    const fs::path& out) {
    const TrainingData data = load_learn_dir(cfg.task.id, data_dir);
    const Bounds vb = cfg.task.variation_bounds();
    const Bounds pb = cfg.task.policy_bounds();
    write_snapshot(cfg, out);

    if (kind == "perf" || kind == "all") {
        PerfModel m = train_perf(data, vb, pb, seeds::perf_train(cfg.master_seed, 0),
                                 cfg.perf_options());
        save_perf_bundle(m, out / "perf");
        std::cout << "perf: " << data.records.size() << " records, gp lengthscale "
                  << m.j_hat.hypers().lengthscale << ", svm "
                  << (m.constant_classifier ? "constant" : std::to_string(m.f_hat.n_support()))
                  << (m.constant_classifier ? "" : " support vectors") << ", mu " << m.mu << " -> "
                  << (out / "perf").string() << "\n";
    }
    if (kind == "direct" || kind == "all") {
        DirectModel d =
            train_direct(data, vb, pb, seeds::direct_train(cfg.master_seed, 0), cfg.gp);
        save_direct_bundle(d, out / "direct");
        std::cout << "direct: " << data.variations.size() << " pairs, " << d.outputs.size()
                  << " output regressors -> " << (out / "direct").string() << "\n";
    }
    return 0;
}

int run_query(const ExperimentConfig& cfg, const fs::path& model_dir,
              const std::string& variation_text, int starts, bool have_out, const fs::path& out) {
    const PerfModel m = load_perf_bundle(model_dir);
    const auto vals = parse_value_list(variation_text);
    const int want = task_shape(m.task).var_dim;
    if (static_cast<int>(vals.size()) != want)
        throw std::runtime_error("--variation needs " + std::to_string(want) + " values for " +
                                 task_name(m.task));
    TaskVariation v;
    v.task = m.task;
    v.v = Eigen::Map<const Eigen::VectorXd>(vals.data(), want);

    const TrainingData data = training_data_from_model(m);
    const QueryResult q =
        query(m, v, data, starts, seeds::method_query(cfg.master_seed, 0, 0, Method::perf));

    std::cout << "theta_hat:";
    for (int i = 0; i < q.theta_hat.theta.size(); ++i)
        std::cout << " " << format_double(q.theta_hat.theta[i]);
    std::cout << "\npredicted_reward: " << format_double(q.predicted_reward) << "\n";
    std::cout << "predicted_feasible: " << (q.predicted_feasible ? 1 : 0) << "\n";
    std::cout << "surrogate_value: " << format_double(q.surrogate_value) << "\n";
    if (q.fallback_flag)
        std::cout << "note: no start ended hard-feasible; best soft endpoint returned\n";
    if (q.extrapolation_warning)
        std::cout << "warning: variation lies outside the training variation bounds\n";

    if (have_out) {
        write_snapshot(cfg, out);
        write_params_csv(out / "theta.csv", {q.theta_hat},
                         static_cast<int>(q.theta_hat.theta.size()));
    }
    return 0;
}

int run_evaluate(const ExperimentConfig& cfg, const fs::path& variations_file,
                 const fs::path& params_file, const fs::path& out) {
    auto vars = read_variations(variations_file);
    for (const auto& v : vars)
        if (v.task != cfg.task.id)
            throw std::runtime_error("variation file task does not match --task");
    auto params = read_params_csv(params_file, task_shape(cfg.task.id).theta_dim);
    if (vars.empty() || params.empty()) throw std::runtime_error("nothing to evaluate");
    if (vars.size() == 1 && params.size() > 1) vars.assign(params.size(), vars[0]);
    if (params.size() == 1 && vars.size() > 1) params.assign(vars.size(), params[0]);
    if (vars.size() != params.size())
        throw std::runtime_error("variation/params row counts differ (" +
                                 std::to_string(vars.size()) + " vs " +
                                 std::to_string(params.size()) + ")");

    std::vector<EvalRecord> records;
    int feasible = 0;
    std::vector<double> rewards;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        records.push_back(cfg.task.evaluate(vars[i], params[i]));
        feasible += records.back().feasible ? 1 : 0;
        rewards.push_back(records.back().reward);
    }
    write_snapshot(cfg, out);
    write_records(out / "records.csv", cfg.task.id, records);
    std::cout << "evaluated " << records.size() << " executions: " << feasible << "/"
              << records.size() << " feasible, median reward " << percentile(rewards, 0.5)
              << " -> " << (out / "records.csv").string() << "\n";
    return 0;
}

void print_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::cout << in.rdbuf();
}

int run_report(const ExperimentConfig& cfg, const fs::path& raw_path, const fs::path& out) {
    const ExperimentReport report = read_raw_csv(raw_path);
    write_snapshot(cfg, out);
    write_report_files(out, report);
    print_file(out / "report.txt");
    return 0;
}

int run_reproduce(const ExperimentConfig& cfg, const fs::path& out) {
    run_experiment(cfg, out);
    print_file(out / "results" / "report.txt");
    return 0;
}

}  // namespace

int cli_dispatch(std::vector<std::string> args) {
    CLI::App app{"task-variation policy adaptation toolkit"};
    app.require_subcommand(1);

    Common c_sample, c_learn, c_train, c_query, c_eval, c_report, c_repro;

    CLI::App* sample = app.add_subcommand("sample", "draw task variations to CSV");
    c_sample.attach(sample);
    int sample_n = 20;
    sample->add_option("--n", sample_n, "number of variations");

    CLI::App* learn = app.add_subcommand("learn", "run per-variation BO, write histories");
    c_learn.attach(learn);
    std::string learn_vars;
    learn->add_option("--variations", learn_vars, "variation CSV file")->required();

    CLI::App* train = app.add_subcommand("train-model", "fit model bundles from BO histories");
    c_train.attach(train);
    std::string train_data, train_kind = "all";
    train->add_option("--data", train_data, "learn output directory")->required();
    train->add_option("--kind", train_kind, "perf|direct|all")
        ->check(CLI::IsMember({"perf", "direct", "all"}));

    CLI::App* query_cmd = app.add_subcommand("query", "policy parameters for one variation");
    c_query.attach(query_cmd);
    std::string query_model, query_var;
    int query_starts = 0;
    query_cmd->add_option("--model", query_model, "perf bundle directory")->required();
    query_cmd->add_option("--variation", query_var, "comma-separated variation values")
        ->required();
    CLI::Option* o_starts =
        query_cmd->add_option("--starts", query_starts, "optimizer restarts");

    CLI::App* eval = app.add_subcommand("evaluate", "execute policy parameters in the simulator");
    c_eval.attach(eval);
    std::string eval_vars, eval_params;
    eval->add_option("--variations", eval_vars, "variation CSV file")->required();
    eval->add_option("--params", eval_params, "policy parameter CSV file")->required();

    CLI::App* report = app.add_subcommand("report", "summarize a raw results file");
    c_report.attach(report);
    std::string report_raw;
    report->add_option("--raw", report_raw, "results/raw.csv from a previous run")->required();

    CLI::App* repro = app.add_subcommand("reproduce", "full train/test protocol for one task");
    c_repro.attach(repro);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp&) {
        CLI::App* h = &app;
        while (!h->get_subcommands().empty()) h = h->get_subcommands().front();
        std::cout << h->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "btmg-adapt: " << e.what() << "\n";
        std::cerr << "run 'btmg-adapt --help' for usage\n";
        return 1;
    }

    std::string stage = "unknown";
    try {
        if (sample->parsed()) {
            stage = "sample";
            return run_sample(c_sample.make_config(), sample_n, c_sample.out);
        }
        if (learn->parsed()) {
            stage = "learn";
            return run_learn(c_learn.make_config(), learn_vars, c_learn.out);
        }
        if (train->parsed()) {
            stage = "train-model";
            return run_train_model(c_train.make_config(), train_data, train_kind, c_train.out);
        }
        if (query_cmd->parsed()) {
            stage = "query";
            ExperimentConfig cfg = c_query.make_config();
            const int starts = o_starts->count() ? query_starts : cfg.query_starts;
            return run_query(cfg, query_model, query_var, starts,
                             c_query.o_out->count() != 0, c_query.out);
        }
        if (eval->parsed()) {
            stage = "evaluate";
            return run_evaluate(c_eval.make_config(), eval_vars, eval_params, c_eval.out);
        }
        if (report->parsed()) {
            stage = "report";
            return run_report(c_report.make_config(), report_raw, c_report.out);
        }
        if (repro->parsed()) {
            stage = "reproduce";
            return run_reproduce(c_repro.make_config(), c_repro.out);
        }
    } catch (const std::exception& ex) {
        std::cerr << "btmg-adapt " << stage << ": " << ex.what() << "\n";
        return 2;
    }
    std::cerr << "btmg-adapt: no subcommand\n";
    return 1;
}

}  // namespace btmg
