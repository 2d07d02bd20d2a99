#include "btmg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "btmg/baselines.hpp"
#include "btmg/config.hpp"
#include "btmg/parallel.hpp"
#include "btmg/records_io.hpp"
#include "btmg/rng.hpp"

namespace fs = std::filesystem;

namespace btmg {

namespace seeds {

// Salts keep the derivation streams disjoint; method queries use 1..5.
std::uint64_t train_vars(std::uint64_t master, int rep) { return mix_seed(master, rep, 0, 101); }
std::uint64_t test_vars(std::uint64_t master, int rep, std::uint64_t attempt) {
    return mix_seed(master, rep, attempt, 102);
}
std::uint64_t learn(std::uint64_t master, int rep, int var_idx) {
    return mix_seed(master, rep, var_idx, 103);
}
std::uint64_t perf_train(std::uint64_t master, int rep) { return mix_seed(master, rep, 0, 104); }
std::uint64_t direct_train(std::uint64_t master, int rep) { return mix_seed(master, rep, 0, 105); }
std::uint64_t method_query(std::uint64_t master, int rep, int var_idx, Method m) {
    return mix_seed(master, rep, var_idx, 1 + static_cast<std::uint64_t>(m));
}

}  // namespace seeds

namespace {

bool same_variation(const TaskVariation& a, const TaskVariation& b) {
    if (a.v.size() != b.v.size()) return false;
    for (int i = 0; i < a.v.size(); ++i)
        if (a.v[i] != b.v[i]) return false;
    return true;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string fmt(const char* format, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::learned: return "learned";
        case Method::perf: return "perf";
        case Method::nearest_neighbor: return "nearest_neighbor";
        case Method::direct: return "direct";
        case Method::single_policy: return "single_policy";
    }
    throw std::logic_error("bad method enum");
}

Method parse_method(const std::string& name) {
    for (Method m : kAllMethods)
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method '" + name + "'");
}

PerfOptions ExperimentConfig::perf_options() const {
    PerfOptions o;
    o.mu_factor = mu_factor;
    o.svm_c = svm_c;
    o.svm_gamma = svm_gamma;
    o.gp = gp;
    o.svm = svm;
    return o;
}

void ExperimentConfig::validate() const {
    if (n_train < 1) throw std::invalid_argument("n_train must be >= 1");
    if (n_test < 1) throw std::invalid_argument("n_test must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    if (methods.empty()) throw std::invalid_argument("methods must not be empty");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i] == methods[j])
                throw std::invalid_argument("duplicate method '" + method_name(methods[i]) + "'");
    if (svm_c <= 0.0) throw std::invalid_argument("svm c must be positive");
    if (mu_factor < 0.0) throw std::invalid_argument("mu_factor must be >= 0");
    if (query_starts < 1) throw std::invalid_argument("query_starts must be >= 1");
    bo.validate();
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::string> report_metric_labels(TaskId task) {
    if (task == TaskId::obstacle) return {"reward", "finish_time"};
    return {"pos_error", "ori_error"};
}

double report_metric_value(TaskId task, std::size_t metric_idx, const EvalRecord& rec) {
    if (task == TaskId::obstacle) {
        if (metric_idx == 0) return rec.reward;
        return rec.metrics[0];  // finish_time
    }
    return rec.metrics[metric_idx];  // pos_error, ori_error
}

std::vector<MethodSummary> summarize(const ExperimentReport& report) {
    const auto labels = report_metric_labels(report.task);
    std::vector<MethodSummary> out;
    for (Method m : report.methods) {
        MethodSummary s;
        s.method = m;
        std::vector<const RawRow*> rows;
        for (const auto& r : report.rows)
            if (r.method == m) rows.push_back(&r);

        int feas = 0;
        for (const auto* r : rows) feas += r->record.feasible ? 1 : 0;
        s.success_pct = rows.empty() ? 0.0 : 100.0 * feas / static_cast<double>(rows.size());

        for (int rep = 0; rep < report.repetitions; ++rep) {
            int total = 0, ok = 0;
            for (const auto* r : rows)
                if (r->rep == rep) {
                    ++total;
                    ok += r->record.feasible ? 1 : 0;
                }
            s.success_by_rep.push_back(total ? 100.0 * ok / static_cast<double>(total) : 0.0);
        }

        for (std::size_t k = 0; k < labels.size(); ++k) {
            MetricSummary ms;
            std::vector<double> all, feasible_only;
            for (const auto* r : rows) {
                const double v = report_metric_value(report.task, k, r->record);
                all.push_back(v);
                if (r->record.feasible) feasible_only.push_back(v);
            }
            if (!all.empty()) {
                ms.median = percentile(all, 0.5);
                ms.p25 = percentile(all, 0.25);
                ms.p75 = percentile(all, 0.75);
            }
            ms.has_feasible = !feasible_only.empty();
            if (ms.has_feasible) ms.median_feasible = percentile(feasible_only, 0.5);
            s.metrics.push_back(ms);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_raw_csv(const fs::path& path, const ExperimentReport& report) {
    auto out = open_out(path);
    const TaskShape& shape = task_shape(report.task);
    out << "#task=" << task_name(report.task) << "\n";
    out << "#profile=" << profile_name(report.profile) << "\n";
    out << "#master_seed=" << report.master_seed << "\n";
    out << "#config=" << report.config_hash << "\n";
    out << "#n_test=" << report.n_test << "\n";
    out << "#repetitions=" << report.repetitions << "\n";
    out << "#methods=";
    for (std::size_t i = 0; i < report.methods.size(); ++i)
        out << (i ? "," : "") << method_name(report.methods[i]);
    out << "\n";

    out << "rep,var_idx,method";
    for (int i = 0; i < shape.var_dim; ++i) out << ",v_" << i;
    for (int i = 0; i < shape.theta_dim; ++i) out << ",theta_" << i;
    out << ",reward,feasible";
    for (const auto& name : shape.metric_names) out << "," << name;
    out << "\n";

    for (const auto& r : report.rows) {
        out << r.rep << "," << r.var_idx << "," << method_name(r.method);
        for (int i = 0; i < shape.var_dim; ++i) out << "," << format_double(r.record.variation.v[i]);
        for (int i = 0; i < shape.theta_dim; ++i)
            out << "," << format_double(r.record.params.theta[i]);
        out << "," << format_double(r.record.reward) << "," << (r.record.feasible ? 1 : 0);
        for (double v : r.record.metrics) out << "," << format_double(v);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ExperimentReport read_raw_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    ExperimentReport rep;
    std::string line;
    int line_no = 0;
    bool saw_task = false;

    auto fail = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    // provenance comments
    while (in.peek() == '#') {
        std::getline(in, line);
        ++line_no;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw fail("malformed provenance line");
        const std::string key = line.substr(1, eq - 1);
        const std::string value = line.substr(eq + 1);
        if (key == "task") {
            rep.task = parse_task(value);
            saw_task = true;
        } else if (key == "profile") {
            rep.profile = parse_profile(value);
        } else if (key == "master_seed") {
            rep.master_seed = std::stoull(value);
        } else if (key == "config") {
            rep.config_hash = value;
        } else if (key == "n_test") {
            rep.n_test = std::stoi(value);
        } else if (key == "repetitions") {
            rep.repetitions = std::stoi(value);
        } else if (key == "methods") {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) rep.methods.push_back(parse_method(item));
        } else {
            throw fail("unknown provenance key '" + key + "'");
        }
    }
    if (!saw_task) throw std::runtime_error(path.string() + ": missing #task line");

    const TaskShape& shape = task_shape(rep.task);
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    ++line_no;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const std::size_t expect = 3 + static_cast<std::size_t>(shape.var_dim) +
                                   static_cast<std::size_t>(shape.theta_dim) + 2 +
                                   shape.metric_names.size();
        if (cells.size() != expect)
            throw fail("expected " + std::to_string(expect) + " cells, got " +
                       std::to_string(cells.size()));

        RawRow row;
        std::size_t c = 0;
        try {
            row.rep = std::stoi(cells[c++]);
            row.var_idx = std::stoi(cells[c++]);
            row.method = parse_method(cells[c++]);
            row.record.variation.task = rep.task;
            row.record.variation.v.resize(shape.var_dim);
            for (int i = 0; i < shape.var_dim; ++i)
                row.record.variation.v[i] = parse_double(cells[c++]);
            row.record.params.theta.resize(shape.theta_dim);
            for (int i = 0; i < shape.theta_dim; ++i)
                row.record.params.theta[i] = parse_double(cells[c++]);
            row.record.reward = parse_double(cells[c++]);
            if (cells[c] != "0" && cells[c] != "1") throw std::invalid_argument("feasible flag");
            row.record.feasible = cells[c++] == "1";
            for (std::size_t i = 0; i < shape.metric_names.size(); ++i)
                row.record.metrics.push_back(parse_double(cells[c++]));
        } catch (const std::exception& ex) {
            throw fail(ex.what());
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

namespace {

void write_report_txt(const fs::path& path, const ExperimentReport& report,
                      const std::vector<MethodSummary>& summary) {
    auto out = open_out(path);
    const auto labels = report_metric_labels(report.task);
    out << "task: " << task_name(report.task) << "  profile: " << profile_name(report.profile)
        << "  seed: " << report.master_seed << "  config: " << report.config_hash << "\n";
    out << "repetitions: " << report.repetitions << "  test variations per rep: " << report.n_test
        << "\n\n";

    out << "method              success%  per-rep success%\n";
    for (const auto& s : summary) {
        char head[64];
        std::snprintf(head, sizeof(head), "%-18s  %7.1f  ", method_name(s.method).c_str(),
                      s.success_pct);
        out << head << "[";
        for (std::size_t r = 0; r < s.success_by_rep.size(); ++r)
            out << (r ? " " : "") << fmt("%.1f", s.success_by_rep[r]);
        out << "]\n";
    }

    for (std::size_t k = 0; k < labels.size(); ++k) {
        out << "\nmetric: " << labels[k] << "\n";
        out << "method                  median         p25         p75  median|feasible\n";
        for (const auto& s : summary) {
            const MetricSummary& ms = s.metrics[k];
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%-18s %11.6g %11.6g %11.6g  ",
                          method_name(s.method).c_str(), ms.median, ms.p25, ms.p75);
            out << buf << (ms.has_feasible ? fmt("%.6g", ms.median_feasible) : std::string("-"))
                << "\n";
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_report_csv(const fs::path& path, const ExperimentReport& report,
                      const std::vector<MethodSummary>& summary) {
    auto out = open_out(path);
    const auto labels = report_metric_labels(report.task);
    out << "task,profile,method,metric,success_pct,median,p25,p75,median_feasible\n";
    for (const auto& s : summary)
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const MetricSummary& ms = s.metrics[k];
            out << task_name(report.task) << "," << profile_name(report.profile) << ","
                << method_name(s.method) << "," << labels[k] << ","
                << format_double(s.success_pct) << "," << format_double(ms.median) << ","
                << format_double(ms.p25) << "," << format_double(ms.p75) << ","
                << (ms.has_feasible ? format_double(ms.median_feasible) : std::string()) << "\n";
        }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_report_md(const fs::path& path, const ExperimentReport& report,
                     const std::vector<MethodSummary>& summary) {
    auto out = open_out(path);
    const auto labels = report_metric_labels(report.task);
    out << "# " << task_name(report.task) << " (" << profile_name(report.profile) << ")\n\n";
    out << "seed " << report.master_seed << ", config `" << report.config_hash << "`, "
        << report.repetitions << " repetitions x " << report.n_test << " test variations\n\n";

    out << "| method | success % |";
    for (const auto& l : labels) out << " " << l << " median (p25, p75) |";
    out << "\n|---|---|";
    for (std::size_t k = 0; k < labels.size(); ++k) out << "---|";
    out << "\n";
    for (const auto& s : summary) {
        out << "| " << method_name(s.method) << " | " << fmt("%.1f", s.success_pct) << " |";
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const MetricSummary& ms = s.metrics[k];
            out << " " << fmt("%.6g", ms.median) << " (" << fmt("%.6g", ms.p25) << ", "
                << fmt("%.6g", ms.p75) << ") |";
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_report_files(const fs::path& results_dir, const ExperimentReport& report) {
    fs::create_directories(results_dir);
    const auto summary = summarize(report);
    write_report_txt(results_dir / "report.txt", report, summary);
    write_report_csv(results_dir / "report.csv", report, summary);
    write_report_md(results_dir / "report.md", report, summary);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const TaskSetup& task = cfg.task;
    const Bounds vb = task.variation_bounds();
    const Bounds pb = task.policy_bounds();
    const int R = cfg.repetitions;
    const int NT = cfg.n_train;
    const int NQ = cfg.n_test;
    const auto M = cfg.methods.size();

    const auto want = [&](Method m) {
        return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
    };
    const bool need_data = want(Method::perf) || want(Method::nearest_neighbor) ||
                           want(Method::direct) || want(Method::single_policy);

    fs::create_directories(out_dir / "vars");
    fs::create_directories(out_dir / "results");

    const std::string snapshot = config_snapshot(cfg);
    open_out(out_dir / "config.snapshot") << snapshot;
    // jobs only schedules the work, so it stays out of the hash: runs at any
    // width produce byte-identical results files.
    ExperimentConfig hashed = cfg;
    hashed.jobs = 1;
    const std::string hash = config_hash(config_snapshot(hashed));

    // variation draws; test sets are redrawn until disjoint from training
    std::vector<std::vector<TaskVariation>> trains(R), tests(R);
    for (int r = 0; r < R; ++r) {
        trains[r] = task.sample(NT, seeds::train_vars(cfg.master_seed, r));
        bool ok = false;
        for (std::uint64_t attempt = 0; attempt < 16 && !ok; ++attempt) {
            auto cand = task.sample(NQ, seeds::test_vars(cfg.master_seed, r, attempt));
            ok = true;
            for (const auto& c : cand)
                for (const auto& t : trains[r])
                    if (same_variation(c, t)) ok = false;
            if (ok) tests[r] = std::move(cand);
        }
        if (!ok) throw std::runtime_error("could not draw test variations disjoint from training");
        write_variations(out_dir / "vars" / ("train_" + std::to_string(r) + ".csv"), task.id,
                         trains[r]);
        write_variations(out_dir / "vars" / ("test_" + std::to_string(r) + ".csv"), task.id,
                         tests[r]);
    }

    // per-variation BO on the training sets, flattened across repetitions
    std::vector<std::vector<BOResult>> histories(R);
    if (need_data) {
        for (int r = 0; r < R; ++r) histories[r].resize(NT);
        par::parallel_for_jobs(R * NT, cfg.jobs, [&](int k) {
            const int r = k / NT;
            const int i = k % NT;
            try {
                BOConfig b = cfg.bo;
                b.seed = seeds::learn(cfg.master_seed, r, i);
                histories[r][i] = bo_learn(
                    [&](const PolicyParams& th) { return task.evaluate(trains[r][i], th); }, pb,
                    b);
            } catch (const std::exception& ex) {
                throw std::runtime_error("rep=" + std::to_string(r) +
                                         " train_var=" + std::to_string(i) + ": " + ex.what());
            }
        });
        for (int r = 0; r < R; ++r) {
            const fs::path dir = out_dir / "history" / task_name(task.id) / std::to_string(r);
            fs::create_directories(dir);
            for (int i = 0; i < NT; ++i)
                write_records(dir / (std::to_string(i) + ".csv"), task.id, histories[r][i].history);
        }
    }

    std::vector<RawRow> rows(static_cast<std::size_t>(R) * NQ * M);

    for (int r = 0; r < R; ++r) {
        TrainingData data;
        PerfModel perf;
        DirectModel direct;
        if (need_data) {
            data.task = task.id;
            data.variations = trains[r];
            for (int i = 0; i < NT; ++i) {
                const auto& h = histories[r][i];
                data.records.insert(data.records.end(), h.history.begin(), h.history.end());
                data.best_params.push_back(h.best_params);
                data.best_rewards.push_back(h.best_reward);
            }
        }
        const fs::path model_dir = out_dir / "models" / ("rep_" + std::to_string(r));
        if (want(Method::perf)) {
            perf = train_perf(data, vb, pb, seeds::perf_train(cfg.master_seed, r),
                              cfg.perf_options());
            save_perf_bundle(perf, model_dir / "perf");
        }
        if (want(Method::direct)) {
            direct = train_direct(data, vb, pb, seeds::direct_train(cfg.master_seed, r),
                                  cfg.gp);
            save_direct_bundle(direct, model_dir / "direct");
        }

        par::parallel_for_jobs(NQ, cfg.jobs, [&](int j) {
            const TaskVariation& v = tests[r][j];
            for (std::size_t mi = 0; mi < M; ++mi) {
                const Method m = cfg.methods[mi];
                try {
                    const std::uint64_t seed = seeds::method_query(cfg.master_seed, r, j, m);
                    PolicyParams th;
                    switch (m) {
                        case Method::learned: {
                            BOConfig b = cfg.bo;
                            b.seed = seed;
                            th = baseline_learned(task, v, b).first;
                            break;
                        }
                        case Method::perf:
                            th = query(perf, v, data, cfg.query_starts, seed).theta_hat;
                            break;
                        case Method::nearest_neighbor:
                            th = nearest_neighbor(data, vb, v);
                            break;
                        case Method::direct:
                            th = query_direct(direct, v);
                            break;
                        case Method::single_policy:
                            th = single_policy(data, vb);
                            break;
                    }
                    RawRow& row = rows[(static_cast<std::size_t>(r) * NQ + j) * M + mi];
                    row.rep = r;
                    row.var_idx = j;
                    row.method = m;
                    row.record = task.evaluate(v, th);
                } catch (const std::exception& ex) {
                    throw std::runtime_error("rep=" + std::to_string(r) +
                                             " var=" + std::to_string(j) +
                                             " method=" + method_name(m) + ": " + ex.what());
                }
            }
        });
    }

    ExperimentReport report;
    report.task = task.id;
    report.profile = task.profile;
    report.master_seed = cfg.master_seed;
    report.n_test = NQ;
    report.repetitions = R;
    report.config_hash = hash;
    report.methods = cfg.methods;
    report.rows = std::move(rows);

    write_raw_csv(out_dir / "results" / "raw.csv", report);
    write_report_files(out_dir / "results", report);
    return report;
}

}  // namespace btmg
