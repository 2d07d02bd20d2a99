#include "btmg/config.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "btmg/records_io.hpp"

namespace btmg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

long long parse_integer(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + text + "'");
    }
    if (pos != text.size())
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        return parse_double(text);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + text + "'");
    }
}

struct ConfigEntry {
    std::string key;  // "section.name"
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

using DoubleRef = std::function<double&(ExperimentConfig&)>;
using IntRef = std::function<int&(ExperimentConfig&)>;

ConfigEntry dbl_entry(std::string key, DoubleRef ref) {
    ConfigEntry e;
    e.key = std::move(key);
    e.get = [ref](const ExperimentConfig& c) {
        return format_double(ref(const_cast<ExperimentConfig&>(c)));
    };
    e.set = [ref, key = e.key](ExperimentConfig& c, const std::string& v) {
        ref(c) = parse_real(key, v);
    };
    return e;
}

ConfigEntry int_entry(std::string key, IntRef ref) {
    ConfigEntry e;
    e.key = std::move(key);
    e.get = [ref](const ExperimentConfig& c) {
        return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
    };
    e.set = [ref, key = e.key](ExperimentConfig& c, const std::string& v) {
        long long x = parse_integer(key, v);
        ref(c) = static_cast<int>(x);
    };
    return e;
}

std::string join_methods(const std::vector<Method>& ms) {
    std::string out;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        if (i) out += ",";
        out += method_name(ms[i]);
    }
    return out;
}

std::vector<Method> split_methods(const std::string& text) {
    std::vector<Method> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_method(item));
    }
    if (out.empty()) throw std::invalid_argument("config key 'harness.methods': empty list");
    return out;
}

#define DBL(name, expr) \
    dbl_entry(name, [](ExperimentConfig& c) -> double& { return expr; })
#define INT(name, expr) \
    int_entry(name, [](ExperimentConfig& c) -> int& { return expr; })

std::vector<ConfigEntry> build_entries() {
    std::vector<ConfigEntry> e;

    ConfigEntry task;
    task.key = "harness.task";
    task.get = [](const ExperimentConfig& c) { return task_name(c.task.id); };
    task.set = [](ExperimentConfig& c, const std::string& v) { c.task.id = parse_task(v); };
    e.push_back(task);

    ConfigEntry prof;
    prof.key = "harness.profile";
    prof.get = [](const ExperimentConfig& c) { return profile_name(c.task.profile); };
    prof.set = [](ExperimentConfig& c, const std::string& v) {
        c.task.profile = parse_profile(v);
    };
    e.push_back(prof);

    e.push_back(INT("harness.n_train", c.n_train));
    e.push_back(INT("harness.n_test", c.n_test));
    e.push_back(INT("harness.repetitions", c.repetitions));

    ConfigEntry seed;
    seed.key = "harness.master_seed";
    seed.get = [](const ExperimentConfig& c) { return std::to_string(c.master_seed); };
    seed.set = [](ExperimentConfig& c, const std::string& v) {
        std::size_t pos = 0;
        unsigned long long x = 0;
        try {
            x = std::stoull(v, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != v.size())
            throw std::invalid_argument("config key 'harness.master_seed': not a seed: '" + v +
                                        "'");
        c.master_seed = x;
    };
    e.push_back(seed);

    e.push_back(INT("harness.jobs", c.jobs));

    ConfigEntry methods;
    methods.key = "harness.methods";
    methods.get = [](const ExperimentConfig& c) { return join_methods(c.methods); };
    methods.set = [](ExperimentConfig& c, const std::string& v) { c.methods = split_methods(v); };
    e.push_back(methods);

    e.push_back(INT("bo.n_init", c.bo.n_init));
    e.push_back(INT("bo.t_max", c.bo.t_max));
    e.push_back(INT("bo.refit_every", c.bo.refit_every));
    e.push_back(INT("bo.acq_samples", c.bo.acq_samples));
    e.push_back(INT("bo.acq_refine", c.bo.acq_refine));
    e.push_back(DBL("bo.ei_jitter", c.bo.ei_jitter));

    e.push_back(INT("gp.n_starts", c.gp.n_starts));
    e.push_back(INT("gp.max_points", c.gp.max_points));
    e.push_back(INT("gp.hyper_points", c.gp.hyper_points));
    e.push_back(INT("gp.max_iters", c.gp.inner.max_iters));
    e.push_back(DBL("gp.grad_tol", c.gp.inner.grad_tol));

    e.push_back(DBL("svm.c", c.svm_c));
    e.push_back(DBL("svm.gamma", c.svm_gamma));
    e.push_back(DBL("svm.kkt_tol", c.svm.kkt_tol));

    ConfigEntry cap;
    cap.key = "svm.max_pair_updates";
    cap.get = [](const ExperimentConfig& c) { return std::to_string(c.svm.max_pair_updates); };
    cap.set = [](ExperimentConfig& c, const std::string& v) {
        c.svm.max_pair_updates = parse_integer("svm.max_pair_updates", v);
    };
    e.push_back(cap);

    e.push_back(DBL("perf.mu_factor", c.mu_factor));
    e.push_back(INT("perf.query_starts", c.query_starts));

    e.push_back(DBL("task.obstacle.height_min", c.task.obstacle.height_min));
    e.push_back(DBL("task.obstacle.height_max", c.task.obstacle.height_max));
    e.push_back(DBL("task.obstacle.width_min", c.task.obstacle.width_min));
    e.push_back(DBL("task.obstacle.width_max", c.task.obstacle.width_max));
    e.push_back(DBL("task.obstacle.center_min", c.task.obstacle.center_min));
    e.push_back(DBL("task.obstacle.center_max", c.task.obstacle.center_max));
    e.push_back(DBL("task.obstacle.wp_y_min", c.task.obstacle.wp_y_min));
    e.push_back(DBL("task.obstacle.wp_y_max", c.task.obstacle.wp_y_max));
    e.push_back(DBL("task.obstacle.wp_z_min", c.task.obstacle.wp_z_min));
    e.push_back(DBL("task.obstacle.wp_z_max", c.task.obstacle.wp_z_max));
    e.push_back(DBL("task.obstacle.switch_min", c.task.obstacle.switch_min));
    e.push_back(DBL("task.obstacle.switch_max", c.task.obstacle.switch_max));
    e.push_back(DBL("task.obstacle.start_y", c.task.obstacle.start_y));
    e.push_back(DBL("task.obstacle.start_z", c.task.obstacle.start_z));
    e.push_back(DBL("task.obstacle.goal_y", c.task.obstacle.goal_y));
    e.push_back(DBL("task.obstacle.goal_z", c.task.obstacle.goal_z));
    e.push_back(DBL("task.obstacle.speed", c.task.obstacle.speed));
    e.push_back(DBL("task.obstacle.dt", c.task.obstacle.dt));
    e.push_back(DBL("task.obstacle.t_max", c.task.obstacle.t_max));
    e.push_back(DBL("task.obstacle.success_radius", c.task.obstacle.success_radius));
    e.push_back(DBL("task.obstacle.safe_dist", c.task.obstacle.safe_dist));
    e.push_back(DBL("task.obstacle.reward_success", c.task.obstacle.reward_success));
    e.push_back(DBL("task.obstacle.reward_goal", c.task.obstacle.reward_goal));
    e.push_back(DBL("task.obstacle.reward_time", c.task.obstacle.reward_time));
    e.push_back(DBL("task.obstacle.penalty_obstacle", c.task.obstacle.penalty_obstacle));

    e.push_back(DBL("task.push.circle_cx", c.task.push.circle_cx));
    e.push_back(DBL("task.push.circle_cy", c.task.push.circle_cy));
    e.push_back(DBL("task.push.circle_r", c.task.push.circle_r));
    e.push_back(DBL("task.push.tri_ax", c.task.push.tri_ax));
    e.push_back(DBL("task.push.tri_ay", c.task.push.tri_ay));
    e.push_back(DBL("task.push.tri_bx", c.task.push.tri_bx));
    e.push_back(DBL("task.push.tri_by", c.task.push.tri_by));
    e.push_back(DBL("task.push.tri_cx", c.task.push.tri_cx));
    e.push_back(DBL("task.push.tri_cy", c.task.push.tri_cy));
    e.push_back(DBL("task.push.os_lim", c.task.push.os_lim));
    e.push_back(DBL("task.push.og_lim", c.task.push.og_lim));
    e.push_back(DBL("task.push.obj_ax", c.task.push.obj_ax));
    e.push_back(DBL("task.push.obj_ay", c.task.push.obj_ay));
    e.push_back(DBL("task.push.obj_bx", c.task.push.obj_bx));
    e.push_back(DBL("task.push.obj_by", c.task.push.obj_by));
    e.push_back(DBL("task.push.obj_cx", c.task.push.obj_cx));
    e.push_back(DBL("task.push.obj_cy", c.task.push.obj_cy));
    e.push_back(DBL("task.push.centroid_x", c.task.push.centroid_x));
    e.push_back(DBL("task.push.centroid_y", c.task.push.centroid_y));
    e.push_back(DBL("task.push.com_off_x", c.task.push.com_off_x));
    e.push_back(DBL("task.push.com_off_y", c.task.push.com_off_y));
    e.push_back(DBL("task.push.backoff", c.task.push.backoff));
    e.push_back(DBL("task.push.delta_max", c.task.push.delta_max));
    e.push_back(DBL("task.push.drift_gain", c.task.push.drift_gain));
    e.push_back(DBL("task.push.rot_gain", c.task.push.rot_gain));
    e.push_back(DBL("task.push.base_reward", c.task.push.base_reward));
    e.push_back(DBL("task.push.pos_weight", c.task.push.pos_weight));
    e.push_back(DBL("task.push.pos_scale", c.task.push.pos_scale));
    e.push_back(DBL("task.push.ori_scale", c.task.push.ori_scale));

    return e;
}

#undef DBL
#undef INT

const std::vector<ConfigEntry>& config_entries() {
    static const std::vector<ConfigEntry> entries = build_entries();
    return entries;
}

std::string section_of(const std::string& key) {
    return key.substr(0, key.rfind('.'));
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": empty section name");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        if (section.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": key outside any [section]");
        kv[section + "." + key] = value;
    }
    return kv;
}

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
    const auto& entries = config_entries();
    for (const auto& [key, value] : kv) {
        const ConfigEntry* hit = nullptr;
        for (const auto& e : entries)
            if (e.key == key) {
                hit = &e;
                break;
            }
        if (!hit) throw std::invalid_argument("unknown config key '" + key + "'");
        hit->set(cfg, value);
    }
}

std::string config_snapshot(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& e : config_entries()) {
        std::string s = section_of(e.key);
        if (s != section) {
            if (!out.empty()) out += "\n";
            out += "[" + s + "]\n";
            section = s;
        }
        out += e.key.substr(s.size() + 1) + " = " + e.get(cfg) + "\n";
    }
    return out;
}

std::string config_hash(const std::string& snapshot) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : snapshot) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig load_config_text(const std::string& text, ExperimentConfig base) {
    apply_config(base, parse_ini(text));
    base.validate();
    return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str(), std::move(base));
}

}  // namespace btmg
