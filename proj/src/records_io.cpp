#include "btmg/records_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace btmg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty numeric field");
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size())
        throw std::invalid_argument("bad numeric field '" + text + "'");
    return v;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line_no, const std::string& what) {
    std::ostringstream os;
    os << path.string() << ":" << line_no << ": " << what;
    throw std::runtime_error(os.str());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    return in;
}

std::string record_header(TaskId task) {
    const TaskShape& shape = task_shape(task);
    std::ostringstream os;
    os << "task_id";
    for (int i = 0; i < shape.var_dim; ++i) os << ",v_" << i;
    for (int i = 0; i < shape.theta_dim; ++i) os << ",theta_" << i;
    os << ",reward,feasible";
    for (const std::string& m : shape.metric_names) os << "," << m;
    return os.str();
}

// Recovers the task from a header line (the metric columns are fixed per
// task, so the full header acts as the signature).
TaskId task_from_header(const std::filesystem::path& path, const std::string& header) {
    for (TaskId id : {TaskId::obstacle, TaskId::push})
        if (header == record_header(id)) return id;
    parse_fail(path, 1, "unrecognized record header '" + header + "'");
}

}  // namespace

void write_records(const std::filesystem::path& path, TaskId task,
                   const std::vector<EvalRecord>& records) {
    std::ofstream out = open_out(path);
    out << record_header(task) << "\n";
    const TaskShape& shape = task_shape(task);
    const std::string name = task_name(task);
    for (const EvalRecord& r : records) {
        if (r.variation.v.size() != shape.var_dim || r.params.theta.size() != shape.theta_dim ||
            static_cast<int>(r.metrics.size()) != static_cast<int>(shape.metric_names.size()))
            throw std::invalid_argument("write_records: record shape does not match task '" + name + "'");
        out << name;
        for (int i = 0; i < shape.var_dim; ++i) out << "," << format_double(r.variation.v[i]);
        for (int i = 0; i < shape.theta_dim; ++i) out << "," << format_double(r.params.theta[i]);
        out << "," << format_double(r.reward) << "," << (r.feasible ? 1 : 0);
        for (double m : r.metrics) out << "," << format_double(m);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on '" + path.string() + "'");
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const TaskId task = task_from_header(path, line);
    const TaskShape& shape = task_shape(task);
    const std::size_t n_fields = 1 + static_cast<std::size_t>(shape.var_dim) +
                                 static_cast<std::size_t>(shape.theta_dim) + 2 +
                                 shape.metric_names.size();

    std::vector<EvalRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != n_fields) {
            std::ostringstream os;
            os << "expected " << n_fields << " fields, got " << fields.size();
            parse_fail(path, line_no, os.str());
        }
        EvalRecord r;
        try {
            r.variation.task = parse_task(fields[0]);
            if (r.variation.task != task) throw std::invalid_argument("task_id differs from header");
            std::size_t k = 1;
            r.variation.v.resize(shape.var_dim);
            for (int i = 0; i < shape.var_dim; ++i) r.variation.v[i] = parse_double(fields[k++]);
            r.params.theta.resize(shape.theta_dim);
            for (int i = 0; i < shape.theta_dim; ++i) r.params.theta[i] = parse_double(fields[k++]);
            r.reward = parse_double(fields[k++]);
            const std::string& f = fields[k++];
            if (f == "0")
                r.feasible = false;
            else if (f == "1")
                r.feasible = true;
            else
                throw std::invalid_argument("feasible flag must be 0 or 1, got '" + f + "'");
            r.metrics.resize(shape.metric_names.size());
            for (double& m : r.metrics) m = parse_double(fields[k++]);
        } catch (const std::invalid_argument& e) {
            parse_fail(path, line_no, e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_variations(const std::filesystem::path& path, TaskId task,
                      const std::vector<TaskVariation>& variations) {
    std::ofstream out = open_out(path);
    const TaskShape& shape = task_shape(task);
    out << "task_id";
    for (int i = 0; i < shape.var_dim; ++i) out << ",v_" << i;
    out << "\n";
    for (const TaskVariation& var : variations) {
        if (var.v.size() != shape.var_dim)
            throw std::invalid_argument("write_variations: dimension mismatch");
        out << task_name(task);
        for (int i = 0; i < shape.var_dim; ++i) out << "," << format_double(var.v[i]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on '" + path.string() + "'");
}

std::vector<TaskVariation> read_variations(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    TaskId task;
    if (line == "task_id,v_0,v_1,v_2")
        task = TaskId::obstacle;
    else if (line == "task_id,v_0,v_1,v_2,v_3")
        task = TaskId::push;
    else
        parse_fail(path, 1, "unrecognized variation header '" + line + "'");
    const TaskShape& shape = task_shape(task);

    std::vector<TaskVariation> out_vars;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 1 + static_cast<std::size_t>(shape.var_dim))
            parse_fail(path, line_no, "wrong field count");
        TaskVariation var;
        try {
            var.task = parse_task(fields[0]);
            if (var.task != task) throw std::invalid_argument("task_id differs from header");
            var.v.resize(shape.var_dim);
            for (int i = 0; i < shape.var_dim; ++i) var.v[i] = parse_double(fields[1 + i]);
        } catch (const std::invalid_argument& e) {
            parse_fail(path, line_no, e.what());
        }
        out_vars.push_back(std::move(var));
    }
    return out_vars;
}

}  // namespace btmg
