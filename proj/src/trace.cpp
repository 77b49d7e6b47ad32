#include "parsgd/trace.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace parsgd {

using nlohmann::json;

std::string run_status_name(RunStatus status) {
    switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Stalled: return "stalled";
    case RunStatus::StarvedAbort: return "starved-abort";
    }
    return "unknown";
}

std::string epoch_status_name(EpochStatus status) {
    switch (status) {
    case EpochStatus::Normal: return "normal";
    case EpochStatus::Starved: return "starved";
    case EpochStatus::Stalled: return "stalled";
    }
    return "unknown";
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json meta_to_json(const TraceMetadata& m) {
    json j;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["rule"] = m.rule;
    j["attack"] = m.attack;
    j["declared_f"] = m.declared_f;
    j["n_workers"] = m.n_workers;
    j["epochs"] = m.epochs;
    j["converged_factor"] = m.converged_factor;
    j["run_status"] = m.run_status;
    j["version"] = m.version;
    return j;
}

TraceMetadata meta_from_json(const json& j) {
    TraceMetadata m;
    m.config_hash = j.value("config_hash", m.config_hash);
    m.seed = j.value("seed", m.seed);
    m.rule = j.value("rule", m.rule);
    m.attack = j.value("attack", m.attack);
    m.declared_f = j.value("declared_f", m.declared_f);
    m.n_workers = j.value("n_workers", m.n_workers);
    m.epochs = j.value("epochs", m.epochs);
    m.converged_factor = j.value("converged_factor", m.converged_factor);
    m.run_status = j.value("run_status", m.run_status);
    m.version = j.value("version", m.version);
    return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

} // namespace

std::string render_trace(const TraceMetadata& meta, const std::vector<EpochReport>& epochs) {
    std::ostringstream out;
    out << "# " << meta_to_json(meta).dump() << "\n";
    out << "epoch,rule,attack,declared_f,inferred_c,collected,f_used,delta_t_us,max_rtt_us,"
           "train_loss,test_loss,top1,topk,agg_us,status\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << meta.rule << ',' << meta.attack << ',' << meta.declared_f << ','
            << e.inferred_c << ',' << e.collected << ',' << e.f_used << ',' << e.delta_t_us << ','
            << e.max_rtt_us << ',' << format_double(e.train_loss) << ','
            << format_double(e.test_loss) << ',' << format_double(e.top1) << ','
            << format_double(e.topk) << ',' << e.agg_wallclock_us << ','
            << epoch_status_name(e.status) << "\n";
    }
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush())
            throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::size_t TraceFile::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    throw std::invalid_argument("trace has no column '" + name + "'");
}

double TraceFile::number_at(std::size_t row, const std::string& column) const {
    return std::stod(text_at(row, column));
}

const std::string& TraceFile::text_at(std::size_t row, const std::string& column) const {
    return rows.at(row).at(column_index(column));
}

TraceFile TraceFile::parse(const std::string& contents) {
    TraceFile file;
    std::istringstream in(contents);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line[0] == '#') {
            const auto start = line.find('{');
            if (start != std::string::npos)
                file.meta = meta_from_json(json::parse(line.substr(start)));
            continue;
        }
        if (!have_header) {
            file.columns = split_csv_line(line);
            have_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != file.columns.size())
            throw std::runtime_error("trace row width disagrees with the header");
        file.rows.push_back(std::move(fields));
    }
    if (!have_header)
        throw std::runtime_error("trace has no header row");
    return file;
}

TraceFile TraceFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace parsgd
