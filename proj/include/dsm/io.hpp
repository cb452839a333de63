#pragma once

#include "dsm/common.hpp"
#include "dsm/dp.hpp"
#include "dsm/eval.hpp"
#include "dsm/sr.hpp"
#include "dsm/td.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dsm {

/// Shortest round-trippable decimal rendering; output is byte-stable for a
/// given build, which the determinism contract relies on.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    if (parsed == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &parsed);
            if (parsed == v) return shorter;
        }
    }
    return buf;
}

// Each CSV artifact starts with "# schema: <name> v1" followed by a header row.
inline void write_csv(const std::string& path, const std::string& schema,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_csv: cannot open '" + path + "'");
    out << "# schema: " << schema << " v1\n";
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
}

struct CsvFile {
    std::string schema;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvFile read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("read_csv: cannot open '" + path + "'");
    CsvFile file;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# schema: ", 0) == 0) {
            file.schema = line.substr(10);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            file.header = std::move(cells);
            have_header = true;
        } else {
            file.rows.push_back(std::move(cells));
        }
    }
    return file;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_json: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("read_json: cannot open '" + path + "'");
    return nlohmann::json::parse(in);
}

/// Model rows: (state, atom, state', probability).
inline void write_model_csv(const std::string& path, const DeltaModel& model) {
    std::vector<std::vector<std::string>> rows;
    const int n = model.n_states();
    for (int x = 0; x < n; ++x) {
        const Mat& a = model.atoms[static_cast<std::size_t>(x)];
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index s = 0; s < a.cols(); ++s)
                rows.push_back({std::to_string(x), std::to_string(i), std::to_string(s),
                                fmt_double(a(i, s))});
    }
    write_csv(path, "delta_model", {"state", "atom", "state_prime", "probability"}, rows);
}

inline DeltaModel read_model_csv(const std::string& path, double gamma) {
    const CsvFile file = read_csv(path);
    if (file.schema.rfind("delta_model", 0) != 0)
        throw ConfigError("read_model_csv: unexpected schema '" + file.schema + "' in " + path);
    int n = 0, m = 0;
    for (const auto& row : file.rows) {
        n = std::max(n, std::stoi(row.at(0)) + 1);
        m = std::max(m, std::stoi(row.at(1)) + 1);
    }
    if (n == 0 || m == 0) throw ConfigError("read_model_csv: empty model in " + path);
    DeltaModel model;
    model.gamma = gamma;
    model.atoms.assign(static_cast<std::size_t>(n), Mat::Zero(m, n));
    for (const auto& row : file.rows)
        model.atoms[static_cast<std::size_t>(std::stoi(row.at(0)))](
            std::stoi(row.at(1)), std::stoi(row.at(2))) = std::stod(row.at(3));
    return model;
}

inline void write_matrix_csv(const std::string& path, const std::string& schema, const Mat& mat) {
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < mat.cols(); ++c) header.push_back("c" + std::to_string(c));
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        std::vector<std::string> row;
        for (Eigen::Index c = 0; c < mat.cols(); ++c) row.push_back(fmt_double(mat(r, c)));
        rows.push_back(std::move(row));
    }
    write_csv(path, schema, header, rows);
}

inline void write_dp_trace_csv(const std::string& path, const std::vector<DpTraceRow>& trace) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : trace)
        rows.push_back({std::to_string(t.iteration), fmt_double(t.successive_wbar),
                        fmt_double(t.ref_wbar), std::to_string(t.max_state)});
    write_csv(path, "dp_trace", {"iteration", "successive_wbar", "ref_wbar", "max_state"}, rows);
}

inline void write_td_trace_csv(const std::string& path, const std::vector<TdTraceRow>& trace) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : trace)
        rows.push_back({std::to_string(t.step), fmt_double(t.loss), fmt_double(t.full_mmd2),
                        fmt_double(t.wbar_ref)});
    write_csv(path, "td_trace", {"step", "loss", "full_mmd", "wbar_ref"}, rows);
}

inline void write_trajectories_csv(const std::string& path,
                                   const std::vector<Trajectory>& trajectories) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const auto& states = trajectories[id].states;
        for (std::size_t t = 0; t < states.size(); ++t)
            rows.push_back({std::to_string(id), std::to_string(t),
                            std::to_string(states[t])});
    }
    write_csv(path, "trajectories", {"trajectory_id", "t", "state"}, rows);
}

inline void write_returns_csv(const std::string& path, const ReturnDistribution& dist) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < dist.particles.size(); ++i)
        rows.push_back({std::to_string(i), fmt_double(dist.particles[i])});
    write_csv(path, "return_distribution", {"particle", "return"}, rows);
}

}  // namespace dsm
