#include "opdyn/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "opdyn/util.hpp"

namespace opdyn::io {

namespace {

using util::format_double;

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string number_array(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += format_double(xs[i]);
    }
    return out + "]";
}

double require_number(const nlohmann::json& j, const char* what) {
    if (!j.is_number()) throw std::invalid_argument(std::string("expected a number for ") + what);
    return j.get<double>();
}

}  // namespace

std::string measure_to_json(const EmpiricalMeasure& mu) {
    std::string out = "[";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto& a = mu.atoms()[i];
        if (i) out += ",";
        out += "[" + format_double(a.y) + "," + format_double(a.theta) + "," +
               format_double(a.weight) + "]";
    }
    return out + "]\n";
}

EmpiricalMeasure measure_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("measure JSON does not parse: ") + e.what());
    }
    if (!j.is_array()) throw std::invalid_argument("measure JSON must be an array of triples");
    std::vector<Atom> atoms;
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != 3)
            throw std::invalid_argument("measure JSON rows must be [y, theta, weight]");
        atoms.push_back({require_number(row[0], "y"), require_number(row[1], "theta"),
                         require_number(row[2], "weight")});
    }
    return EmpiricalMeasure(std::move(atoms));
}

std::string measure_to_csv(const EmpiricalMeasure& mu) {
    std::string out = "y,theta,weight\n";
    for (const auto& a : mu.atoms())
        out += format_double(a.y) + "," + format_double(a.theta) + "," +
               format_double(a.weight) + "\n";
    return out;
}

EmpiricalMeasure measure_from_csv(const std::string& text) {
    const auto table = parse_csv(text);
    if (table.header != std::vector<std::string>{"y", "theta", "weight"})
        throw std::invalid_argument("measure CSV must start with 'y,theta,weight'");
    std::vector<Atom> atoms;
    for (const auto& row : table.rows) {
        if (row.size() != 3) throw std::invalid_argument("measure CSV rows need three fields");
        atoms.push_back({row[0], row[1], row[2]});
    }
    return EmpiricalMeasure(std::move(atoms));
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "t,atom_id,y,theta,weight\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const std::string t = format_double(traj.times[k]);
        const auto& atoms = traj.states[k].atoms();
        for (std::size_t i = 0; i < atoms.size(); ++i)
            out += t + "," + std::to_string(i) + "," + format_double(atoms[i].y) + "," +
                   format_double(atoms[i].theta) + "," + format_double(atoms[i].weight) + "\n";
    }
    return out;
}

std::string trajectory_sidecar_json(const Trajectory& traj) {
    return "{\"times\":" + number_array(traj.times) +
           ",\"energies\":" + number_array(traj.energies) +
           ",\"dissipations\":" + number_array(traj.dissipations) + "}\n";
}

std::string profile_to_csv(const SteadyProfile& prof) {
    std::string out = "theta,g,g_prime,g_second\n";
    for (std::size_t k = 0; k < prof.thetas.size(); ++k)
        out += format_double(prof.thetas[k]) + "," + format_double(prof.g[k]) + "," +
               format_double(prof.g_prime[k]) + "," + format_double(prof.g_second[k]) + "\n";
    return out;
}

std::string profile_metadata_json(const SteadyProfile& prof) {
    const auto [lo, hi] = extreme_value_check(prof);
    std::string out = "{\"alpha\":" + format_double(prof.alpha);
    out += ",\"p\":" + format_double(prof.p);
    out += ",\"residual\":" + format_double(prof.residual);
    out += ",\"unique_condition\":" + std::string(prof.unique_condition ? "true" : "false");
    out += ",\"alpha_candidates\":" + number_array(prof.alpha_candidates);
    out += ",\"inflection_points\":" + number_array(inflection_points(prof));
    out += ",\"bound_checks\":{\"refined_lower\":" + format_double(refined_lower_bound_check(prof));
    out += ",\"extreme_lower\":" + format_double(lo);
    out += ",\"extreme_upper\":" + format_double(hi) + "}}\n";
    return out;
}

std::string report_to_json(const StudyReport& rep) {
    std::string out = "{\"name\":\"" + json_escape(rep.name) + "\"";
    out += ",\"inputs\":\"" + json_escape(rep.inputs) + "\"";
    out += ",\"series\":[";
    for (std::size_t k = 0; k < rep.series.size(); ++k) {
        if (k) out += ",";
        out += "[" + format_double(rep.series[k].first) + "," +
               format_double(rep.series[k].second) + "]";
    }
    out += "]";
    if (rep.fit) {
        out += ",\"fit\":{\"window_start\":" + format_double(rep.fit->window_start);
        out += ",\"slope\":" + format_double(rep.fit->slope);
        out += ",\"intercept\":" + format_double(rep.fit->intercept);
        out += ",\"r_squared\":" + format_double(rep.fit->r_squared);
        out += ",\"n_points\":" + std::to_string(rep.fit->n_points) + "}";
    } else {
        out += ",\"fit\":null";
    }
    out += rep.pass ? ",\"pass\":true" : ",\"pass\":false";
    out += rep.advisory ? ",\"advisory\":true" : ",\"advisory\":false";
    out += ",\"notes\":\"" + json_escape(rep.notes) + "\"}\n";
    return out;
}

std::string report_series_csv(const StudyReport& rep) {
    std::string out = "x,value\n";
    for (const auto& [x, v] : rep.series) out += format_double(x) + "," + format_double(v) + "\n";
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (first) {
            table.header = cells;
            first = false;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw std::invalid_argument("CSV cell is not numeric: " + cell);
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (first) throw std::invalid_argument("CSV has no header row");
    return table;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace opdyn::io
