#include "crowdtrack/mot_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crowdtrack::evalio {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::vector<MotRow> parse_mot(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("parse_mot: cannot open " + path);
    }
    std::vector<MotRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(t);
        std::string cell;
        bool bad = false;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t pos = 0;
                fields.push_back(std::stod(cell, &pos));
                if (pos != trim(cell).size() && !trim(cell).empty() &&
                    pos < cell.size() && trim(cell.substr(pos)).size() > 0) {
                    bad = true;
                }
            } catch (const std::exception&) {
                bad = true;
            }
        }
        if (bad || fields.size() < 7) {
            throw std::runtime_error("parse_mot: malformed line " +
                                     std::to_string(line_no) + " in " + path);
        }
        MotRow row;
        row.frame = static_cast<int>(fields[0]);
        row.id = static_cast<int>(fields[1]);
        const double left = fields[2], top = fields[3];
        const double w = fields[4], h = fields[5];
        if (w <= 0.0 || h <= 0.0) {
            throw std::runtime_error("parse_mot: non-positive box on line " +
                                     std::to_string(line_no) + " in " + path);
        }
        row.box = Box{left + 0.5 * w, top + 0.5 * h, w, h};
        row.score = fields[6];
        row.cls = fields.size() > 7 ? static_cast<int>(fields[7]) : -1;
        row.visibility = fields.size() > 8 ? fields[8] : -1.0;
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MotRow& a, const MotRow& b) { return a.frame < b.frame; });
    return rows;
}

void write_mot(const std::string& path, const std::vector<MotRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_mot: cannot open " + path);
    }
    for (const auto& r : rows) {
        out << r.frame << "," << r.id << "," << fmt(r.box.left()) << ","
            << fmt(r.box.top()) << "," << fmt(r.box.w) << "," << fmt(r.box.h) << ","
            << fmt(r.score) << "," << r.cls;
        if (r.visibility >= 0.0) {
            out << "," << fmt(r.visibility);
        } else {
            out << ",-1,-1";
        }
        out << "\n";
    }
}

std::map<int, std::vector<Detection>> to_detections(const std::vector<MotRow>& rows) {
    std::map<int, std::vector<Detection>> out;
    for (const auto& r : rows) {
        out[r.frame].push_back({r.frame, r.box, r.score});
    }
    return out;
}

training::TrajectorySet to_trajectories(const std::vector<MotRow>& rows) {
    training::TrajectorySet set;
    for (const auto& r : rows) {
        set[r.id].emplace_back(r.frame, r.box);
    }
    for (auto& [id, traj] : set) {
        std::sort(traj.begin(), traj.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return set;
}

std::vector<MotRow> from_track_rows(const std::vector<TrackRow>& rows) {
    std::vector<MotRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        MotRow m;
        m.frame = r.frame;
        m.id = r.id;
        m.box = r.box;
        m.score = r.score;
        out.push_back(m);
    }
    return out;
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_kv: cannot open " + path);
    }
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("read_kv: malformed line " +
                                     std::to_string(line_no) + " in " + path);
        }
        out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_kv: cannot open " + path);
    }
    for (const auto& [k, v] : entries) {
        out << k << " = " << v << "\n";
    }
}

}  // namespace crowdtrack::evalio
