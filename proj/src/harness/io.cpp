#include "langmix/harness/io.hpp"

#include "langmix/rng.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace langmix::harness {

namespace fs = std::filesystem;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + path);
        out << text;
        if (!out)
            throw Error("write failed for " + path);
    }
    fs::rename(tmp, p);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
    const std::string t = trim(s);
    if (t.empty())
        return false;
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

void write_csv(const std::string& path, const CsvTable& t) {
    if (t.header.size() != t.columns.size())
        throw ContractViolation("CSV header and column counts differ");
    const std::size_t rows = t.columns.empty() ? 0 : t.columns[0].size();
    for (const auto& c : t.columns)
        if (c.size() != rows)
            throw ContractViolation("CSV columns have different lengths");
    std::string s;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        s += (i ? "," : "") + t.header[i];
    s += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            s += (i ? "," : "") + fmt17(t.columns[i][r]);
        s += '\n';
    }
    write_text(path, s);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(path + " is empty");
    for (auto& h : split(line))
        t.header.push_back(trim(h));
    t.columns.resize(t.header.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": wrong number of fields");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v;
            if (!parse_double(cells[i], v))
                throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number: " + cells[i]);
            t.columns[i].push_back(v);
        }
    }
    return t;
}

Matrix read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split(line);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            double v;
            if (!parse_double(c, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (rows.empty() && lineno == 1)
                continue; // header
            throw ConfigError(path + ":" + std::to_string(lineno) + ": non-numeric field");
        }
        if (!rows.empty() && row.size() != rows[0].size())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ConfigError(path + " holds no points");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

void write_points_csv(const std::string& path, const Matrix& p) {
    std::string s;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.cols(); ++c)
            s += (c ? "," : "") + fmt17(p(r, c));
        s += '\n';
    }
    write_text(path, s);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + " is not valid JSON: " + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty())
        fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

ManifestWriter::ManifestWriter(std::string path, const std::string& command, json config_echo)
    : path_(std::move(path)), start_(std::chrono::steady_clock::now()) {
    body_["status"] = "incomplete";
    body_["command"] = command;
    body_["config"] = std::move(config_echo);
    body_["rng_algorithm"] = kRngAlgorithm;
    body_["library_version"] = kVersion;
    body_["wall_clock"] = {{"started_utc", utc_now()}};
    body_["constants"] = json::object();
    body_["checks"] = json::array();
    flush();
}

void ManifestWriter::complete() {
    body_["status"] = "complete";
    flush();
}

void ManifestWriter::fail(const std::string& reason) {
    body_["status"] = "failed";
    body_["error"] = reason;
    flush();
}

void ManifestWriter::flush() {
    body_["wall_clock"]["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(path_, body_);
}

} // namespace langmix::harness
