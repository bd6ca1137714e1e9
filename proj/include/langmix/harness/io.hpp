#pragma once

// Files written by the CLI: CSV tables with 17 significant digits, JSON
// reports, and a run manifest that exists (as "incomplete") before any
// result does.

#include "langmix/types.hpp"

#include "json.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace langmix::harness {

using json = nlohmann::json;

std::string fmt17(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

void write_csv(const std::string& path, const CsvTable& t);
CsvTable read_csv(const std::string& path);

// one point per row, d columns; a non-numeric first line is taken as a header
Matrix read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, const Matrix& points);

// 2-space indented, trailing newline; written through a temporary + rename
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);
void ensure_dir(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& file);

class ManifestWriter {
  public:
    ManifestWriter(std::string path, const std::string& command, json config_echo);
    json& body() { return body_; }
    void complete();
    void fail(const std::string& reason);

  private:
    void flush();

    std::string path_;
    json body_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace langmix::harness
