#pragma once

// CSV tables with a '#' metadata block, JSON sidecars and the run manifest.
// Files written through an OutputSet are removed again unless the run
// commits.

#include "cli/config.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace remag::cli {

inline constexpr const char* tool_version = "0.1.0";

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> notes; // extra '#' lines

    explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}
    void add(std::vector<Cell> row);
};

/// Shortest round-trip decimal for doubles, so equal values print equally.
std::string format_cell(const Cell& c);

class OutputSet {
  public:
    OutputSet(std::filesystem::path dir, std::string command, const ScenarioConfig& cfg);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    /// Writes name.csv and its name.json sidecar (metadata plus `summary`).
    void csv(const std::string& name, const Table& table, const nlohmann::json& summary = nlohmann::json::object());
    void json(const std::string& name, const nlohmann::json& body);
    void warn(const std::string& w);

    /// Writes manifest.json and keeps everything.
    void commit();

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

  private:
    nlohmann::json metadata() const;
    void track(const std::filesystem::path& p);

    std::filesystem::path dir_;
    bool created_dir_ = false;
    std::string command_;
    const ScenarioConfig& cfg_;
    std::string started_;
    std::vector<std::string> files_;
    std::vector<std::string> warnings_;
    bool committed_ = false;
};

std::string utc_now();

} // namespace remag::cli
