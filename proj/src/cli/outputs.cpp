#include "cli/outputs.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace remag::cli {

namespace fs = std::filesystem;

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size())
        throw std::logic_error("Table::add: row width differs from header");
    rows.push_back(std::move(row));
}

std::string format_cell(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isnan(*d))
            return "nan";
        if (std::isinf(*d))
            return *d > 0 ? "inf" : "-inf";
        char buf[40];
        for (int prec = 12; prec <= 17; ++prec) {
            std::snprintf(buf, sizeof buf, "%.*g", prec, *d);
            if (prec == 17 || std::strtod(buf, nullptr) == *d)
                break;
        }
        return buf;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    return std::get<std::string>(c);
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

OutputSet::OutputSet(fs::path dir, std::string command, const ScenarioConfig& cfg)
    : dir_(std::move(dir)), command_(std::move(command)), cfg_(cfg), started_(utc_now())
{
    if (!fs::exists(dir_)) {
        fs::create_directories(dir_);
        created_dir_ = true;
    } else if (!fs::is_directory(dir_)) {
        throw std::runtime_error("output path exists and is not a directory: " + dir_.string());
    }
    warnings_ = cfg.warnings;
}

OutputSet::~OutputSet()
{
    if (committed_)
        return;
    std::error_code ec;
    for (const auto& f : files_)
        fs::remove(dir_ / f, ec);
    fs::remove(dir_ / "manifest.json", ec);
    if (created_dir_ && fs::is_empty(dir_, ec))
        fs::remove(dir_, ec);
}

void OutputSet::track(const fs::path& p)
{
    const std::string name = p.filename().string();
    for (const auto& f : files_)
        if (f == name)
            throw std::logic_error("output file written twice: " + name);
    files_.push_back(name);
}

void OutputSet::warn(const std::string& w)
{
    for (const auto& x : warnings_)
        if (x == w)
            return;
    warnings_.push_back(w);
}

nlohmann::json OutputSet::metadata() const
{
    nlohmann::json m;
    m["tool"] = "remag";
    m["version"] = tool_version;
    m["command"] = command_;
    m["config_hash"] = cfg_.hash();
    m["seed"] = cfg_.seed;
    m["warnings"] = warnings_;
    return m;
}

void OutputSet::csv(const std::string& name, const Table& table, const nlohmann::json& summary)
{
    const fs::path path = dir_ / (name + ".csv");
    track(path);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "# tool: remag " << tool_version << "\n";
    out << "# command: " << command_ << "\n";
    out << "# config_hash: " << cfg_.hash() << "\n";
    out << "# seed: " << cfg_.seed << "\n";
    out << "# units: frequencies in MHz (ordinary), times in us, sensitivities in T/sqrt(Hz)\n";
    for (const auto& w : warnings_)
        out << "# warning: " << w << "\n";
    for (const auto& n : table.notes)
        out << "# " << n << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_cell(row[i]);
        out << "\n";
    }
    out.close();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());

    nlohmann::json side = metadata();
    side["file"] = name + ".csv";
    side["columns"] = table.columns;
    side["rows"] = table.rows.size();
    side["notes"] = table.notes;
    side["summary"] = summary;
    json(name, side);
}

void OutputSet::json(const std::string& name, const nlohmann::json& body)
{
    const fs::path path = dir_ / (name + ".json");
    track(path);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << body.dump(2) << "\n";
    out.close();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

void OutputSet::commit()
{
    nlohmann::json m = metadata();
    m["started_utc"] = started_;
    m["finished_utc"] = utc_now();
    m["files"] = files_;
    m["config"] = cfg_.resolved();
    m["config_source"] = cfg_.source_file.empty() ? "<defaults>" : cfg_.source_file;
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << m.dump(2) << "\n";
    out.close();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
    committed_ = true;
}

} // namespace remag::cli
