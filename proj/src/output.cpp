#include "noiselab/output.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <unistd.h>

#include "noiselab/error.hpp"

namespace noiselab {

std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(const std::vector<double>& row)
{
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row)
        cells.push_back(format_real(v));
    add_cells(std::move(cells));
}

void CsvTable::add_cells(std::vector<std::string> row)
{
    if (row.size() != header_.size())
        throw DimensionError("CSV row has " + std::to_string(row.size()) + " cells, header has " +
                             std::to_string(header_.size()));
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_)
        line(r);
    return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {
std::atomic<unsigned> g_stage_counter{0};
}

StagedDir::StagedDir(std::filesystem::path final_dir) : final_(std::move(final_dir))
{
    auto parent = final_.parent_path();
    if (parent.empty())
        parent = ".";
    std::filesystem::create_directories(parent);
    stage_ = parent / ("." + final_.filename().string() + ".partial-" + std::to_string(::getpid()) + "-" +
                       std::to_string(g_stage_counter++));
    std::filesystem::remove_all(stage_);
    std::filesystem::create_directories(stage_);
}

StagedDir::~StagedDir()
{
    if (!done_) {
        std::error_code ec;
        std::filesystem::remove_all(stage_, ec);
    }
}

void StagedDir::commit()
{
    std::filesystem::remove_all(final_);
    std::filesystem::rename(stage_, final_);
    done_ = true;
}

} // namespace noiselab
