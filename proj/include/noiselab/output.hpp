#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace noiselab {

std::string format_real(double v);   // %.17g, C locale

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add(const std::vector<double>& row);
    void add_cells(std::vector<std::string> row);
    std::string str() const;
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Builds an output directory next to its final location and moves it into place on commit;
// an uncommitted stage is deleted, so failures never leave partial results behind.
class StagedDir {
public:
    explicit StagedDir(std::filesystem::path final_dir);
    ~StagedDir();
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;

    const std::filesystem::path& path() const { return stage_; }
    void commit();

private:
    std::filesystem::path final_;
    std::filesystem::path stage_;
    bool done_ = false;
};

} // namespace noiselab
