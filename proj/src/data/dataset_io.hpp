#pragma once

#include "data/epi_data.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mepo::data {

/// Locations of the CSV inputs. Empty optional paths are skipped.
struct DataPaths
{
    std::string regions;
    std::string cases;
    std::string movement;
    std::string flows_static;
    std::string flows_dynamic;
    std::string unique_users;
    std::string distances;
    std::string truth;

    /// Standard file names inside one directory; only existing files are kept
    /// for optional inputs.
    static DataPaths in_directory(const std::filesystem::path& dir);
    std::vector<std::string> present() const;
};

RegionTable read_regions(const std::string& path);
Array read_static_flows(const std::string& path, const RegionTable& regions, const std::string& value_column);

/// Dynamic OD flows [T, N, N] for days [start, start + days); every day must
/// have at least one record.
Array read_dynamic_flows(const std::string& path, const RegionTable& regions, const Date& start, std::size_t days);

Dataset load_dataset(const DataPaths& paths);

/// Writes every populated table of ds under dir using the standard names.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

void write_regions(const RegionTable& regions, const std::filesystem::path& path);
void write_matrix(const Array& m, const RegionTable& regions, const std::filesystem::path& path,
                  const std::string& value_column);
void write_dynamic_flows(const Array& flows, const RegionTable& regions, const Date& start,
                         const std::filesystem::path& path);

} // namespace mepo::data
