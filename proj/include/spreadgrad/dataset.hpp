#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spreadgrad/albers.hpp"
#include "spreadgrad/csv.hpp"
#include "spreadgrad/types.hpp"

namespace spreadgrad {

/// Explicit mapping from dataset roles to CSV column names.
struct ColumnSchema {
    std::string id = "id";
    std::string x = "x";  // easting in km, or longitude in degrees when geographic
    std::string y = "y";  // northing in km, or latitude in degrees when geographic
    std::string year = "year";
    bool geographic = false;
    AlbersConfig projection{};
    // Covariate columns to keep; empty keeps every column not named above.
    std::vector<std::string> covariates;
    std::uint64_t jitter_seed = 0;
};

struct LoadResult {
    WaitingTimeDataset data;
    std::size_t dropped_missing_year = 0;
    std::size_t jittered_duplicates = 0;
    std::vector<std::string> warnings;
};

// Duplicate sites are nudged by this distance so that the covariance stays invertible.
inline constexpr double kDuplicateJitterKm = 1e-6;

LoadResult load_dataset(const std::filesystem::path& path, const ColumnSchema& schema = {});
LoadResult load_dataset(const csv::Table& table, const ColumnSchema& schema);

/// Writes id, x, y, year and covariate columns with round-trip exact numbers.
void save_dataset(const std::filesystem::path& path, const WaitingTimeDataset& data);

}  // namespace spreadgrad
