#include "spreadgrad/dataset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <utility>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"
#include "spreadgrad/rng.hpp"

namespace spreadgrad {

WaitingTimeDataset::WaitingTimeDataset(std::vector<WaitingTimeObservation> obs, std::vector<std::string> covariate_names)
    : obs_(std::move(obs)), covariate_names_(std::move(covariate_names)) {
    std::set<std::string> seen;
    for (const auto& c : covariate_names_)
        if (!seen.insert(c).second) throw InputError("duplicate covariate name '" + c + "'");
    for (const auto& o : obs_) {
        if (!o.loc.finite()) throw InputError("observation '" + o.id + "' has non-finite coordinates");
        if (!std::isfinite(o.year)) throw InputError("observation '" + o.id + "' has non-finite year");
    }
}

std::vector<Location> WaitingTimeDataset::locations() const {
    std::vector<Location> out;
    out.reserve(obs_.size());
    for (const auto& o : obs_) out.push_back(o.loc);
    return out;
}

Eigen::VectorXd WaitingTimeDataset::years() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs_.size()));
    for (std::size_t i = 0; i < obs_.size(); ++i) y(static_cast<Eigen::Index>(i)) = obs_[i].year;
    return y;
}

Eigen::MatrixX2d WaitingTimeDataset::coordinates() const {
    Eigen::MatrixX2d c(static_cast<Eigen::Index>(obs_.size()), 2);
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        c(static_cast<Eigen::Index>(i), 0) = obs_[i].loc.x;
        c(static_cast<Eigen::Index>(i), 1) = obs_[i].loc.y;
    }
    return c;
}

void WaitingTimeDataset::require_fit_ready(std::size_t min_n) const {
    if (obs_.size() < min_n)
        throw InputError("dataset has " + std::to_string(obs_.size()) + " observations; at least " +
                         std::to_string(min_n) + " required");
}

Eigen::MatrixXd pairwise_distances(const std::vector<Location>& locs) {
    const auto n = static_cast<Eigen::Index>(locs.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance(locs[i], locs[j]);
    return d;
}

Eigen::MatrixXd pairwise_distances(const WaitingTimeDataset& data) { return pairwise_distances(data.locations()); }

namespace {

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan"; }

}  // namespace

LoadResult load_dataset(const csv::Table& table, const ColumnSchema& schema) {
    const auto id_col = table.require_column(schema.id);
    const auto x_col = table.require_column(schema.x);
    const auto y_col = table.require_column(schema.y);
    const auto year_col = table.require_column(schema.year);

    std::vector<std::string> cov_names = schema.covariates;
    if (cov_names.empty()) {
        for (const auto& h : table.header)
            if (h != schema.id && h != schema.x && h != schema.y && h != schema.year) cov_names.push_back(h);
    }
    std::vector<std::size_t> cov_cols;
    for (const auto& c : cov_names) cov_cols.push_back(table.require_column(c));

    const AlbersProjection proj(schema.projection);
    LoadResult result;
    std::vector<WaitingTimeObservation> obs;
    std::set<std::pair<double, double>> used;
    SplitMix64 jitter_rng(schema.jitter_seed);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t rowno = r + 1;
        if (is_missing(row[year_col])) {
            ++result.dropped_missing_year;
            continue;
        }
        WaitingTimeObservation o;
        o.id = row[id_col];
        o.year = csv::to_double(row[year_col], rowno, schema.year, table.source);
        const double a = csv::to_double(row[x_col], rowno, schema.x, table.source);
        const double b = csv::to_double(row[y_col], rowno, schema.y, table.source);
        if (schema.geographic) {
            try {
                o.loc = proj.project(a, b);
            } catch (const InputError& e) {
                throw InputError(table.source + ": row " + std::to_string(rowno) + ": " + e.what());
            }
        } else {
            o.loc = {a, b};
        }
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            const auto& cell = row[cov_cols[k]];
            o.covariates[cov_names[k]] = is_missing(cell) ? std::numeric_limits<double>::quiet_NaN()
                                                          : csv::to_double(cell, rowno, cov_names[k], table.source);
        }
        if (used.contains({o.loc.x, o.loc.y})) {
            ++result.jittered_duplicates;
            result.warnings.push_back("row " + std::to_string(rowno) + " ('" + o.id +
                                      "') duplicates an earlier location; jittered");
            do {
                const double angle = 2.0 * std::numbers::pi * (static_cast<double>(jitter_rng() >> 11) * 0x1.0p-53);
                o.loc.x += kDuplicateJitterKm * std::cos(angle);
                o.loc.y += kDuplicateJitterKm * std::sin(angle);
            } while (used.contains({o.loc.x, o.loc.y}));
        }
        used.insert({o.loc.x, o.loc.y});
        obs.push_back(std::move(o));
    }
    if (result.dropped_missing_year > 0)
        result.warnings.push_back(std::to_string(result.dropped_missing_year) + " rows dropped for missing year");
    result.data = WaitingTimeDataset(std::move(obs), std::move(cov_names));
    return result;
}

LoadResult load_dataset(const std::filesystem::path& path, const ColumnSchema& schema) {
    return load_dataset(csv::read(path), schema);
}

void save_dataset(const std::filesystem::path& path, const WaitingTimeDataset& data) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    std::vector<std::string> header{"id", "x", "y", "year"};
    for (const auto& c : data.covariate_names()) header.push_back(c);
    csv::write_row(out, header);
    for (const auto& o : data.observations()) {
        std::vector<std::string> row{o.id, csv::format(o.loc.x), csv::format(o.loc.y), csv::format(o.year)};
        for (const auto& c : data.covariate_names()) {
            const auto it = o.covariates.find(c);
            row.push_back(it == o.covariates.end() || std::isnan(it->second) ? std::string{} : csv::format(it->second));
        }
        csv::write_row(out, row);
    }
}

}  // namespace spreadgrad
