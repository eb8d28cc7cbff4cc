#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mtdc/grid.hpp"

namespace mtdc::io {

inline constexpr int kSchemaVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

/// "fnv1a64:" followed by 16 hex digits of the hash of the canonical grid JSON.
std::string grid_fingerprint(const GridSpec& spec);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const Eigen::MatrixXd& m);  // row-major list of rows

/// Writes `doc` with "schema" set, two-space indent and a trailing newline.
/// Creates missing parent folders. Throws std::runtime_error on I/O failure.
void write_json(const std::filesystem::path& path, nlohmann::json doc);
nlohmann::json read_json(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels);

struct StageRecord {
    std::string stage;
    std::string status;
    int exit_code = 0;
    std::vector<std::string> artifacts;  // relative to the output folder
    nlohmann::json result;
};

struct RunReport {
    std::string fingerprint;
    std::vector<StageRecord> stages;  // execution order
};

/// Pipeline order of the stage files inside an output folder.
const std::vector<std::string>& stage_names();
std::string stage_file(std::string_view stage);

struct ReportProblems {
    std::vector<std::string> missing_stages;
    std::vector<std::string> missing_artifacts;
    std::vector<std::string> other;

    bool empty() const { return missing_stages.empty() && missing_artifacts.empty() && other.empty(); }
};

/// Collects the stage files in `dir`. Problems are listed rather than thrown.
RunReport collect_report(const std::filesystem::path& dir, ReportProblems& problems);

nlohmann::json to_json(const RunReport& r);
std::string summary_table(const RunReport& r);

} // namespace mtdc::io
