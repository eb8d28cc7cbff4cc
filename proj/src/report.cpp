#include "mtdc/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mtdc::io {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string grid_fingerprint(const GridSpec& spec) {
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(mtdc::to_json(spec).dump());
    return os.str();
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void close_out(std::ofstream& os, const fs::path& path) {
    os.close();
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

} // namespace

void write_json(const fs::path& path, json doc) {
    doc["schema"] = kSchemaVersion;
    auto os = open_out(path);
    os << doc.dump(2) << '\n';
    close_out(os, path);
}

json read_json(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    auto os = open_out(path);
    os << "# schema=" << kSchemaVersion << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << '\n';
    }
    close_out(os, path);
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
    std::vector<std::string> header{"row"};
    header.insert(header.end(), labels.begin(), labels.end());
    auto os = open_out(path);
    os << "# schema=" << kSchemaVersion << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << format_double(m(i, j));
        os << '\n';
    }
    close_out(os, path);
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"powerflow", "stability", "simulation", "mmc"};
    return names;
}

std::string stage_file(std::string_view stage) { return std::string(stage) + ".json"; }

RunReport collect_report(const fs::path& dir, ReportProblems& problems) {
    RunReport report;
    for (const auto& name : stage_names()) {
        const fs::path file = dir / stage_file(name);
        if (!fs::exists(file)) {
            problems.missing_stages.push_back(name);
            continue;
        }
        json doc;
        try {
            doc = read_json(file);
        } catch (const std::exception& e) {
            problems.other.push_back(e.what());
            continue;
        }
        StageRecord rec;
        rec.stage = name;
        rec.status = doc.value("status", std::string("unknown"));
        rec.exit_code = doc.value("exit_code", 1);
        if (doc.contains("artifacts"))
            for (const auto& a : doc["artifacts"]) {
                rec.artifacts.push_back(a.get<std::string>());
                if (!fs::exists(dir / a.get<std::string>())) problems.missing_artifacts.push_back((dir / a.get<std::string>()).generic_string());
            }
        if (doc.contains("fingerprint")) {
            const auto fp = doc["fingerprint"].get<std::string>();
            if (report.fingerprint.empty())
                report.fingerprint = fp;
            else if (fp != report.fingerprint)
                problems.other.push_back(name + " was run on a different grid (" + fp + ")");
        }
        doc.erase("schema");
        rec.result = std::move(doc);
        report.stages.push_back(std::move(rec));
    }
    return report;
}

json to_json(const RunReport& r) {
    json doc;
    doc["fingerprint"] = r.fingerprint;
    json stages = json::array();
    for (const auto& s : r.stages) {
        json j;
        j["stage"] = s.stage;
        j["status"] = s.status;
        j["exit_code"] = s.exit_code;
        j["artifacts"] = s.artifacts;
        j["result"] = s.result;
        stages.push_back(std::move(j));
    }
    doc["stages"] = std::move(stages);
    return doc;
}

namespace {

std::string headline(const StageRecord& s) {
    const auto& r = s.result;
    std::ostringstream os;
    os << std::setprecision(4);
    auto num = [&](const char* key) { return r.contains(key) && r[key].is_number() ? r[key].get<double>() : NAN; };
    if (s.stage == "powerflow")
        os << "alpha " << num("alpha") << ", iterations " << r.value("iterations", 0);
    else if (s.stage == "stability")
        os << "min eig Q " << num("min_eig_q") << ", max eig Psi " << num("max_eig_psi");
    else if (s.stage == "simulation" && r.contains("settle"))
        os << "settle distance " << r["settle"].value("distance", NAN) << ", W monotone "
           << (r.contains("lyapunov") && r["lyapunov"].value("non_increasing", false) ? "yes" : "no");
    else if (s.stage == "mmc")
        os << "tau " << num("tau_est") * 1e3 << " ms, rms " << num("rms_residual");
    return os.str();
}

} // namespace

std::string summary_table(const RunReport& r) {
    std::ostringstream os;
    os << "grid " << (r.fingerprint.empty() ? "-" : r.fingerprint) << '\n';
    os << std::left << std::setw(12) << "stage" << std::setw(14) << "status" << std::setw(6) << "exit"
       << "summary\n";
    for (const auto& s : r.stages)
        os << std::left << std::setw(12) << s.stage << std::setw(14) << s.status << std::setw(6) << s.exit_code
           << headline(s) << '\n';
    return os.str();
}

} // namespace mtdc::io
