#include "report.hpp"

#include <cmath>

namespace stfluct::cli {

namespace {

nlohmann::ordered_json number_or_null(const std::optional<double>& v)
{
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::string csv_number(const std::optional<double>& v)
{
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

nlohmann::ordered_json to_json(const Report& r, const char* version)
{
    nlohmann::ordered_json j;
    j["schema"] = kJsonSchema;
    j["tool"] = "stfluct";
    j["version"] = version;
    j["command"] = r.command;
    j["seed"] = r.seed;
    j["config"] = r.config;
    j["samples"] = r.samples;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json o;
        o["name"] = row.name;
        o["value"] = number_or_null(row.value);
        if (row.standard_error) o["standard_error"] = number_or_null(row.standard_error);
        if (row.reference) o["reference"] = number_or_null(row.reference);
        if (row.passed) o["passed"] = *row.passed;
        if (!row.note.empty()) o["note"] = row.note;
        rows.push_back(std::move(o));
    }
    j["results"] = std::move(rows);
    j["passed"] = r.all_passed();
    return j;
}

void write_json(std::ostream& os, const Report& r, const char* version) { os << to_json(r, version).dump(2) << '\n'; }

void write_csv(std::ostream& os, const Report& r, const char* version)
{
    os << "# " << kCsvSchema << '\n';
    os << "# tool=stfluct version=" << version << " command=" << r.command << " seed=" << r.seed << '\n';
    os << "# config=" << r.config.dump() << '\n';
    os << "# samples=" << r.samples.dump() << '\n';
    os << "name,value,standard_error,reference,passed,note\n";
    for (const auto& row : r.rows) {
        os << csv_field(row.name) << ',' << csv_number(row.value) << ',' << csv_number(row.standard_error) << ','
           << csv_number(row.reference) << ',' << (row.passed ? (*row.passed ? "true" : "false") : "") << ','
           << csv_field(row.note) << '\n';
    }
}

} // namespace stfluct::cli
