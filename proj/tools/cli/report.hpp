#pragma once

// Report model shared by all subcommands: a reproducibility header and a list
// of named rows, rendered as one JSON document or as CSV.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace stfluct::cli {

struct Row {
    std::string name;
    std::optional<double> value;
    std::optional<double> standard_error;
    std::optional<double> reference;
    std::optional<bool> passed;
    std::string note;
};

struct Report {
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    nlohmann::ordered_json samples = nlohmann::ordered_json::object();
    std::vector<Row> rows;

    Row& add(std::string name, std::optional<double> value)
    {
        rows.push_back({std::move(name), value, {}, {}, {}, {}});
        return rows.back();
    }

    Row& check(std::string name, double value, double reference, std::optional<double> se, bool passed)
    {
        rows.push_back({std::move(name), value, se, reference, passed, {}});
        return rows.back();
    }

    bool all_passed() const
    {
        for (const auto& r : rows)
            if (r.passed && !*r.passed) return false;
        return true;
    }
};

inline constexpr const char* kCsvSchema = "stfluct-csv v1";
inline constexpr const char* kJsonSchema = "stfluct-report v1";

nlohmann::ordered_json to_json(const Report& r, const char* version);
void write_json(std::ostream& os, const Report& r, const char* version);
void write_csv(std::ostream& os, const Report& r, const char* version);

} // namespace stfluct::cli
