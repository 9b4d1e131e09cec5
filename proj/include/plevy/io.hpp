#pragma once
// Output writers. Every file carries the artifact version, the resolved
// config hash and the seed: CSV and JSON carry them inline, raw binary state
// dumps (little-endian float64, one row per state) get a JSON sidecar
// <name>.meta.json so the payload stays raw.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plevy/mesh.hpp"

namespace plevy {

struct OutputMeta {
    std::string version;
    std::string config_hash;
    uint64_t seed = 0;
};

// Fixed shortest-roundtrip formatting keeps outputs byte-identical across
// runs and thread counts.
std::string format_double(double value);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const OutputMeta& meta,
              const std::vector<std::string>& columns);

    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

void write_json_report(const std::string& path, const OutputMeta& meta,
                       const nlohmann::json& payload);

void write_state_binary(const std::string& path, const OutputMeta& meta,
                        const std::vector<NodalField>& states);

std::vector<NodalField> read_state_binary(const std::string& path, int node_count);

}  // namespace plevy
