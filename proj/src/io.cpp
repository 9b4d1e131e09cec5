#include "plevy/io.hpp"

#include <cstdio>
#include <cstring>

#include "plevy/errors.hpp"

namespace plevy {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

void write_meta_lines(std::ofstream& out, const OutputMeta& meta) {
    out << "# version: " << meta.version << "\n";
    out << "# config_hash: " << meta.config_hash << "\n";
    out << "# seed: " << meta.seed << "\n";
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const OutputMeta& meta,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path), columns_(columns.size()) {
    if (!out_) throw DataError("cannot open output file: " + path);
    write_meta_lines(out_, meta);
    for (std::size_t i = 0; i < columns.size(); ++i)
        out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw DataError("csv row width mismatch: " + path_);
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << format_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::raw_row(const std::string& line) {
    out_ << line << "\n";
}

void write_json_report(const std::string& path, const OutputMeta& meta,
                       const nlohmann::json& payload) {
    nlohmann::json doc;
    doc["meta"] = {{"version", meta.version},
                   {"config_hash", meta.config_hash},
                   {"seed", meta.seed}};
    doc["report"] = payload;
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file: " + path);
    out << doc.dump(2) << "\n";
}

void write_state_binary(const std::string& path, const OutputMeta& meta,
                        const std::vector<NodalField>& states) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    for (const auto& state : states) {
        for (double value : state.v) {
            uint64_t bits;
            std::memcpy(&bits, &value, sizeof(bits));
            unsigned char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
            out.write(reinterpret_cast<const char*>(bytes), 8);
        }
    }
    nlohmann::json sidecar = {{"version", meta.version},
                              {"config_hash", meta.config_hash},
                              {"seed", meta.seed},
                              {"rows", states.size()},
                              {"cols", states.empty() ? 0 : states.front().size()},
                              {"dtype", "float64-le"}};
    std::ofstream side(path + ".meta.json");
    if (!side) throw DataError("cannot open sidecar file: " + path + ".meta.json");
    side << sidecar.dump(2) << "\n";
}

std::vector<NodalField> read_state_binary(const std::string& path, int node_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open state file: " + path);
    std::vector<NodalField> states;
    for (;;) {
        NodalField field(static_cast<std::size_t>(node_count));
        for (int i = 0; i < node_count; ++i) {
            unsigned char bytes[8];
            if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
                if (i == 0) return states;
                throw DataError("truncated state file: " + path);
            }
            uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(bytes[b]) << (8 * b);
            double value;
            std::memcpy(&value, &bits, sizeof(value));
            field[i] = value;
        }
        states.push_back(std::move(field));
    }
}

}  // namespace plevy
