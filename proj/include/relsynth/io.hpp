#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relsynth/relational.hpp"

// CSV ingestion against a schema config file, and CSV write-out of datasets.
// CSV dialect is fixed: comma separator, double-quote escaping, mandatory
// header row. Empty cells are Missing. DateTimes are ISO-8601 (UTC).

namespace relsynth {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class FileNotFound : public IoError {
public:
    explicit FileNotFound(const std::string& path) : IoError("file not found: " + path) {}
};

class ParseError : public IoError {
public:
    ParseError(const std::string& file, std::size_t line, std::size_t column,
               const std::string& what)
        : IoError(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          file(file),
          line(line),
          column(column) {}
    std::string file;
    std::size_t line;
    std::size_t column;
};

class ValidationFailed : public std::runtime_error {
public:
    explicit ValidationFailed(ValidationReport r)
        : std::runtime_error("dataset failed validation:\n" + r.to_text()),
          report(std::move(r)) {}
    ValidationReport report;
};

/// Seconds since the Unix epoch for "YYYY-MM-DD[THH:MM:SS[Z]]"; nullopt if malformed.
std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_seconds);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

struct TableConfig {
    std::string name;
    std::string csv;  // path, relative to the config file's directory
    std::vector<AttributeSpec> attributes;
};

struct SchemaConfig {
    std::string dataset_name;
    std::vector<TableConfig> tables;
    std::vector<LinkTriple> links;
    std::filesystem::path base_dir;  // directory the config was loaded from

    std::string primary_table() const;       // primary of the first link
    std::string identifier_attribute() const;
};

/// Reads the JSON schema config (see README for the format).
SchemaConfig load_schema(const std::filesystem::path& config_path);

/// Loads and validates the dataset described by the config. Cells are parsed
/// per the declared attribute kind; empty cells become Missing.
RelationalDataset load_dataset(const SchemaConfig& config);

/// Writes one CSV per table into `dir`, named `<table>.csv`, preserving header
/// and attribute order. Numbers are serialized with shortest round-trip text.
void write_synthetic_dataset(const RelationalDataset& dataset, const std::filesystem::path& dir);

}  // namespace relsynth
