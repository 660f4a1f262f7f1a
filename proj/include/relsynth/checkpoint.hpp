#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "relsynth/vae.hpp"

// Single-file binary checkpoint. Layout (documented in the README, version 1,
// all integers and IEEE-754 doubles little-endian):
//   magic "RSYN", u32 version, u64 schema fingerprint, the resolved training
//   config, the per-table codecs, then every parameter array as
//   (name, rows, cols, raw doubles). Round trips are bit-exact.

namespace relsynth {

class VersionMismatch : public std::runtime_error {
public:
    VersionMismatch(std::uint32_t expected, std::uint32_t got)
        : std::runtime_error("checkpoint format version " + std::to_string(got) +
                             ", this build reads version " + std::to_string(expected)) {}
    explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};

void save_checkpoint(const GraphVaeModel& model, const std::filesystem::path& path);
GraphVaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace relsynth
