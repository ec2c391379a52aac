#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rdg/dynamics.hpp"

namespace rdg {

/// Writes `content` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

/// Full opinion recording with a JSON header describing how it was produced.
///
/// Binary layout (little-endian): magic "RDGTRAJ1", uint64 header length,
/// header bytes, uint64 node count, uint64 layer count, then the layers as
/// row-major float64.
struct TrajectorySnapshot {
    std::string header_json;
    std::vector<std::vector<double>> layers;  // layers[t][agent]
};

std::string encode_snapshot(const TrajectorySnapshot& snap);
TrajectorySnapshot decode_snapshot(std::string_view bytes);

void write_snapshot(const std::filesystem::path& path, const TrajectorySnapshot& snap);
TrajectorySnapshot read_snapshot(const std::filesystem::path& path);

/// CSV with a `# seed:` and `# config:` comment header, then one row per time.
/// Columns are every agent for full recordings and the probes otherwise.
std::string trajectory_csv(const Trajectory& traj, std::uint64_t seed, std::string_view config_json);

}  // namespace rdg
