#pragma once

#include "numeric/array.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mepo::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic "MEPOCKPT", u32 version, u64 length + JSON
/// metadata, u32 block count, then per block u32 name length, name, u32 rank,
/// u64 dims and little-endian f64 values.
struct Checkpoint
{
    nlohmann::json meta;
    std::vector<std::pair<std::string, nc::Array>> blocks;

    const nc::Array* block(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace mepo::model
