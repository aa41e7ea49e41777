#pragma once

#include "tempshift/models.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace tempshift {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
    /// Free-form extras (window geometry, loss mode, ...), stored as key=value.
    std::map<std::string, std::string> extra;
};

struct LoadedCheckpoint {
    std::unique_ptr<Model> model;
    CheckpointMeta meta;
};

/// Layout: a text header (magic line, [model] spec as key=value, [meta]
/// key=value, blank line), then one record per parameter: a text line
/// "param <name> <n> <c> <d> <h> <w>" followed by little-endian float32 data.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointMeta& meta);

/// Rebuilds the model from the stored spec and loads its parameters. Throws
/// DataError on a malformed file, missing or mis-shaped parameters, or when
/// `expected` is given and differs from the stored spec.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<ModelSpec>& expected = std::nullopt);

} // namespace tempshift
