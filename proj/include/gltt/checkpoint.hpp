#pragma once

#include <string>

#include "gltt/diffcore.hpp"

namespace gltt {

/// Text checkpoint container.
///
///   GLTT-CHECKPOINT 1
///   seed <uint64>
///   config <length-in-bytes>
///   <config JSON, exactly that many bytes>
///   params <entry count>
///   <name> <rows> <cols>
///   <rows·cols values, row-major, %.17g, one row per line>
///   ...
///
/// Values are printed with 17 significant digits so a save/load round trip is
/// bit-exact.
struct Checkpoint {
  ParamStore params;
  std::string config_json;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_json);
/// Throws DataError on I/O or syntax problems, VersionError on a magic or
/// version mismatch.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gltt
