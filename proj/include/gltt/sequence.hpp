#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gltt/geometry.hpp"

namespace gltt {

struct Frame {
  PointCloud cloud;
  std::optional<Box3D> gt;
};

struct Sequence {
  std::string name;
  std::string category;
  std::vector<Frame> frames;

  /// First-frame ground truth; throws DataError when absent.
  const Box3D& template_box() const;
  /// Throws DataError when there are fewer than two frames, frame 0 lacks a
  /// box, or (if `require_all_gt`) any frame lacks one.
  void validate(bool require_all_gt) const;
};

/// On-disk sequence layout (one directory per sequence):
///
///   manifest.txt   "gltt-sequence 1", "category <name>", "frames <N>",
///                  then N point-file names, one per line
///   gt.txt         "# gltt-gt 1 frame cx cy cz w h l yaw", then one line
///                  per frame with a box
///   <point files>  one "x y z" per line, meters
///
/// Numbers are written with 17 significant digits.
void write_sequence(const std::string& dir, const Sequence& seq);
Sequence read_sequence(const std::string& dir);

/// Every immediate subdirectory holding a manifest.txt, in name order.
std::vector<Sequence> read_dataset(const std::string& dir);
/// Writes sequences to `<dir>/<name>` (names default to seq_000, seq_001, ...).
void write_dataset(const std::string& dir, const std::vector<Sequence>& seqs);

}  // namespace gltt
