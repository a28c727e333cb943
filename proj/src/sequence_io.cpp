#include "gltt/sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gltt/error.hpp"

namespace fs = std::filesystem;

namespace gltt {

const Box3D& Sequence::template_box() const {
  if (frames.empty() || !frames.front().gt)
    throw DataError("sequence '" + name + "': first frame has no ground-truth box");
  return *frames.front().gt;
}

void Sequence::validate(bool require_all_gt) const {
  if (frames.size() < 2)
    throw DataError("sequence '" + name + "': needs at least 2 frames");
  template_box().validate();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (require_all_gt && !frames[k].gt)
      throw DataError("sequence '" + name + "': frame " + std::to_string(k) + " has no box");
    try {
      frames[k].cloud.validate();
    } catch (const Error& e) {
      throw DataError("sequence '" + name + "': frame " + std::to_string(k) + ": " + e.what());
    }
  }
}

namespace {

constexpr const char* kManifestMagic = "gltt-sequence";
constexpr const char* kGtMagic = "# gltt-gt";
constexpr int kFormatVersion = 1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

Matrix read_points(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot read point file '" + p.string() + "'");
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z))
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected 'x y z'");
    vals.insert(vals.end(), {x, y, z});
  }
  const std::size_t n = vals.size() / 3;
  return Matrix(n, 3, std::move(vals));
}

}  // namespace

void write_sequence(const std::string& dir, const Sequence& seq) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw DataError("cannot create '" + dir + "': " + ec.message());

  auto manifest = open_out(root / "manifest.txt");
  manifest << kManifestMagic << ' ' << kFormatVersion << '\n';
  manifest << "category " << (seq.category.empty() ? "unknown" : seq.category) << '\n';
  manifest << "frames " << seq.frames.size() << '\n';
  auto gt = open_out(root / "gt.txt");
  gt << kGtMagic << ' ' << kFormatVersion << " frame cx cy cz w h l yaw\n";

  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.txt", k);
    manifest << name << '\n';
    auto pts = open_out(root / name);
    const Matrix& c = seq.frames[k].cloud.coords;
    for (std::size_t i = 0; i < c.rows(); ++i)
      pts << fmt(c(i, 0)) << ' ' << fmt(c(i, 1)) << ' ' << fmt(c(i, 2)) << '\n';
    if (const auto& b = seq.frames[k].gt) {
      gt << k;
      for (double v : {b->center[0], b->center[1], b->center[2], b->size[0], b->size[1],
                       b->size[2], b->yaw})
        gt << ' ' << fmt(v);
      gt << '\n';
    }
  }
}

Sequence read_sequence(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream manifest(root / "manifest.txt");
  if (!manifest) throw DataError("'" + dir + "' has no manifest.txt");
  std::string magic, key;
  int version = 0;
  manifest >> magic >> version;
  if (magic != kManifestMagic || version != kFormatVersion)
    throw DataError("'" + dir + "/manifest.txt': expected '" + kManifestMagic + " " +
                    std::to_string(kFormatVersion) + "'");
  Sequence seq;
  seq.name = root.filename().string();
  if (seq.name.empty()) seq.name = root.parent_path().filename().string();
  std::size_t count = 0;
  manifest >> key >> seq.category;
  if (key != "category") throw DataError("manifest: expected 'category'");
  manifest >> key >> count;
  if (!manifest || key != "frames") throw DataError("manifest: expected 'frames <N>'");
  seq.frames.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::string file;
    if (!(manifest >> file)) throw DataError("manifest: lists fewer than " + std::to_string(count) + " frames");
    seq.frames[k].cloud.coords = read_points(root / file);
  }

  std::ifstream gt(root / "gt.txt");
  if (!gt) throw DataError("'" + dir + "' has no gt.txt");
  std::string line;
  std::getline(gt, line);
  if (line.rfind(std::string(kGtMagic) + " " + std::to_string(kFormatVersion), 0) != 0)
    throw DataError("'" + dir + "/gt.txt': bad header");
  while (std::getline(gt, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::size_t k;
    Box3D b;
    if (!(ls >> k >> b.center[0] >> b.center[1] >> b.center[2] >> b.size[0] >> b.size[1] >>
          b.size[2] >> b.yaw))
      throw DataError("gt.txt: malformed line '" + line + "'");
    if (k >= count) throw DataError("gt.txt: frame " + std::to_string(k) + " out of range");
    try {
      b.validate();
    } catch (const Error& e) {
      throw DataError("gt.txt: frame " + std::to_string(k) + ": " + e.what());
    }
    seq.frames[k].gt = b;
  }
  return seq;
}

std::vector<Sequence> read_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt"))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError("'" + dir + "' contains no sequences");
  std::vector<Sequence> out;
  for (const auto& d : dirs) out.push_back(read_sequence(d.string()));
  return out;
}

void write_dataset(const std::string& dir, const std::vector<Sequence>& seqs) {
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::string name = seqs[i].name;
    if (name.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "seq_%03zu", i);
      name = buf;
    }
    write_sequence((fs::path(dir) / name).string(), seqs[i]);
  }
}

}  // namespace gltt
