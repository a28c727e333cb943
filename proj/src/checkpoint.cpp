#include "gltt/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gltt/error.hpp"

namespace gltt {

namespace {
constexpr const char* kMagic = "GLTT-CHECKPOINT";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "seed " << params.seed() << '\n';
  out << "config " << config_json.size() << '\n' << config_json << '\n';
  out << "params " << params.entry_count() << '\n';
  for (std::size_t i = 0; i < params.entry_count(); ++i) {
    const Param& p = params.entry(i);
    out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (std::size_t r = 0; r < p.value.rows(); ++r) {
      for (std::size_t c = 0; c < p.value.cols(); ++c)
        out << (c ? " " : "") << format_double(p.value(r, c));
      out << '\n';
    }
  }
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string magic, key;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) throw VersionError("'" + path + "' is not a gltt checkpoint");
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  std::uint64_t seed = 0;
  std::size_t config_len = 0;
  in >> key >> seed;
  if (key != "seed") throw DataError("checkpoint: expected 'seed'");
  in >> key >> config_len;
  if (key != "config") throw DataError("checkpoint: expected 'config'");
  in.get();
  std::string config(config_len, '\0');
  in.read(config.data(), static_cast<std::streamsize>(config_len));
  std::size_t count = 0;
  in >> key >> count;
  if (!in || key != "params") throw DataError("checkpoint: expected 'params'");

  Checkpoint ck{ParamStore(seed), std::move(config)};
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (!in) throw DataError("checkpoint: truncated entry header");
    Param& p = ck.params.add(name, rows, cols);
    for (double& v : p.value.values()) {
      std::string tok;
      in >> tok;
      if (!in) throw DataError("checkpoint: truncated values for '" + name + "'");
      try {
        v = std::stod(tok);
      } catch (const std::exception&) {
        throw DataError("checkpoint: bad number '" + tok + "' in '" + name + "'");
      }
    }
  }
  return ck;
}

}  // namespace gltt
