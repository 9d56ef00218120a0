#include "spinlab/io.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <sstream>
#include <system_error>

#include "spinlab/errors.hpp"

namespace spinlab {

namespace {

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string format_int(std::int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CSV needs columns");
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw io_error("cannot open " + path);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << quote_csv(columns[i]);
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_)
    throw std::invalid_argument("CSV row has " + std::to_string(cells.size()) +
                                " cells, header has " +
                                std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::int64_t>) {
            out_ << format_int(v);
          } else if constexpr (std::is_same_v<T, double>) {
            out_ << format_double(v);
          } else {
            out_ << quote_csv(v);
          }
        },
        cells[i]);
  }
  out_ << '\n';
  if (!out_) throw io_error("write failed on " + path_);
}

std::string resolve_output_dir(const std::string& flag_value) {
  std::string dir = flag_value;
  if (dir.empty()) {
    const char* env = std::getenv("SPINLAB_OUT");
    dir = (env != nullptr && env[0] != '\0') ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir);
  return dir;
}

std::string now_utc_iso() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw io_error("write failed on " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error("malformed JSON in " + path + ": " + e.what());
  }
}

std::string write_run_manifest(const std::string& out_dir,
                               const std::string& subcommand,
                               const nlohmann::json& config,
                               const std::vector<std::string>& outputs,
                               const std::string& started_at,
                               const std::string& finished_at) {
  nlohmann::json man;
  man["subcommand"] = subcommand;
  man["version"] = kCodeVersion;
  man["started_at"] = started_at;
  man["finished_at"] = finished_at;
  man["output_dir"] = out_dir;
  man["outputs"] = outputs;
  man["config"] = config;
  const std::string path = out_dir + "/manifest_" + subcommand + ".json";
  write_json(path, man);
  return path;
}

}  // namespace spinlab
