#include "pbsid/io.hpp"

#include "pbsid/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <system_error>

namespace pbsid::io {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return {buf, res.ptr};
}

double parse_double(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DataError(where + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

void write_csv(std::ostream& os, const core::SignalDataset& dataset) {
  dataset.validate(true);
  const Index m = dataset.input_dim();
  const Index r = dataset.output_dim();
  const auto labels = dataset.labels.empty() ? core::default_labels(m, r) : dataset.labels;
  os << 't';
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (Index k = 0; k < dataset.samples(); ++k) {
    os << format_double(dataset.timestamps[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < m; ++i) os << ',' << format_double(dataset.inputs(i, k));
    for (Index j = 0; j < r; ++j) os << ',' << format_double(dataset.outputs(j, k));
    os << '\n';
  }
}

std::string to_csv(const core::SignalDataset& dataset) {
  std::ostringstream os;
  write_csv(os, dataset);
  return os.str();
}

core::SignalDataset read_csv(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto where = [&](std::size_t n) { return source + ":" + std::to_string(n); };

  // header, skipping blank lines and a UTF-8 BOM
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError(source + ": missing header row");

  const auto header = split_fields(line);
  if (trim(header[0]) != "t") throw DataError(where(line_no) + ": first column must be 't'");
  std::vector<std::string> labels;
  Index m = 0;
  Index r = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::string name = trim(header[c]);
    if (name.empty()) throw DataError(where(line_no) + ": empty column name");
    if (name[0] == 'u') {
      if (r > 0) throw DataError(where(line_no) + ": input column '" + name + "' after outputs");
      ++m;
    } else if (name[0] == 'y') {
      ++r;
    } else {
      throw DataError(where(line_no) + ": column '" + name + "' is neither u* nor y*");
    }
    labels.push_back(std::move(name));
  }
  const std::size_t width = header.size();

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      std::ostringstream os;
      os << where(line_no) << ": expected " << width << " fields, found " << fields.size();
      throw DataError(os.str());
    }
    const double t = parse_double(fields[0], where(line_no));
    if (!times.empty() && !(t > times.back())) {
      throw DataError(where(line_no) + ": timestamps must be strictly increasing");
    }
    times.push_back(t);
    for (std::size_t c = 1; c < width; ++c) {
      const double v = parse_double(fields[c], where(line_no) + " column " + labels[c - 1]);
      if (!std::isfinite(v)) {
        throw DataError(where(line_no) + ": non-finite value in column " + labels[c - 1]);
      }
      values.push_back(v);
    }
  }

  const auto n = static_cast<Index>(times.size());
  core::SignalDataset ds;
  ds.timestamps = std::move(times);
  ds.inputs.resize(m, n);
  ds.outputs.resize(r, n);
  const auto stride = static_cast<Index>(width - 1);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < m; ++i) ds.inputs(i, k) = values[static_cast<std::size_t>(k * stride + i)];
    for (Index j = 0; j < r; ++j) {
      ds.outputs(j, k) = values[static_cast<std::size_t>(k * stride + m + j)];
    }
  }
  ds.sample_period = n >= 2 ? ds.timestamps[1] - ds.timestamps[0] : 1.0;
  ds.labels = std::move(labels);
  ds.validate(true);
  return ds;
}

core::SignalDataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  return read_csv(is, source);
}

core::SignalDataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_csv(is, path.string());
}

void save_csv(const std::filesystem::path& path, const core::SignalDataset& dataset) {
  write_text_atomic(path, to_csv(dataset));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw DataError("output directory does not exist: " + parent.string());
  }
  std::random_device rd;
  std::ostringstream suffix;
  suffix << ".tmp" << std::hex << rd();
  auto tmp = path;
  tmp += suffix.str();
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot replace " + path.string());
  }
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::pair<std::filesystem::path, std::filesystem::path> find_replay_pair(
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("replay directory not found: " + dir.string());
  const fs::path ident = dir / "identification.csv";
  const fs::path valid = dir / "validation.csv";
  if (fs::exists(ident) && fs::exists(valid)) return {ident, valid};
  std::vector<fs::path> idents;
  std::vector<fs::path> valids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || lower(entry.path().extension().string()) != ".csv") continue;
    const auto name = lower(entry.path().filename().string());
    if (name.find("ident") != std::string::npos) idents.push_back(entry.path());
    if (name.find("valid") != std::string::npos) valids.push_back(entry.path());
  }
  if (idents.size() != 1 || valids.size() != 1) {
    throw DataError("replay directory " + dir.string() +
                    " must contain exactly one identification and one validation CSV");
  }
  return {idents.front(), valids.front()};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string dataset_hash(const core::SignalDataset& dataset) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_csv(dataset));
  return os.str();
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Index rows, Index cols, const std::string& name) {
  auto bad = [&](const std::string& what) { return DataError("model field " + name + ": " + what); };
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw bad("expected " + std::to_string(rows) + " rows");
  }
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw bad("row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    }
    for (Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw bad("non-numeric entry");
      out(i, c) = v.get<double>();
    }
  }
  return out;
}

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& j, Index size, const std::string& name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != size) {
    throw DataError("model field " + name + ": expected " + std::to_string(size) + " entries");
  }
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Index get_dim(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0) {
    throw DataError(std::string("model field ") + key + " missing or not a non-negative integer");
  }
  return static_cast<Index>(j[key].get<long long>());
}

}  // namespace

json model_to_json(const StoredModel& stored) {
  const auto& mdl = stored.model;
  mdl.validate();
  json j;
  j["n"] = mdl.order();
  j["m"] = mdl.input_dim();
  j["r"] = mdl.output_dim();
  j["p"] = mdl.p_used;
  j["f"] = mdl.f_used;
  j["A"] = matrix_to_json(mdl.A);
  j["B"] = matrix_to_json(mdl.B);
  j["C"] = matrix_to_json(mdl.C);
  j["K"] = matrix_to_json(mdl.K);
  if (stored.input_offset) j["input_offset"] = vector_to_json(*stored.input_offset);
  if (stored.output_offset) j["output_offset"] = vector_to_json(*stored.output_offset);
  j["provenance"] = {
      {"dataset_hash", stored.provenance.dataset_hash},
      {"tool_version", stored.provenance.tool_version},
      {"method", std::string(1, stored.provenance.method)},
      {"scores", stored.provenance.scores},
  };
  return j;
}

StoredModel model_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model JSON must be an object");
  StoredModel s;
  const Index n = get_dim(j, "n");
  const Index m = get_dim(j, "m");
  const Index r = get_dim(j, "r");
  s.model.p_used = get_dim(j, "p");
  s.model.f_used = get_dim(j, "f");
  for (const char* key : {"A", "B", "C", "K"}) {
    if (!j.contains(key)) throw DataError(std::string("model field ") + key + " missing");
  }
  s.model.A = matrix_from_json(j["A"], n, n, "A");
  s.model.B = matrix_from_json(j["B"], n, m, "B");
  s.model.C = matrix_from_json(j["C"], r, n, "C");
  s.model.K = matrix_from_json(j["K"], n, r, "K");
  if (j.contains("input_offset")) s.input_offset = vector_from_json(j["input_offset"], m, "input_offset");
  if (j.contains("output_offset")) {
    s.output_offset = vector_from_json(j["output_offset"], r, "output_offset");
  }
  if (j.contains("provenance")) {
    const auto& p = j["provenance"];
    s.provenance.dataset_hash = p.value("dataset_hash", "");
    s.provenance.tool_version = p.value("tool_version", "");
    const std::string method = p.value("method", "A");
    s.provenance.method = method.empty() ? 'A' : method[0];
    if (p.contains("scores")) s.provenance.scores = p["scores"];
  }
  s.model.validate();
  return s;
}

StoredModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const std::filesystem::path& path, const StoredModel& stored) {
  write_text_atomic(path, dump(model_to_json(stored)));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace pbsid::io
