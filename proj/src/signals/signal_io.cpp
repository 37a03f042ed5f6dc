#include "advica/signals.hpp"

#include "advica/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace advica {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw IngestionError("bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void write_matrix_block(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_signals_csv(const std::filesystem::path& path, const SignalMatrix& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  for (Index i = 0; i < s.n_signals(); ++i) os << (i ? ",s" : "s") << (i + 1);
  os << '\n';
  for (Index k = 0; k < s.n_samples(); ++k) {
    for (Index i = 0; i < s.n_signals(); ++i) {
      if (i) os << ',';
      os << format_double(s.data(i, k));
    }
    os << '\n';
  }
  std::ofstream meta(path.string() + ".meta", std::ios::binary);
  meta << "sample_rate=" << (s.sample_rate ? format_double(*s.sample_rate) : std::string()) << '\n'
       << "seed=" << s.seed << '\n'
       << "generator=" << s.generator << '\n';
}

SignalMatrix read_signals_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IngestionError("empty signal file " + path.string(), 0);
  const auto header = split(strip_cr(line), ',');
  const auto m = static_cast<Index>(header.size());
  std::vector<std::vector<double>> cols(header.size());
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw IngestionError(path.string() + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) cols[i].push_back(parse_double(cells[i], line_no));
  }
  SignalMatrix s;
  const auto t = cols.empty() ? Index{0} : static_cast<Index>(cols.front().size());
  s.data.resize(m, t);
  for (Index i = 0; i < m; ++i)
    for (Index k = 0; k < t; ++k) s.data(i, k) = cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];

  std::ifstream meta(path.string() + ".meta");
  while (meta && std::getline(meta, line)) {
    line = strip_cr(line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "sample_rate" && !value.empty()) s.sample_rate = parse_double(value, 0);
    if (key == "seed") s.seed = std::stoull(value);
    if (key == "generator") s.generator = value;
  }
  return s;
}

void write_mixspec(const std::filesystem::path& path, const MixSpec& spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  os << "kind=" << to_string(spec.kind) << '\n' << "seed=" << spec.seed << '\n' << "funcs=";
  for (std::size_t i = 0; i < spec.post_funcs.size(); ++i) {
    os << (i ? "," : "") << to_string(spec.post_funcs[i]);
  }
  os << '\n' << "rejected_draws=" << spec.rejected_draws << '\n';
  os << "A:\n";
  write_matrix_block(os, spec.A);
  if (spec.B) {
    os << "B:\n";
    write_matrix_block(os, *spec.B);
  }
}

MixSpec read_mixspec(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open " + path.string());
  MixSpec spec;
  std::map<char, std::vector<std::vector<double>>> blocks;
  char current = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line == "A:" || line == "B:") {
      current = line[0];
      continue;
    }
    if (current) {
      std::vector<double> row;
      for (const auto& c : split(line, ',')) row.push_back(parse_double(c, line_no));
      blocks[current].push_back(std::move(row));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IngestionError(path.string() + ": malformed line " + std::to_string(line_no));
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "kind") spec.kind = mix_kind_from_string(value);
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "rejected_draws") spec.rejected_draws = std::stoi(value);
    else if (key == "funcs") {
      if (!value.empty())
        for (const auto& f : split(value, ',')) spec.post_funcs.push_back(post_func_from_string(f));
    } else {
      throw IngestionError(path.string() + ": unknown key '" + key + "'");
    }
  }
  auto to_matrix = [&](const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(static_cast<Index>(rows.size()),
                      rows.empty() ? Index{0} : static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Index>(rows[i].size()) != m.cols()) {
        throw IngestionError(path.string() + ": ragged matrix block");
      }
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
  };
  if (!blocks.contains('A')) throw IngestionError(path.string() + ": missing A block");
  spec.A = to_matrix(blocks['A']);
  if (blocks.contains('B')) spec.B = to_matrix(blocks['B']);
  return spec;
}

}  // namespace advica
