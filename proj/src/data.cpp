#include "pie/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "pie/error.hpp"
#include "pie/rng.hpp"

namespace pie {
namespace {

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": line " << line << ": " << what;
  throw Error(ErrorKind::Parse, msg.str());
}

double parse_cell(std::string_view cell, const std::string& source, std::size_t line) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    parse_error(source, line, "non-numeric cell '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) parse_error(source, line, "non-finite cell");
  return value;
}

// Splits text into lines, tracking 1-based numbers; skips blank lines.
std::vector<std::pair<std::size_t, std::string_view>> numbered_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end == text.npos ? text.npos : end - start);
    ++number;
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (end == text.npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// Simulation

Vector linear_truth(std::size_t p) {
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  const std::size_t nonzero = (p + 9) / 10;
  for (std::size_t k = 0; k < nonzero; ++k) beta[static_cast<Eigen::Index>(k)] = k % 2 == 0 ? 1.0 : -1.0;
  return beta;
}

ObservationSet simulate_linear(std::size_t n, std::size_t p, std::uint64_t seed) {
  if (n == 0 || p == 0) throw Error(ErrorKind::Config, "simulate_linear needs n >= 1 and p >= 1");
  PhiloxStream rng({seed, StreamPurpose::Data, 0});
  boost::random::normal_distribution<double> noise;
  const Vector beta = linear_truth(p);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::uint64_t bits = 0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      if (k % 64 == 0) bits = rng();
      x(i, k) = (bits & 1u) ? 1.0 : -1.0;
      bits >>= 1;
    }
    y[i] = x.row(i).dot(beta) + noise(rng);
  }
  std::ostringstream provenance;
  provenance << "simulate_linear(n=" << n << ", p=" << p << ", seed=" << seed << ")";
  return ObservationSet(std::move(y), std::move(x), provenance.str());
}

ObservationSet simulate_univariate(Family family, double theta0, std::size_t n,
                                   std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::Config, "simulate_univariate needs n >= 1");
  PhiloxStream rng({seed, StreamPurpose::Data, 0});
  Vector y(static_cast<Eigen::Index>(n));
  switch (family) {
    case Family::PoissonGamma: {
      if (!(theta0 >= 0.0) || !std::isfinite(theta0)) {
        throw Error(ErrorKind::Config, "poisson mean must be >= 0");
      }
      if (theta0 == 0.0) {
        y.setZero();
        break;
      }
      boost::random::poisson_distribution<long, double> draw(theta0);
      for (auto& v : y) v = static_cast<double>(draw(rng));
      break;
    }
    case Family::ExponentialGamma: {
      if (!(theta0 > 0.0) || !std::isfinite(theta0)) {
        throw Error(ErrorKind::Config, "exponential rate must be > 0");
      }
      boost::random::exponential_distribution<double> draw(theta0);
      for (auto& v : y) v = draw(rng);
      break;
    }
    case Family::BernoulliBeta: {
      if (!(theta0 >= 0.0 && theta0 <= 1.0)) {
        throw Error(ErrorKind::Config, "bernoulli probability must lie in [0, 1]");
      }
      for (auto& v : y) v = rng.uniform_open() < theta0 ? 1.0 : 0.0;
      break;
    }
    default:
      throw Error(ErrorKind::Config, "simulate_univariate does not support family '" +
                                         std::string(to_string(family)) + "'");
  }
  std::ostringstream provenance;
  provenance << "simulate_univariate(" << to_string(family) << ", theta0=" << theta0
             << ", n=" << n << ", seed=" << seed << ")";
  return ObservationSet(std::move(y), std::nullopt, provenance.str());
}

// ---------------------------------------------------------------------------
// CSV

ObservationSet parse_csv(const std::string& text, const std::string& source) {
  const auto lines = numbered_lines(text);
  if (lines.empty()) parse_error(source, 1, "missing header row");
  const auto header = split_line(lines.front().second);

  std::ptrdiff_t y_col = -1;
  std::vector<std::ptrdiff_t> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "y") {
      if (y_col >= 0) parse_error(source, lines.front().first, "duplicate column 'y'");
      y_col = static_cast<std::ptrdiff_t>(c);
      continue;
    }
    std::size_t index = 0;
    const auto [ptr, ec] = name.size() > 1 && name.front() == 'x'
                               ? std::from_chars(name.data() + 1, name.data() + name.size(), index)
                               : std::from_chars_result{name.data(), std::errc::invalid_argument};
    if (ec != std::errc() || ptr != name.data() + name.size() || index == 0) {
      parse_error(source, lines.front().first, "unexpected column '" + std::string(name) + "'");
    }
    if (x_cols.size() < index) x_cols.resize(index, -1);
    if (x_cols[index - 1] >= 0) {
      parse_error(source, lines.front().first, "duplicate column '" + std::string(name) + "'");
    }
    x_cols[index - 1] = static_cast<std::ptrdiff_t>(c);
  }
  if (y_col < 0) parse_error(source, lines.front().first, "missing column 'y'");
  for (std::size_t k = 0; k < x_cols.size(); ++k) {
    if (x_cols[k] < 0) {
      parse_error(source, lines.front().first, "design columns must be x1..xp; x" + std::to_string(k + 1) + " is missing");
    }
  }

  const auto rows = lines.size() - 1;
  if (rows == 0) parse_error(source, lines.front().first + 1, "no data rows");
  Vector y(static_cast<Eigen::Index>(rows));
  std::optional<Matrix> z;
  if (!x_cols.empty()) z.emplace(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& [number, line] = lines[r + 1];
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream what;
      what << "expected " << header.size() << " cells, found " << cells.size();
      parse_error(source, number, what.str());
    }
    y[static_cast<Eigen::Index>(r)] = parse_cell(cells[static_cast<std::size_t>(y_col)], source, number);
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      (*z)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          parse_cell(cells[static_cast<std::size_t>(x_cols[k])], source, number);
    }
  }
  return ObservationSet(std::move(y), std::move(z), source);
}

ObservationSet load_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.string());
}

void write_observations_csv(const ObservationSet& data, const std::filesystem::path& path) {
  std::string out = "y";
  for (std::size_t k = 1; k <= data.p(); ++k) out += ",x" + std::to_string(k);
  out += '\n';
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.n()); ++i) {
    out += format_double(data.responses()[i]);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(data.p()); ++k) {
      out += ',' + format_double((*data.design())(i, k));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_draws_csv(const DrawMatrix& draws, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t k = 1; k <= draws.d(); ++k) {
    out += (k > 1 ? ",theta" : "theta") + std::to_string(k);
  }
  out += '\n';
  const auto& v = draws.values();
  for (Eigen::Index t = 0; t < v.rows(); ++t) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      if (k > 0) out += ',';
      out += format_double(v(t, k));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

DrawMatrix load_draws_csv(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = read_text_file(path);
  const auto lines = numbered_lines(text);
  if (lines.empty()) parse_error(source, 1, "missing header row");
  const auto width = split_line(lines.front().second).size();
  const auto rows = lines.size() - 1;
  if (rows == 0) parse_error(source, lines.front().first + 1, "no draws");
  Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& [number, line] = lines[r + 1];
    const auto cells = split_line(line);
    if (cells.size() != width) parse_error(source, number, "ragged row");
    for (std::size_t k = 0; k < width; ++k) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = parse_cell(cells[k], source, number);
    }
  }
  return DrawMatrix(std::move(values));
}

}  // namespace pie
