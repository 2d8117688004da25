#include "rfed/data.hpp"

#include "rfed/error.hpp"
#include "rfed/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rfed {

DataMatrix gen_gaussian(Index p, Index d, std::uint64_t seed) {
  if (p < 1 || d < 1) throw Error(ErrorCode::InvalidInput, "gaussian data needs p, d >= 1");
  auto rng = keyed_stream(seed, StreamTag::Data);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataMatrix out{Matrix(p, d), "gaussian(p=" + std::to_string(p) + ",d=" + std::to_string(d) +
                                   ",seed=" + std::to_string(seed) + ")"};
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < d; ++j) out.values(i, j) = normal(rng);
  return out;
}

Partition partition_equal(std::size_t p, std::size_t n, bool shuffle, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::Config, "partition needs at least one client");
  if (n > p)
    throw Error(ErrorCode::Config, "cannot split " + std::to_string(p) + " samples across " +
                                       std::to_string(n) + " clients");
  Partition part;
  part.order.resize(p);
  std::iota(part.order.begin(), part.order.end(), std::size_t{0});
  if (shuffle) {
    auto rng = keyed_stream(seed, StreamTag::Partition);
    std::shuffle(part.order.begin(), part.order.end(), rng);
  }
  const std::size_t base = p / n;
  const std::size_t extra = p % n;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    part.client_ranges.push_back({begin, begin + size});
    begin += size;
  }
  return part;
}

Matrix client_block(const DataMatrix& data, const Partition& part, std::size_t client) {
  if (part.order.size() != static_cast<std::size_t>(data.samples()))
    throw Error(ErrorCode::Shape, "partition does not match the data size");
  const Range range = part.client_ranges.at(client);
  Matrix block(static_cast<Index>(range.size()), data.features());
  for (std::size_t i = 0; i < range.size(); ++i)
    block.row(static_cast<Index>(i)) = data.values.row(static_cast<Index>(part.order[range.begin + i]));
  return block;
}

Matrix covariance(const Matrix& block) {
  Matrix a = block.transpose() * block;
  return sym(a);
}

std::vector<Matrix> client_covariances(const DataMatrix& data, const Partition& part,
                                       bool normalize) {
  std::vector<Matrix> out;
  out.reserve(part.clients());
  for (std::size_t i = 0; i < part.clients(); ++i) {
    const Matrix block = client_block(data, part, i);
    Matrix a = covariance(block);
    if (normalize) a /= static_cast<double>(block.rows());
    out.push_back(std::move(a));
  }
  return out;
}

DataMatrix center(const DataMatrix& data) {
  DataMatrix out = data;
  out.values.rowwise() -= data.values.colwise().mean();
  out.source += "|centered";
  return out;
}

DataMatrix standardize(const DataMatrix& data) {
  DataMatrix out = center(data);
  const double p = static_cast<double>(out.samples());
  for (Index j = 0; j < out.features(); ++j) {
    const double sd = std::sqrt(out.values.col(j).squaredNorm() / p);
    if (sd > 0.0) out.values.col(j) /= sd;
  }
  out.source += "|standardized";
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string location(const std::filesystem::path& path, std::size_t line, std::size_t col) {
  return path.string() + ":" + std::to_string(line) + ": column " + std::to_string(col + 1);
}

}  // namespace

DataMatrix load_csv(const std::filesystem::path& path, bool has_header, int label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (trim(line).empty()) continue;

    std::vector<double> row;
    std::string_view rest(line);
    std::size_t col = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      if (static_cast<int>(col) != label_column) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
          throw Error(ErrorCode::Parse,
                      location(path, line_no, col) + ": not a number: '" + std::string(cell) + "'");
        if (!std::isfinite(v))
          throw Error(ErrorCode::Parse, location(path, line_no, col) + ": non-finite value");
        row.push_back(v);
      }
      ++col;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (label_column >= 0 && static_cast<std::size_t>(label_column) >= col)
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) +
                                        ": label column " + std::to_string(label_column) +
                                        " out of range");
    if (rows.empty()) width = row.size();
    if (row.size() != width || width == 0)
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(width) + " numeric fields, got " +
                                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Parse, path.string() + ": no data rows");

  DataMatrix out{Matrix(static_cast<Index>(rows.size()), static_cast<Index>(width)), path.string()};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

DataMatrix load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  auto read_be32 = [&](const char* what) -> std::uint32_t {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
      throw Error(ErrorCode::Parse, path.string() + ": truncated header (" + what + ")");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
  };

  const std::uint32_t magic = read_be32("magic");
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << path.string() << ": bad IDX magic 0x" << std::hex << magic << " (expected 0x00000803)";
    throw Error(ErrorCode::Parse, msg.str());
  }
  const std::uint32_t count = read_be32("image count");
  const std::uint32_t rows = read_be32("row count");
  const std::uint32_t cols = read_be32("column count");
  const std::size_t pixels = std::size_t{rows} * cols;
  if (count == 0 || pixels == 0) throw Error(ErrorCode::Parse, path.string() + ": empty IDX file");

  std::vector<unsigned char> payload(std::size_t{count} * pixels);
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size())))
    throw Error(ErrorCode::Parse, path.string() + ": truncated payload, expected " +
                                      std::to_string(payload.size()) + " bytes");

  DataMatrix out{Matrix(static_cast<Index>(count), static_cast<Index>(pixels)), path.string()};
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < pixels; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = payload[i * pixels + j] / 255.0;
  return out;
}

}  // namespace rfed
