#include <doctest.h>

#include "rfed/data.hpp"
#include "rfed/error.hpp"
#include "support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

using namespace rfed;
using namespace rfed::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rfed_test_data";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& body) {
  const fs::path p = scratch(name);
  std::ofstream(p) << body;
  return p;
}

fs::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
  const fs::path p = scratch(name);
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return p;
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

std::vector<unsigned char> idx_file(std::uint32_t magic, std::uint32_t count, std::size_t payload) {
  std::vector<unsigned char> bytes;
  put_be32(bytes, magic);
  put_be32(bytes, count);
  put_be32(bytes, 28);
  put_be32(bytes, 28);
  for (std::size_t i = 0; i < payload; ++i) bytes.push_back(static_cast<unsigned char>(i % 256));
  return bytes;
}

template <class F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("gaussian data is deterministic and standard normal") {
  const DataMatrix a = gen_gaussian(40, 7, 5);
  CHECK(a.samples() == 40);
  CHECK(a.features() == 7);
  CHECK(a.values == gen_gaussian(40, 7, 5).values);
  CHECK(a.values != gen_gaussian(40, 7, 6).values);
  CHECK(std::isfinite(gen_gaussian(1, 1, 0).values(0, 0)));
  CHECK_THROWS_AS(gen_gaussian(0, 3, 1), Error);

  const DataMatrix big = gen_gaussian(1000, 1000, 11);
  const double n = static_cast<double>(big.values.size());
  const double mean = big.values.mean();
  const double var = (big.values.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("equal partitions") {
  auto sizes = [](const Partition& p) {
    std::vector<std::size_t> s;
    for (const Range& r : p.client_ranges) s.push_back(r.size());
    return s;
  };
  CHECK(sizes(partition_equal(10, 2, false, 0)) == std::vector<std::size_t>{5, 5});
  CHECK(sizes(partition_equal(10, 3, false, 0)) == std::vector<std::size_t>{4, 3, 3});
  CHECK_THROWS_AS(partition_equal(3, 4, false, 0), Error);

  const Partition unshuffled = partition_equal(7, 2, false, 0);
  std::vector<std::size_t> identity(7);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  CHECK(unshuffled.order == identity);

  const Partition a = partition_equal(103, 7, true, 9);
  const Partition b = partition_equal(103, 7, true, 9);
  CHECK(a.order == b.order);
  CHECK(a.order != identity);
  CHECK(std::set<std::size_t>(a.order.begin(), a.order.end()).size() == 103);
  std::size_t next = 0;
  for (const Range& r : a.client_ranges) {
    CHECK(r.begin == next);
    next = r.end;
  }
  CHECK(next == 103);
}

TEST_CASE("covariance") {
  Matrix one(1, 3);
  one << 1, 2, 3;
  const Matrix a1 = covariance(one);
  CHECK((a1 - one.transpose() * one).norm() == 0.0);
  CHECK(Eigen::FullPivLU<Matrix>(a1).rank() == 1);
  CHECK(covariance(Matrix::Zero(4, 3)).norm() == 0.0);

  std::mt19937_64 rng(61);
  const Matrix x = gaussian(9, 5, rng);
  const Matrix a = covariance(x);
  for (Index j = 0; j < 5; ++j) {
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(5);
    for (Index i = 0; i < 9; ++i) expected += x(i, j) * x.row(i).transpose();
    CHECK((a.col(j) - expected).norm() <= 1e-12);
  }
  CHECK((a - a.transpose()).norm() == 0.0);
}

TEST_CASE("client covariances add up to the full covariance") {
  const DataMatrix data = gen_gaussian(101, 6, 3);
  const Partition part = partition_equal(101, 4, true, 3);
  const auto covs = client_covariances(data, part);
  Matrix sum = Matrix::Zero(6, 6);
  for (const Matrix& c : covs) sum += c;
  const Matrix full = covariance(data.values);
  CHECK((sum - full).norm() <= 1e-10 * full.norm());

  const auto normalized = client_covariances(data, part, true);
  const Matrix block = client_block(data, part, 2);
  CHECK((normalized[2] - covariance(block) / static_cast<double>(block.rows())).norm() <= 1e-12);
}

TEST_CASE("centering and standardizing") {
  const DataMatrix data = gen_gaussian(50, 4, 8);
  DataMatrix shifted = data;
  shifted.values.array().rowwise() += Eigen::RowVector4d(3, -1, 2, 5).array();
  shifted.values.col(2) *= 7.0;
  const DataMatrix c = center(shifted);
  CHECK(c.values.colwise().mean().norm() <= 1e-12);
  const DataMatrix s = standardize(shifted);
  CHECK(s.values.colwise().mean().norm() <= 1e-12);
  for (Index j = 0; j < 4; ++j)
    CHECK(s.values.col(j).squaredNorm() / 50.0 == doctest::Approx(1.0).epsilon(1e-12));

  DataMatrix constant = data;
  constant.values.col(1).setConstant(2.0);
  CHECK(standardize(constant).values.col(1).norm() == 0.0);
}

TEST_CASE("csv loading") {
  const fs::path ok = write_text("ok.csv", "a,b,label\n1.5,2,x\n-3,4e1,y\n");
  const DataMatrix m = load_csv(ok, true, 2);
  CHECK(m.samples() == 2);
  CHECK(m.features() == 2);
  CHECK(m.values(1, 1) == 40.0);
  CHECK(m.values(0, 0) == 1.5);

  const fs::path bad = write_text("bad.csv", "1,2\n3,oops\n");
  const std::string msg = error_message([&] { load_csv(bad, false, -1); });
  CHECK(msg.find(":2: column 2") != std::string::npos);

  CHECK_THROWS_AS(load_csv(write_text("ragged.csv", "1,2,3\n4,5\n"), false, -1), Error);
  CHECK(error_message([&] { load_csv(write_text("nan.csv", "1,nan\n"), false, -1); }).find("non-finite") !=
        std::string::npos);
  CHECK_THROWS_AS(load_csv(write_text("inf.csv", "1,2\ninf,3\n"), false, -1), Error);
  CHECK_THROWS_AS(load_csv(scratch("missing.csv"), false, -1), Error);
  try {
    load_csv(scratch("missing.csv"), false, -1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("bundled real datasets") {
  const fs::path dir = RFED_TEST_DATA_DIR;
  const DataMatrix iris = load_csv(dir / "iris.csv", true, 4);
  CHECK(iris.samples() == 150);
  CHECK(iris.features() == 4);
  const DataMatrix wine = load_csv(dir / "wine.csv", true, 13);
  CHECK(wine.samples() == 178);
  CHECK(wine.features() == 13);
}

TEST_CASE("idx loading") {
  const fs::path one = write_bytes("one.idx", idx_file(0x803, 1, 784));
  const DataMatrix m = load_idx(one);
  CHECK(m.samples() == 1);
  CHECK(m.features() == 784);
  CHECK(m.values(0, 255) == 1.0);
  CHECK(m.values(0, 0) == 0.0);
  CHECK(m.values.minCoeff() >= 0.0);
  CHECK(m.values.maxCoeff() <= 1.0);

  CHECK(error_message([&] { load_idx(write_bytes("trunc.idx", idx_file(0x803, 2, 784 + 10))); })
            .find("truncated") != std::string::npos);
  CHECK(error_message([&] { load_idx(write_bytes("magic.idx", idx_file(0x801, 1, 784))); }).find("magic") !=
        std::string::npos);
  CHECK_THROWS_AS(load_idx(write_bytes("short.idx", {0, 0, 8})), Error);
}
