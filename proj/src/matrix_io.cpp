#include "allabel/matrix_io.hpp"

#include <bit>
#include <cstring>

#include "allabel/error.hpp"
#include "allabel/util.hpp"

namespace allabel {

namespace {

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double value) { put(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ParseError(source_, "truncated matrix file at byte " + std::to_string(pos_));
  }

  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_matrix(const SimilarityMatrix& m) {
  std::string out = "ALSM";
  put<std::uint16_t>(out, kMatrixFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  put<std::uint8_t>(out, m.normalized() ? 1 : 0);
  for (const auto* ids : {&m.row_ids(), &m.col_ids()}) {
    for (const auto& id : *ids) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
      out += id;
    }
  }
  out.reserve(out.size() + m.data().size() * 8);
  for (double v : m.data()) put_f64(out, v);
  return out;
}

SimilarityMatrix decode_matrix(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.get_string(4) != "ALSM") throw ParseError(source, "not a similarity matrix file (bad magic)");
  const auto version = in.get<std::uint16_t>();
  if (version != kMatrixFormatVersion)
    throw ParseError(source, "unsupported matrix format version " + std::to_string(version));
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  const auto flags = in.get<std::uint8_t>();
  std::vector<std::string> row_ids, col_ids;
  for (auto* ids : {&row_ids, &col_ids}) {
    const std::uint32_t n = ids == &row_ids ? rows : cols;
    ids->reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) ids->push_back(in.get_string(in.get<std::uint32_t>()));
  }
  std::vector<double> scores(static_cast<std::size_t>(rows) * cols);
  for (double& v : scores) v = in.get_f64();
  if (!in.done()) throw ParseError(source, "trailing bytes after matrix payload");
  try {
    return SimilarityMatrix(std::move(row_ids), std::move(col_ids), std::move(scores), (flags & 1) != 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, e.what());
  }
}

void save_matrix(const SimilarityMatrix& matrix, const std::filesystem::path& path) {
  write_file(path, encode_matrix(matrix));
}

SimilarityMatrix load_matrix(const std::filesystem::path& path) { return decode_matrix(read_file(path), path.string()); }

nlohmann::json matrix_to_json(const SimilarityMatrix& m) {
  nlohmann::json scores = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m.masked(r, c))
        row.push_back(nullptr);
      else
        row.push_back(m.at(r, c));
    }
    scores.push_back(std::move(row));
  }
  return {{"version", kMatrixFormatVersion},
          {"normalized", m.normalized()},
          {"row_ids", m.row_ids()},
          {"col_ids", m.col_ids()},
          {"scores", std::move(scores)}};
}

SimilarityMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    auto row_ids = j.at("row_ids").get<std::vector<std::string>>();
    auto col_ids = j.at("col_ids").get<std::vector<std::string>>();
    const auto& rows = j.at("scores");
    if (rows.size() != row_ids.size()) throw ParseError("<json>", "row count mismatch");
    std::vector<double> scores;
    scores.reserve(row_ids.size() * col_ids.size());
    for (const auto& row : rows) {
      if (row.size() != col_ids.size()) throw ParseError("<json>", "column count mismatch");
      for (const auto& v : row) scores.push_back(v.is_null() ? SimilarityMatrix::kMasked : v.get<double>());
    }
    return SimilarityMatrix(std::move(row_ids), std::move(col_ids), std::move(scores), j.at("normalized").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<json>", e.what());
  }
}

}  // namespace allabel
