#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bayeshpo/errors.hpp"

namespace bayeshpo::nslkdd {

inline constexpr std::size_t kFeatureCount = 41;
inline constexpr std::size_t kNumericCount = 38;
// Field positions of the categorical features in a record line.
inline constexpr std::size_t kProtocolField = 1;
inline constexpr std::size_t kServiceField = 2;
inline constexpr std::size_t kFlagField = 3;

struct RawRecord {
  std::array<double, kNumericCount> numeric{};  // remaining 38 features in file order
  std::string protocol_type;
  std::string service;
  std::string flag;
  std::string label;
  std::optional<int> difficulty;

  bool is_attack() const { return label != "normal"; }
};

/// Thrown for malformed input; `line()` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ClassCounts {
  std::size_t normal = 0;
  std::size_t attack = 0;
  std::size_t total() const { return normal + attack; }
};

std::vector<RawRecord> parse(std::istream& in);
std::vector<RawRecord> parse_file(const std::filesystem::path& path);
ClassCounts count_classes(const std::vector<RawRecord>& records);

/// Names of the 41 features in file order.
const std::array<const char*, kFeatureCount>& feature_names();

/// Vocabularies and min/max ranges fitted on training data only.
struct EncoderState {
  std::vector<std::string> protocol_vocab;
  std::vector<std::string> service_vocab;
  std::vector<std::string> flag_vocab;
  std::array<double, kNumericCount> min{};
  std::array<double, kNumericCount> max{};

  std::size_t output_dim() const {
    return kNumericCount + protocol_vocab.size() + service_vocab.size() + flag_vocab.size();
  }
  /// Output column names, in matrix order.
  std::vector<std::string> column_names() const;
};

struct DesignMatrix {
  Eigen::MatrixXd X;  // n x output_dim
  Eigen::VectorXd y;  // 0 = normal, 1 = attack

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
};

struct TransformReport {
  std::map<std::string, std::size_t> unseen_categories;  // "feature=value" -> count
  std::size_t unseen_total = 0;
  std::size_t clipped_values = 0;
};

EncoderState fit_encoder(const std::vector<RawRecord>& train);

/// One-hot against the training vocabularies (unseen -> all-zero block), min-max scaling
/// of the numeric columns clipped to [0,1]. Columns keep the file's feature order with
/// each categorical expanded in place.
DesignMatrix transform(const EncoderState& enc, const std::vector<RawRecord>& records,
                       TransformReport* report = nullptr);

struct Split {
  DesignMatrix fit;
  DesignMatrix validation;
};

/// Stratified split: round(fraction * n_class) rows of each class go to `fit`.
/// Rows keep their original relative order in both parts.
Split stratified_split(const DesignMatrix& data, double fraction, std::uint64_t seed);

/// Stratified subsample of exactly `rows` rows (class proportions preserved).
DesignMatrix stratified_subsample(const DesignMatrix& data, std::size_t rows, std::uint64_t seed);

DesignMatrix concatenate(const DesignMatrix& a, const DesignMatrix& b);

/// Cached matrix: "BHPOMAT1", u64 rows, u64 cols, row-major X, then y; little-endian f64.
void save_matrix(const DesignMatrix& m, const std::filesystem::path& path);
DesignMatrix load_matrix(const std::filesystem::path& path);

}  // namespace bayeshpo::nslkdd
