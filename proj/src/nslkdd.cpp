#include "bayeshpo/nslkdd.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <string_view>

#include "bayeshpo/rng.hpp"

namespace bayeshpo::nslkdd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line, std::size_t column) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw ParseError(line, "field " + std::to_string(column + 1) + " ('" + std::string(field) +
                               "') is not a finite number");
  return v;
}

std::size_t vocab_index(const std::vector<std::string>& vocab, const std::string& v) {
  const auto it = std::lower_bound(vocab.begin(), vocab.end(), v);
  if (it == vocab.end() || *it != v) return vocab.size();
  return static_cast<std::size_t>(it - vocab.begin());
}

std::vector<std::string> sorted_distinct(const std::vector<RawRecord>& rs,
                                         std::string RawRecord::*field) {
  std::set<std::string> s;
  for (const auto& r : rs) s.insert(r.*field);
  return {s.begin(), s.end()};
}

DesignMatrix take_rows(const DesignMatrix& d, const std::vector<Eigen::Index>& rows) {
  DesignMatrix out;
  out.X = d.X(rows, Eigen::all);
  out.y = d.y(rows);
  return out;
}

void shuffle(std::vector<Eigen::Index>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(unit_uniform(rng) *
                                                            static_cast<double>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated matrix file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMatrixMagic[8] = {'B', 'H', 'P', 'O', 'M', 'A', 'T', '1'};

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
      "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
      "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
      "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
      "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
      "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
      "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
      "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
      "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate"};
  return names;
}

std::vector<RawRecord> parse(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    fields.clear();
    std::size_t pos = 0;
    while (true) {
      const auto comma = body.find(',', pos);
      fields.push_back(trim(body.substr(pos, comma == std::string_view::npos ? body.npos
                                                                             : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != kFeatureCount + 1 && fields.size() != kFeatureCount + 2)
      throw ParseError(line_no, "expected 42 or 43 fields, found " + std::to_string(fields.size()));

    RawRecord r;
    std::size_t k = 0;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (c == kProtocolField) {
        r.protocol_type = fields[c];
      } else if (c == kServiceField) {
        r.service = fields[c];
      } else if (c == kFlagField) {
        r.flag = fields[c];
      } else {
        r.numeric[k++] = parse_number(fields[c], line_no, c);
      }
    }
    if (r.protocol_type.empty() || r.service.empty() || r.flag.empty())
      throw ParseError(line_no, "empty categorical field");
    r.label = fields[kFeatureCount];
    if (r.label.empty()) throw ParseError(line_no, "empty label");
    if (fields.size() == kFeatureCount + 2) {
      const double d = parse_number(fields[kFeatureCount + 1], line_no, kFeatureCount + 1);
      r.difficulty = static_cast<int>(d);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawRecord> parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

ClassCounts count_classes(const std::vector<RawRecord>& records) {
  ClassCounts c;
  for (const auto& r : records) (r.is_attack() ? c.attack : c.normal)++;
  return c;
}

std::vector<std::string> EncoderState::column_names() const {
  std::vector<std::string> out;
  const auto& names = feature_names();
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const std::vector<std::string>* vocab = nullptr;
    if (c == kProtocolField) vocab = &protocol_vocab;
    if (c == kServiceField) vocab = &service_vocab;
    if (c == kFlagField) vocab = &flag_vocab;
    if (vocab) {
      for (const auto& v : *vocab) out.push_back(std::string(names[c]) + "=" + v);
    } else {
      out.emplace_back(names[c]);
    }
  }
  return out;
}

EncoderState fit_encoder(const std::vector<RawRecord>& train) {
  if (train.empty()) throw ValidationError("fit_encoder: empty training set");
  EncoderState enc;
  enc.protocol_vocab = sorted_distinct(train, &RawRecord::protocol_type);
  enc.service_vocab = sorted_distinct(train, &RawRecord::service);
  enc.flag_vocab = sorted_distinct(train, &RawRecord::flag);
  enc.min = train.front().numeric;
  enc.max = train.front().numeric;
  for (const auto& r : train)
    for (std::size_t k = 0; k < kNumericCount; ++k) {
      enc.min[k] = std::min(enc.min[k], r.numeric[k]);
      enc.max[k] = std::max(enc.max[k], r.numeric[k]);
    }
  return enc;
}

DesignMatrix transform(const EncoderState& enc, const std::vector<RawRecord>& records,
                       TransformReport* report) {
  DesignMatrix out;
  const auto n = static_cast<Eigen::Index>(records.size());
  out.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(enc.output_dim()));
  out.y = Eigen::VectorXd::Zero(n);
  TransformReport local;
  auto& rep = report ? *report : local;
  const auto& names = feature_names();

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    std::size_t k = 0;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const std::vector<std::string>* vocab = nullptr;
      const std::string* value = nullptr;
      if (c == kProtocolField) vocab = &enc.protocol_vocab, value = &r.protocol_type;
      if (c == kServiceField) vocab = &enc.service_vocab, value = &r.service;
      if (c == kFlagField) vocab = &enc.flag_vocab, value = &r.flag;
      if (vocab) {
        const auto idx = vocab_index(*vocab, *value);
        if (idx < vocab->size()) {
          out.X(i, col + static_cast<Eigen::Index>(idx)) = 1.0;
        } else {
          rep.unseen_categories[std::string(names[c]) + "=" + *value]++;
          rep.unseen_total++;
        }
        col += static_cast<Eigen::Index>(vocab->size());
        continue;
      }
      const double lo = enc.min[k];
      const double hi = enc.max[k];
      double v = hi > lo ? (r.numeric[k] - lo) / (hi - lo) : 0.0;
      if (v < 0.0 || v > 1.0) {
        rep.clipped_values++;
        v = std::clamp(v, 0.0, 1.0);
      }
      out.X(i, col++) = v;
      ++k;
    }
    out.y[i] = r.is_attack() ? 1.0 : 0.0;
  }
  return out;
}

Split stratified_split(const DesignMatrix& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("split fraction must lie strictly between 0 and 1");
  std::vector<Eigen::Index> by_class[2];
  for (Eigen::Index i = 0; i < data.y.size(); ++i) by_class[data.y[i] != 0.0 ? 1 : 0].push_back(i);
  if (by_class[0].size() < 2 || by_class[1].size() < 2)
    throw ValidationError("stratified split needs at least 2 samples of each class");

  Rng rng(seed);
  std::vector<Eigen::Index> fit_rows, val_rows;
  for (auto& rows : by_class) {
    shuffle(rows, rng);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
    fit_rows.insert(fit_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    val_rows.insert(val_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  return {take_rows(data, fit_rows), take_rows(data, val_rows)};
}

DesignMatrix stratified_subsample(const DesignMatrix& data, std::size_t rows, std::uint64_t seed) {
  if (rows >= data.rows()) return data;
  if (rows < 4) throw ValidationError("subsample needs at least 4 rows");
  return stratified_split(data, static_cast<double>(rows) / static_cast<double>(data.rows()), seed)
      .fit;
}

DesignMatrix concatenate(const DesignMatrix& a, const DesignMatrix& b) {
  if (a.X.cols() != b.X.cols()) throw ValidationError("concatenate: column count mismatch");
  DesignMatrix out;
  out.X.resize(a.X.rows() + b.X.rows(), a.X.cols());
  out.X << a.X, b.X;
  out.y.resize(a.y.size() + b.y.size());
  out.y << a.y, b.y;
  return out;
}

void save_matrix(const DesignMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path.string() + "' for writing");
  os.write(kMatrixMagic, sizeof kMatrixMagic);
  write_u64(os, static_cast<std::uint64_t>(m.X.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.X.cols()));
  for (Eigen::Index r = 0; r < m.X.rows(); ++r)
    for (Eigen::Index c = 0; c < m.X.cols(); ++c)
      write_u64(os, std::bit_cast<std::uint64_t>(m.X(r, c)));
  for (Eigen::Index r = 0; r < m.y.size(); ++r) write_u64(os, std::bit_cast<std::uint64_t>(m.y[r]));
  if (!os) throw ValidationError("failed writing '" + path.string() + "'");
}

DesignMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path.string() + "'");
  char magic[8];
  if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kMatrixMagic))
    throw ValidationError("'" + path.string() + "' is not a cached design matrix");
  const auto rows = static_cast<Eigen::Index>(read_u64(is));
  const auto cols = static_cast<Eigen::Index>(read_u64(is));
  DesignMatrix m;
  m.X.resize(rows, cols);
  m.y.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m.X(r, c) = std::bit_cast<double>(read_u64(is));
  for (Eigen::Index r = 0; r < rows; ++r) m.y[r] = std::bit_cast<double>(read_u64(is));
  return m;
}

}  // namespace bayeshpo::nslkdd
