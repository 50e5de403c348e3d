#include "rgcinit/tensor_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rgcinit/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "byte-order conversion for big-endian hosts is not implemented");

namespace rgcinit {
namespace {

constexpr std::size_t kHeaderSize = 24;
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kFeatureMagic[4] = {0x46, 0x4D, 0x41, 0x54};
constexpr std::uint8_t kLabelMagic[4] = {0x4C, 0x56, 0x45, 0x43};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

std::size_t dtype_size(Dtype d) { return d == Dtype::kBinary32 ? 4 : 8; }

// rows * cols * elem, or throws when it does not fit in 64 bits.
std::uint64_t checked_payload(std::uint64_t rows, std::uint64_t cols, std::uint64_t elem,
                              const std::string& origin) {
  std::uint64_t n = 0;
  std::uint64_t bytes = 0;
  if (__builtin_mul_overflow(rows, cols, &n) || __builtin_mul_overflow(n, elem, &bytes)) {
    throw LengthError(origin + ": declared shape overflows 64-bit size");
  }
  return bytes;
}

void check_header_common(std::span<const std::uint8_t> bytes, const std::uint8_t (&magic)[4],
                         const char* kind, const std::string& origin) {
  if (bytes.size() < kHeaderSize) {
    std::ostringstream os;
    os << origin << ": " << bytes.size() << " bytes is too short for a " << kind << " header";
    throw LengthError(os.str());
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw FormatError(origin + ": bad magic, expected " + kind);
  }
  const auto version = get<std::uint16_t>(bytes, 4);
  if (version != kVersion) {
    throw FormatError(origin + ": unsupported " + kind + " version " + std::to_string(version));
  }
}

}  // namespace

void validate_features(const FeatureMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw ValidationError("feature matrix must have at least one row and one column");
  }
  auto data = m.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      std::ostringstream os;
      os << "non-finite feature at element " << i << " (row " << i / m.cols() << ", col "
         << i % m.cols() << ")";
      throw ValidationError(os.str());
    }
  }
}

void validate_labels(const LabelVector& y) {
  if (y.labels.empty()) throw ValidationError("label vector is empty");
  if (y.num_classes == 0) throw ValidationError("label vector declares zero classes");
  for (std::size_t i = 0; i < y.labels.size(); ++i) {
    if (y.labels[i] >= y.num_classes) {
      std::ostringstream os;
      os << "label " << y.labels[i] << " at index " << i << " is outside [0, " << y.num_classes
         << ")";
      throw ValidationError(os.str());
    }
  }
}

void check_paired(const FeatureMatrix& x, const LabelVector& y) {
  if (x.rows() != y.size()) {
    std::ostringstream os;
    os << "feature rows (" << x.rows() << ") and label count (" << y.size() << ") differ";
    throw ValidationError(os.str());
  }
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m, Dtype dtype) {
  validate_features(m);
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + m.size() * dtype_size(dtype));
  out.insert(out.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
  put<std::uint16_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put<std::uint8_t>(out, 0);
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  if (dtype == Dtype::kBinary32) {
    auto data = m.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto f = static_cast<float>(data[i]);
      if (!std::isfinite(f)) {
        throw ValidationError("feature element " + std::to_string(i) +
                              " overflows binary32");
      }
      put<float>(out, f);
    }
  } else {
    for (double v : m.data()) put<double>(out, v);
  }
  return out;
}

LoadedFeatures decode_features(std::span<const std::uint8_t> bytes, const std::string& origin) {
  check_header_common(bytes, kFeatureMagic, "FMAT", origin);
  const auto dtype_byte = get<std::uint8_t>(bytes, 6);
  if (dtype_byte != 1 && dtype_byte != 2) {
    throw FormatError(origin + ": unknown dtype code " + std::to_string(dtype_byte));
  }
  if (get<std::uint8_t>(bytes, 7) != 0) throw FormatError(origin + ": reserved byte is not zero");
  const auto dtype = static_cast<Dtype>(dtype_byte);
  const auto rows = get<std::uint64_t>(bytes, 8);
  const auto cols = get<std::uint64_t>(bytes, 16);
  if (rows == 0 || cols == 0) throw ValidationError(origin + ": empty feature shape");
  const std::uint64_t payload = checked_payload(rows, cols, dtype_size(dtype), origin);
  if (payload != bytes.size() - kHeaderSize) {
    std::ostringstream os;
    os << origin << ": header declares " << rows << "x" << cols << " (" << payload
       << " payload bytes) but file carries " << bytes.size() - kHeaderSize;
    throw LengthError(os.str());
  }

  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = dtype == Dtype::kBinary32
                         ? static_cast<double>(get<float>(bytes, kHeaderSize + 4 * i))
                         : get<double>(bytes, kHeaderSize + 8 * i);
    if (!std::isfinite(v)) {
      throw ValidationError(origin + ": non-finite feature at element " + std::to_string(i));
    }
    data[i] = v;
  }
  return {FeatureMatrix(rows, cols, std::move(data)), dtype};
}

std::vector<std::uint8_t> encode_labels(const LabelVector& y) {
  validate_labels(y);
  if (y.num_classes < 2) throw ValidationError("label files need at least two classes");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * y.size());
  out.insert(out.end(), std::begin(kLabelMagic), std::end(kLabelMagic));
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, 0);
  put<std::uint64_t>(out, y.size());
  put<std::uint64_t>(out, y.num_classes);
  for (std::uint32_t label : y.labels) put<std::uint32_t>(out, label);
  return out;
}

LabelVector decode_labels(std::span<const std::uint8_t> bytes, const std::string& origin) {
  check_header_common(bytes, kLabelMagic, "LVEC", origin);
  if (get<std::uint16_t>(bytes, 6) != 0) throw FormatError(origin + ": reserved field is not zero");
  const auto count = get<std::uint64_t>(bytes, 8);
  const auto num_classes = get<std::uint64_t>(bytes, 16);
  const std::uint64_t payload = checked_payload(count, 1, 4, origin);
  if (payload != bytes.size() - kHeaderSize) {
    std::ostringstream os;
    os << origin << ": header declares " << count << " labels but file carries "
       << bytes.size() - kHeaderSize << " payload bytes";
    throw LengthError(os.str());
  }
  if (count == 0) throw ValidationError(origin + ": label file holds no labels");
  if (num_classes < 2) throw ValidationError(origin + ": label files need at least two classes");

  LabelVector y;
  y.num_classes = num_classes;
  y.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) y.labels[i] = get<std::uint32_t>(bytes, kHeaderSize + 4 * i);
  try {
    validate_labels(y);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return y;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_features(const FeatureMatrix& m, const std::filesystem::path& path, Dtype dtype) {
  write_file_bytes(path, encode_features(m, dtype));
}

LoadedFeatures read_features_with_dtype(const std::filesystem::path& path) {
  return decode_features(read_file_bytes(path), path.string());
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  return read_features_with_dtype(path).values;
}

void write_labels(const LabelVector& y, const std::filesystem::path& path) {
  write_file_bytes(path, encode_labels(y));
}

LabelVector read_labels(const std::filesystem::path& path) {
  return decode_labels(read_file_bytes(path), path.string());
}

FeatureMatrix parse_csv_features(std::string_view text, bool has_header, const std::string& origin) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = has_header;

  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }

    std::size_t col = 0;
    while (true) {
      const auto comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        std::ostringstream os;
        os << origin << ": line " << line_no << " (data row " << rows + 1 << "), column "
           << col + 1 << ": '" << cell << "' is not a finite number";
        throw ValidationError(os.str());
      }
      data.push_back(value);
      ++col;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = col;
    } else if (col != cols) {
      std::ostringstream os;
      os << origin << ": line " << line_no << " has " << col << " columns, expected " << cols;
      throw ValidationError(os.str());
    }
    ++rows;
  }
  if (rows == 0) throw ValidationError(origin + ": no data rows");
  return FeatureMatrix(rows, cols, std::move(data));
}

FeatureMatrix read_csv_features(const std::filesystem::path& path, bool has_header) {
  return parse_csv_features(read_text_file(path), has_header, path.string());
}

}  // namespace rgcinit
