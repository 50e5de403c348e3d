#include "rgcinit/model.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rgcinit/errors.hpp"

namespace rgcinit {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(what + " is not finite");
  return v;
}

std::vector<double> number_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(finite_number(j[i], what + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::size_t count_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_unsigned()) {
    throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return doc[key].get<std::size_t>();
}

}  // namespace

std::string_view to_string(ModelSource s) {
  switch (s) {
    case ModelSource::kRgc: return "rgc";
    case ModelSource::kRandom: return "random";
    case ModelSource::kNcc: return "ncc";
    case ModelSource::kTrained: return "trained";
    case ModelSource::kBayes: return "bayes";
  }
  return "rgc";
}

ModelSource model_source_from_string(std::string_view s) {
  if (s == "rgc") return ModelSource::kRgc;
  if (s == "random") return ModelSource::kRandom;
  if (s == "ncc") return ModelSource::kNcc;
  if (s == "trained") return ModelSource::kTrained;
  if (s == "bayes") return ModelSource::kBayes;
  throw ValidationError("unknown model source '" + std::string(s) + "'");
}

std::string_view to_string(AlphaRule r) {
  return r == AlphaRule::kAsPrinted ? "as-printed" : "match-reference-spread";
}

AlphaRule alpha_rule_from_string(std::string_view s) {
  if (s == "match-reference-spread") return AlphaRule::kMatchReferenceSpread;
  if (s == "as-printed") return AlphaRule::kAsPrinted;
  throw ValidationError("unknown calibration rule '" + std::string(s) + "'");
}

void validate_classifier(const LinearClassifier& c) {
  if (c.num_classes() == 0 || c.dim() == 0) {
    throw ValidationError("classifier needs at least one class and one dimension");
  }
  if (c.bias.size() != c.num_classes()) {
    std::ostringstream os;
    os << "bias length " << c.bias.size() << " does not match " << c.num_classes() << " classes";
    throw ValidationError(os.str());
  }
  for (double w : c.weights.data())
    if (!std::isfinite(w)) throw ValidationError("classifier weights contain non-finite values");
  for (double b : c.bias)
    if (!std::isfinite(b)) throw ValidationError("classifier bias contains non-finite values");
  if (const auto& cal = c.metadata.calibration) {
    if (cal->v.size() != c.dim()) throw ValidationError("calibration vector length differs from dim");
  }
}

std::string model_to_text(const LinearClassifier& c) {
  validate_classifier(c);
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["num_classes"] = c.num_classes();
  doc["dim"] = c.dim();
  json rows = json::array();
  for (std::size_t k = 0; k < c.num_classes(); ++k) {
    auto r = c.weights.row(k);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  doc["weights"] = std::move(rows);
  doc["bias"] = c.bias;

  json meta;
  meta["source"] = std::string(to_string(c.metadata.source));
  meta["epsilon"] = c.metadata.epsilon ? json(*c.metadata.epsilon) : json(nullptr);
  if (const auto& cal = c.metadata.calibration) {
    json jc;
    jc["alpha"] = cal->alpha;
    jc["beta"] = cal->beta;
    jc["v"] = cal->v;
    jc["rule"] = std::string(to_string(cal->rule));
    jc["alternate_alpha"] = cal->alternate_alpha ? json(*cal->alternate_alpha) : json(nullptr);
    meta["calibration"] = std::move(jc);
  }
  meta["notes"] = c.metadata.notes;
  doc["metadata"] = std::move(meta);
  return doc.dump(2) + "\n";
}

LinearClassifier model_from_text(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin + ": not a valid model document: " + e.what());
  }
  try {
    if (!doc.is_object()) throw FormatError("model document must be an object");
    if (count_field(doc, "format_version") != kModelFormatVersion) {
      throw FormatError("unsupported model format_version");
    }
    const std::size_t k = count_field(doc, "num_classes");
    const std::size_t d = count_field(doc, "dim");
    if (!doc.contains("weights") || !doc["weights"].is_array()) {
      throw ValidationError("field 'weights' must be an array of rows");
    }
    const json& rows = doc["weights"];
    if (rows.size() != k) {
      std::ostringstream os;
      os << "weights has " << rows.size() << " rows, num_classes is " << k;
      throw ValidationError(os.str());
    }
    LinearClassifier c;
    c.weights = Matrix(k, d);
    for (std::size_t r = 0; r < k; ++r) {
      auto values = number_array(rows[r], "weights[" + std::to_string(r) + "]");
      if (values.size() != d) {
        std::ostringstream os;
        os << "weights row " << r << " has " << values.size() << " entries, dim is " << d;
        throw ValidationError(os.str());
      }
      std::copy(values.begin(), values.end(), c.weights.row(r).begin());
    }
    if (!doc.contains("bias")) throw ValidationError("field 'bias' is missing");
    c.bias = number_array(doc["bias"], "bias");

    if (doc.contains("metadata") && !doc["metadata"].is_null()) {
      const json& meta = doc["metadata"];
      if (!meta.is_object()) throw ValidationError("metadata must be an object");
      if (meta.contains("source")) {
        c.metadata.source = model_source_from_string(meta["source"].get<std::string>());
      }
      if (meta.contains("epsilon") && !meta["epsilon"].is_null()) {
        c.metadata.epsilon = finite_number(meta["epsilon"], "metadata.epsilon");
      }
      if (meta.contains("calibration") && !meta["calibration"].is_null()) {
        const json& jc = meta["calibration"];
        CalibrationRecord cal;
        cal.alpha = finite_number(jc.at("alpha"), "calibration.alpha");
        cal.beta = finite_number(jc.at("beta"), "calibration.beta");
        cal.v = number_array(jc.at("v"), "calibration.v");
        if (jc.contains("rule")) cal.rule = alpha_rule_from_string(jc["rule"].get<std::string>());
        if (jc.contains("alternate_alpha") && !jc["alternate_alpha"].is_null()) {
          cal.alternate_alpha = finite_number(jc["alternate_alpha"], "calibration.alternate_alpha");
        }
        c.metadata.calibration = std::move(cal);
      }
      if (meta.contains("notes")) c.metadata.notes = meta["notes"].get<std::vector<std::string>>();
    }
    validate_classifier(c);
    return c;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kData && dynamic_cast<const FormatError*>(&e) != nullptr) {
      throw FormatError(origin + ": " + e.what());
    }
    throw ValidationError(origin + ": " + e.what());
  } catch (const json::exception& e) {
    throw FormatError(origin + ": malformed model document: " + e.what());
  }
}

void write_model(const LinearClassifier& c, const std::filesystem::path& path) {
  write_text_file(path, model_to_text(c));
}

LinearClassifier read_model(const std::filesystem::path& path) {
  return model_from_text(read_text_file(path), path.string());
}

Matrix compute_logits(const LinearClassifier& c, const FeatureMatrix& x) {
  if (x.cols() != c.dim()) {
    std::ostringstream os;
    os << "features have dimension " << x.cols() << ", model expects " << c.dim();
    throw ValidationError(os.str());
  }
  const std::size_t k = c.num_classes();
  const std::size_t d = c.dim();
  const Matrix wt = c.weights.transposed();  // d x K, so the inner loop runs over classes
  Matrix logits(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto z = logits.row(i);
    std::copy(c.bias.begin(), c.bias.end(), z.begin());
    auto xi = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double xij = xi[j];
      auto wj = wt.row(j);
      for (std::size_t c2 = 0; c2 < k; ++c2) z[c2] += xij * wj[c2];
    }
  }
  return logits;
}

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;
  return best;
}

}  // namespace rgcinit
