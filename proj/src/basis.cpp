#include "padr/basis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "padr/errors.hpp"

namespace padr {

namespace {

using nlohmann::json;

const char* kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::identity: return "identity";
    case TransformKind::exp_scaled: return "exp_scaled";
    case TransformKind::abs: return "abs";
    case TransformKind::square: return "square";
    case TransformKind::exp_negsum: return "exp_negsum";
  }
  return "?";
}

TransformKind parse_kind(const std::string& s) {
  if (s == "identity") return TransformKind::identity;
  if (s == "exp_scaled") return TransformKind::exp_scaled;
  if (s == "abs") return TransformKind::abs;
  if (s == "square") return TransformKind::square;
  if (s == "exp_negsum") return TransformKind::exp_negsum;
  throw ValidationError("basis spec: unknown transform kind '" + s + "'");
}

std::string covariate_label(const TwoSampleData& data, int j) {
  const auto col = static_cast<std::size_t>(data.column_of(j));
  if (col < data.covariate_names.size()) return data.covariate_names[col];
  return "x" + std::to_string(j);
}

std::string column_name(const Transform& t, const TwoSampleData& data) {
  std::ostringstream os;
  switch (t.kind) {
    case TransformKind::identity: os << covariate_label(data, t.js[0]); break;
    case TransformKind::exp_scaled: os << "exp(" << t.c << "*" << covariate_label(data, t.js[0]) << ")"; break;
    case TransformKind::abs: os << "|" << covariate_label(data, t.js[0]) << "|"; break;
    case TransformKind::square: os << covariate_label(data, t.js[0]) << "^2"; break;
    case TransformKind::exp_negsum:
      os << "exp(";
      for (int j : t.js) os << "-" << covariate_label(data, j);
      os << ")";
      break;
  }
  return os.str();
}

double apply(const Transform& t, const Eigen::Ref<const Eigen::RowVectorXd>& row, const TwoSampleData& data) {
  const auto x = [&](int j) { return row(data.column_of(j)); };
  switch (t.kind) {
    case TransformKind::identity: return x(t.js[0]);
    case TransformKind::exp_scaled: return std::exp(t.c * x(t.js[0]));
    case TransformKind::abs: return std::abs(x(t.js[0]));
    case TransformKind::square: return x(t.js[0]) * x(t.js[0]);
    case TransformKind::exp_negsum: {
      double s = 0.0;
      for (int j : t.js) s -= x(j);
      return std::exp(s);
    }
  }
  return 0.0;
}

void check_spec(const BasisSpec& spec, const TwoSampleData& data) {
  const Eigen::Index raw = data.raw_dim();
  for (std::size_t k = 0; k < spec.transforms.size(); ++k) {
    const Transform& t = spec.transforms[k];
    if (t.js.empty()) throw ValidationError("basis spec: transform " + std::to_string(k) + " has no covariate index");
    if (t.kind != TransformKind::exp_negsum && t.js.size() != 1) {
      throw ValidationError("basis spec: transform " + std::to_string(k) + " takes exactly one covariate index");
    }
    for (int j : t.js) {
      if (j < 1 || j > raw) {
        throw ValidationError("basis spec: covariate index " + std::to_string(j) + " out of range 1.." +
                              std::to_string(raw) + " (intercept is not indexable)");
      }
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (spec.transforms[m] == t) {
        throw ValidationError("basis spec: duplicate transform at positions " + std::to_string(m) + " and " +
                              std::to_string(k));
      }
    }
  }
}

}  // namespace

Transform identity(int j) { return {TransformKind::identity, {j}, 1.0}; }
Transform exp_scaled(double c, int j) { return {TransformKind::exp_scaled, {j}, c}; }
Transform abs_of(int j) { return {TransformKind::abs, {j}, 1.0}; }
Transform square(int j) { return {TransformKind::square, {j}, 1.0}; }
Transform exp_negsum(std::vector<int> js) { return {TransformKind::exp_negsum, std::move(js), 1.0}; }

BasisSpec parse_basis_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("basis spec: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("transforms") || !doc["transforms"].is_array()) {
    throw ValidationError("basis spec: expected an object with a 'transforms' array");
  }
  BasisSpec spec;
  try {
    for (const auto& item : doc["transforms"]) {
      Transform t;
      t.kind = parse_kind(item.at("kind").get<std::string>());
      if (t.kind == TransformKind::exp_negsum) {
        t.js = item.at("js").get<std::vector<int>>();
      } else {
        t.js = {item.at("j").get<int>()};
      }
      if (t.kind == TransformKind::exp_scaled) t.c = item.at("c").get<double>();
      spec.transforms.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("basis spec: ") + e.what());
  }
  return spec;
}

BasisSpec load_basis_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open basis spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_basis_json(ss.str());
}

std::string to_json(const BasisSpec& spec) {
  json arr = json::array();
  for (const auto& t : spec.transforms) {
    json item = {{"kind", kind_name(t.kind)}};
    if (t.kind == TransformKind::exp_negsum) {
      item["js"] = t.js;
    } else {
      item["j"] = t.js.front();
    }
    if (t.kind == TransformKind::exp_scaled) item["c"] = t.c;
    arr.push_back(std::move(item));
  }
  return json{{"transforms", arr}}.dump();
}

BasisSpec preset_sim(int raw_dim) {
  BasisSpec spec;
  for (int j = 1; j <= raw_dim; ++j) spec.transforms.push_back(identity(j));
  for (int j = 1; j <= raw_dim; ++j) spec.transforms.push_back(exp_scaled(1.0, j));
  for (int j = 1; j <= raw_dim; ++j) spec.transforms.push_back(abs_of(j));
  for (int a = 1; a <= raw_dim; ++a) {
    for (int b = a + 1; b <= raw_dim; ++b) spec.transforms.push_back(exp_negsum({a, b}));
  }
  if (raw_dim >= 3) {
    std::vector<int> all;
    for (int j = 1; j <= raw_dim; ++j) all.push_back(j);
    spec.transforms.push_back(exp_negsum(all));
  }
  return spec;
}

BasisSpec preset_k401(int raw_dim, const std::vector<int>& nonbinary) {
  BasisSpec spec;
  for (int j = 1; j <= raw_dim; ++j) spec.transforms.push_back(identity(j));
  for (int j : nonbinary) spec.transforms.push_back(exp_scaled(-0.3, j));
  for (int j : nonbinary) spec.transforms.push_back(abs_of(j));
  for (int j : nonbinary) spec.transforms.push_back(square(j));
  return spec;
}

RawBasis evaluate_basis(const BasisSpec& spec, const TwoSampleData& data) {
  check_spec(spec, data);
  const Eigen::Index p = spec.dim();
  RawBasis out;
  out.source.resize(data.n(), p);
  out.target.resize(data.N(), p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Transform& t = spec.transforms[static_cast<std::size_t>(k)];
    out.names.push_back(column_name(t, data));
    for (Eigen::Index i = 0; i < data.n(); ++i) out.source(i, k) = apply(t, data.source_x.row(i), data);
    for (Eigen::Index i = 0; i < data.N(); ++i) out.target(i, k) = apply(t, data.target_x.row(i), data);
    if (!out.source.col(k).allFinite() || !out.target.col(k).allFinite()) {
      throw ValidationError("basis column '" + out.names.back() + "' has non-finite values (consider --standardize)");
    }
    const double lo = std::min(out.source.col(k).minCoeff(), out.target.col(k).minCoeff());
    const double hi = std::max(out.source.col(k).maxCoeff(), out.target.col(k).maxCoeff());
    if (lo == hi) out.warnings.push_back("basis column '" + out.names.back() + "' is constant across the pooled sample");
  }
  return out;
}

RawBasis build_basis(const BasisSpec& spec, const TwoSampleData& data) {
  if (spec.dim() <= data.d()) {
    throw ValidationError("basis dimension " + std::to_string(spec.dim()) +
                          " must exceed the covariate dimension " + std::to_string(data.d()));
  }
  return evaluate_basis(spec, data);
}

}  // namespace padr
