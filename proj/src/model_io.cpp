#include "packinglab/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace packinglab {

using nlohmann::json;

namespace {

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<double> flatten_points(const json& arr, std::size_t& dimension) {
  if (!arr.is_array()) throw ConfigError("sites must be an array of coordinate arrays");
  std::vector<double> out;
  dimension = 0;
  for (const auto& p : arr) {
    std::vector<double> x = p.is_number() ? std::vector<double>{p.get<double>()} : p.get<std::vector<double>>();
    if (dimension == 0) dimension = x.size();
    if (x.size() != dimension || dimension == 0) throw ConfigError("sites have inconsistent dimension");
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

}  // namespace

Box parse_box(const json& j) {
  Box b{get<std::vector<double>>(j, "lower"), get<std::vector<double>>(j, "upper")};
  if (b.lower.size() != b.upper.size() || b.lower.empty()) throw ConfigError("box lower/upper size mismatch");
  return b;
}

json box_to_json(const Box& box) { return {{"lower", box.lower}, {"upper", box.upper}}; }

Model parse_model(const json& j) {
  Model m;
  const json& space = member(j, "space");
  const auto stype = get<std::string>(space, "type");
  if (stype == "box") {
    ContinuousBox cb{parse_box(space), value_or(space, "periodic", true)};
    m.space = GroundSpace(std::move(cb));
  } else if (stype == "sites") {
    DiscreteSites ds;
    ds.coords = flatten_points(member(space, "sites"), ds.dimension);
    m.space = GroundSpace(std::move(ds));
  } else {
    throw ConfigError("unknown space type '" + stype + "'");
  }

  const json& measure = member(j, "measure");
  const auto mtype = get<std::string>(measure, "type");
  auto number = [](const json& obj, const char* key) {
    const json& v = member(obj, key);
    // "inf" is accepted so validation can report it
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  };
  if (mtype == "homogeneous") {
    m.measure = Homogeneous{number(measure, "density")};
  } else if (mtype == "atomic") {
    m.measure = Atomic{get<std::vector<double>>(measure, "weights")};
  } else if (mtype == "grid") {
    m.measure = PiecewiseGrid{get<std::vector<std::size_t>>(measure, "cells"), get<std::vector<double>>(measure, "densities")};
  } else {
    throw ConfigError("unknown measure type '" + mtype + "'");
  }

  const json& kernel = member(j, "kernel");
  const auto ktype = get<std::string>(kernel, "type");
  if (ktype == "zero") {
    m.kernel = ConflictKernel::zero();
  } else if (ktype == "hard") {
    m.kernel = ConflictKernel::hard(get<double>(kernel, "radius"), value_or(kernel, "strict", false));
  } else if (ktype == "constant") {
    m.kernel = ConflictKernel::constant(get<double>(kernel, "probability"), get<double>(kernel, "range"));
  } else if (ktype == "gaussian") {
    m.kernel = ConflictKernel::gaussian(get<double>(kernel, "amplitude"), get<double>(kernel, "scale"),
                                        get<double>(kernel, "range"));
  } else if (ktype == "matrix") {
    const auto rows = get<std::vector<std::vector<double>>>(kernel, "values");
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.size()) throw ConfigError("kernel matrix must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    m.kernel = ConflictKernel::matrix(rows.size(), std::move(flat));
  } else {
    throw ConfigError("unknown kernel type '" + ktype + "'");
  }

  if (j.contains("seed_policy")) m.seed_policy.seed = get<std::uint64_t>(j.at("seed_policy"), "seed");
  return m;
}

json model_to_json(const Model& m) {
  json j;
  if (m.space.is_discrete()) {
    const auto& s = m.space.sites();
    json sites = json::array();
    for (std::size_t i = 0; i < s.count(); ++i) {
      auto x = s.site(i);
      sites.push_back(std::vector<double>(x.begin(), x.end()));
    }
    j["space"] = {{"type", "sites"}, {"sites", sites}};
  } else {
    j["space"] = box_to_json(m.space.box().bounds);
    j["space"]["type"] = "box";
    j["space"]["periodic"] = m.space.box().periodic;
  }
  if (const auto* h = std::get_if<Homogeneous>(&m.measure)) {
    j["measure"] = {{"type", "homogeneous"}, {"density", h->density}};
  } else if (const auto* a = std::get_if<Atomic>(&m.measure)) {
    j["measure"] = {{"type", "atomic"}, {"weights", a->weights}};
  } else {
    const auto& g = std::get<PiecewiseGrid>(m.measure);
    j["measure"] = {{"type", "grid"}, {"cells", g.cells}, {"densities", g.densities}};
  }
  const auto& k = m.kernel;
  switch (k.shape) {
    case KernelShape::Zero:
      j["kernel"] = {{"type", "zero"}};
      break;
    case KernelShape::HardIndicator:
      j["kernel"] = {{"type", "hard"}, {"radius", k.range}, {"strict", k.strict}};
      break;
    case KernelShape::ConstantWithinRange:
      j["kernel"] = {{"type", "constant"}, {"probability", k.probability}, {"range", k.range}};
      break;
    case KernelShape::TruncatedGaussian:
      j["kernel"] = {{"type", "gaussian"}, {"amplitude", k.probability}, {"scale", k.scale}, {"range", k.range}};
      break;
    case KernelShape::SiteMatrix: {
      json rows = json::array();
      for (std::size_t r = 0; r < k.table_size; ++r) {
        rows.push_back(std::vector<double>(k.table.begin() + static_cast<std::ptrdiff_t>(r * k.table_size),
                                           k.table.begin() + static_cast<std::ptrdiff_t>((r + 1) * k.table_size)));
      }
      j["kernel"] = {{"type", "matrix"}, {"values", rows}};
      break;
    }
  }
  j["seed_policy"] = {{"seed", m.seed_policy.seed}};
  return j;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Model load_model(const std::filesystem::path& path) {
  const json j = load_json(path);
  return parse_model(j.contains("model") ? j.at("model") : j);
}

TestFunction parse_test_function(const json& j, const AtomicSystem& sys) {
  const std::size_t n = sys.size();
  if (j.is_number()) return TestFunction::constant(n, j.get<double>());
  if (j.is_array()) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != n) throw ConfigError("test function has " + std::to_string(v.size()) + " values for " +
                                         std::to_string(n) + " atoms");
    return {std::move(v)};
  }
  if (j.is_object() && j.contains("box")) {
    const Box b = parse_box(j.at("box"));
    const double in = value_or(j, "inside", 0.0), out = value_or(j, "outside", 1.0);
    TestFunction v = TestFunction::constant(n, out);
    for (std::size_t i = 0; i < n; ++i) {
      if (b.contains(sys.position(i))) v.values[i] = in;
    }
    return v;
  }
  if (j.is_object() && j.contains("complement_of")) {
    const auto x = get<std::vector<double>>(j, "complement_of");
    std::int64_t site = -1;
    if (sys.model.space.is_discrete()) {
      auto s = sys.model.space.find_site(x);
      if (!s) throw ConfigError("complement_of must name a site on discrete spaces");
      site = static_cast<std::int64_t>(*s);
    }
    return conflict_complement(sys, x, site);
  }
  throw ConfigError("unrecognised test function spec");
}

PointFunction parse_point_function(const json& j, const Model& model) {
  if (j.is_number()) return constant_function(j.get<double>());
  if (j.is_array()) {
    if (!model.space.is_discrete()) throw ConfigError("per-atom test functions need a discrete space");
    return site_function(parse_test_function(j, atomic_system(model)));
  }
  if (j.is_object() && j.contains("box")) {
    const Box b = parse_box(j.at("box"));
    const double in = value_or(j, "inside", 0.0), out = value_or(j, "outside", 1.0);
    return [b, in, out](std::span<const double> x, std::int64_t) { return b.contains(x) ? in : out; };
  }
  if (j.is_object() && j.contains("complement_of")) {
    const auto y = get<std::vector<double>>(j, "complement_of");
    std::int64_t site = -1;
    if (model.space.is_discrete()) {
      auto s = model.space.find_site(y);
      if (!s) throw ConfigError("complement_of must name a site on discrete spaces");
      site = static_cast<std::int64_t>(*s);
    }
    return [model, y, site](std::span<const double> x, std::int64_t xs) { return 1.0 - model.conflict(x, xs, y, site); };
  }
  throw ConfigError("unrecognised test function spec");
}

std::vector<double> parse_time_grid(const json& j) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    out = j.get<std::vector<double>>();
  } else if (j.is_object()) {
    const double from = get<double>(j, "from"), to = get<double>(j, "to"), step = get<double>(j, "step");
    if (!(step > 0.0) || to < from) throw ConfigError("time grid needs step > 0 and to >= from");
    const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(from + static_cast<double>(i) * step);
  } else {
    throw ConfigError("unrecognised time grid");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0) || (i > 0 && out[i] <= out[i - 1])) throw ConfigError("time grid must be increasing and >= 0");
  }
  return out;
}

SolverMethod parse_method(const std::string& s) {
  if (s == "auto") return SolverMethod::Auto;
  if (s == "closure") return SolverMethod::Closure;
  if (s == "picard") return SolverMethod::Picard;
  throw ConfigError("unknown solver method '" + s + "'");
}

MaternOrder parse_order(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return MaternOrder::inf();
    throw ConfigError("order must be an integer or \"inf\"");
  }
  if (!j.is_number_integer() || j.get<int>() < 0) throw ConfigError("order must be a nonnegative integer or \"inf\"");
  return MaternOrder::finite(j.get<int>());
}

}  // namespace packinglab
