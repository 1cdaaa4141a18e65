#include "mdl/class_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace mdl {

namespace {

using nlohmann::json;

Parameter parse_value(const json& v) {
  if (v.is_string()) return Parameter::parse(v.get<std::string>());
  if (v.is_number_integer()) return Parameter(v.get<std::int64_t>(), 1);
  throw std::invalid_argument("parameter values must be strings such as \"3/16\" or \"0.0011b\"");
}

unsigned get_unsigned(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer() || obj[key].get<long long>() < 0) {
    throw std::invalid_argument(std::string("generator needs a non-negative integer \"") + key + "\"");
  }
  return obj[key].get<unsigned>();
}

double coded_complexity(const std::string& coding, const Parameter& p) {
  if (coding == "dyadic" || coding == "dyadic-Eq17") return dyadic_complexity(p);
  if (coding.rfind("constant:", 0) == 0) {
    try {
      return std::stod(coding.substr(9));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad constant coding '" + coding + "'");
    }
  }
  throw std::invalid_argument("unknown coding rule '" + coding + "'");
}

ModelClass from_generator(const json& gen) {
  if (!gen.is_object() || !gen.contains("kind") || !gen["kind"].is_string()) {
    throw std::invalid_argument("generator needs a string \"kind\"");
  }
  const std::string kind = gen["kind"].get<std::string>();
  if (kind == "counterexample") return counterexample_class(get_unsigned(gen, "N"));
  if (kind == "extended-counterexample") {
    std::vector<std::pair<Parameter, double>> extras;
    if (gen.contains("extras")) {
      for (const auto& e : gen["extras"]) {
        if (!e.contains("value") || !e.contains("kw")) throw std::invalid_argument("extras need value and kw");
        extras.emplace_back(parse_value(e["value"]), e["kw"].get<double>());
      }
    }
    return extended_counterexample_class(get_unsigned(gen, "N"), extras);
  }
  if (kind == "dyadic-grid") return dyadic_grid_class(get_unsigned(gen, "precision"));
  if (kind == "distorted") {
    if (!gen.contains("coeffs") || !gen["coeffs"].is_array()) {
      throw std::invalid_argument("distorted generator needs a \"coeffs\" array (constant term first)");
    }
    std::vector<Rational> coeffs;
    for (const auto& c : gen["coeffs"]) {
      if (c.is_number_integer()) {
        coeffs.emplace_back(c.get<std::int64_t>());
        continue;
      }
      if (!c.is_string()) throw std::invalid_argument("distortion coefficients must be integers or \"p/q\" strings");
      const std::string s = c.get<std::string>();
      const bool negative = !s.empty() && s.front() == '-';
      const std::string body = negative ? s.substr(1) : s;
      const auto slash = body.find('/');
      Rational r = slash == std::string::npos ? Rational(BigInt(body))
                                              : Rational(BigInt(body.substr(0, slash)), BigInt(body.substr(slash + 1)));
      coeffs.push_back(negative ? Rational(-r) : r);
    }
    return distorted_class(coeffs, get_unsigned(gen, "precision"));
  }
  throw std::invalid_argument("unknown generator kind '" + kind + "'");
}

}  // namespace

ModelClass class_from_json(const json& spec) {
  if (!spec.is_object()) throw std::invalid_argument("class definition must be a JSON object");
  std::optional<Parameter> truth;
  if (spec.contains("true") && !spec["true"].is_null()) truth = parse_value(spec["true"]);

  try {
    if (spec.contains("generator")) {
      ModelClass cls = from_generator(spec["generator"]);
      return truth ? cls.with_truth(*truth) : cls;
    }
    if (!spec.contains("parameters") || !spec["parameters"].is_array()) {
      throw std::invalid_argument("class definition needs \"parameters\" or \"generator\"");
    }
    const std::string coding = spec.value("coding", std::string());
    std::vector<CodedParameter> members;
    for (const auto& entry : spec["parameters"]) {
      const json& value = entry.is_object() ? entry.at("value") : entry;
      Parameter p = parse_value(value);
      double kw = 0.0;
      if (entry.is_object() && entry.contains("kw")) {
        kw = entry["kw"].get<double>();
      } else if (!coding.empty()) {
        kw = coded_complexity(coding, p);
      } else {
        throw std::invalid_argument("parameter " + p.to_string() + " has no kw and no coding rule is given");
      }
      members.emplace_back(std::move(p), kw);
    }
    return ModelClass(std::move(members), truth);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed class definition: ") + e.what());
  }
}

ModelClass load_class_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open class file " + path.string());
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument("class file " + path.string() + " is not valid JSON: " + e.what());
  }
  return class_from_json(spec);
}

json class_to_json(const ModelClass& cls) {
  json params = json::array();
  for (const auto& m : cls.members()) params.push_back({{"value", m.param.to_string()}, {"kw", m.complexity_kw}});
  json out = {{"parameters", std::move(params)}};
  if (cls.true_index()) out["true"] = cls[*cls.true_index()].param.to_string();
  return out;
}

}  // namespace mdl
