#include "qdde/problem_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qdde {

namespace {

// Typed read of an optional member with a field path for errors.
template <class T>
T get_or(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ProblemError(path + key, std::string("wrong type: ") + e.what());
  }
}

template <class T>
T get_req(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ProblemError(path + key, "required field missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ProblemError(path + key, std::string("wrong type: ") + e.what());
  }
}

const json& get_array(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ProblemError(path + key, "required field missing");
  const json& a = obj.at(key);
  if (!a.is_array()) throw ProblemError(path + key, "array expected");
  return a;
}

cplx get_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (!v.is_object()) throw ProblemError(path, "complex number {re, im} expected");
  return {get_or<double>(v, "re", path + ".", 0.0), get_or<double>(v, "im", path + ".", 0.0)};
}

}  // namespace

json to_json(cplx v) { return json{{"re", v.real()}, {"im", v.imag()}}; }

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError("problem", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line, col = 1;
      else ++col;
    }
    throw ProblemError(path, "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                                 ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ProblemError("--set", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream ks(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ks, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& pc = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(pc);
      } catch (const std::exception&) {
        throw ProblemError(key, "array index expected at '" + pc + "'");
      }
      if (idx >= node->size()) throw ProblemError(key, "array index out of range at '" + pc + "'");
      node = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null()) throw ProblemError(key, "cannot descend into a scalar at '" + pc + "'");
      node = &(*node)[pc];
    }
    if (last) *node = value;
  }
}

ProblemSpec problem_from_json(const json& doc) {
  if (!doc.is_object()) throw ProblemError("problem", "top-level object expected");
  ProblemSpec p;
  const json& q = doc.contains("q") ? doc.at("q") : throw ProblemError("q", "required field missing");
  p.q.modulus = get_req<double>(q, "modulus", "q.");
  if (q.contains("b") && !q.at("b").is_null()) p.q.b = get_req<int>(q, "b", "q.");
  if (q.contains("angle") && !q.at("angle").is_null()) p.q.explicit_angle = get_req<double>(q, "angle", "q.");
  if (p.q.b && p.q.explicit_angle) throw ProblemError("q", "give either b or angle, not both");
  p.S = get_req<int>(doc, "S", "");
  p.r1 = get_req<int>(doc, "r1", "");
  p.r2 = get_req<int>(doc, "r2", "");
  p.q.r2 = p.r2;

  const json& terms = get_array(doc, "terms", "");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string path = "terms[" + std::to_string(i) + "].";
    OperatorTerm t;
    t.k = get_req<int>(terms[i], "k", path);
    t.m0 = get_req<int>(terms[i], "m0", path);
    t.m1 = get_req<int>(terms[i], "m1", path);
    std::vector<std::pair<int, cplx>> b;
    const json& bs = get_array(terms[i], "b", path);
    for (std::size_t c = 0; c < bs.size(); ++c) {
      const std::string bp = path + "b[" + std::to_string(c) + "]";
      b.emplace_back(get_req<int>(bs[c], "s", bp + "."), get_complex(bs[c], bp));
    }
    try {
      t.b = Polynomial(std::move(b));
    } catch (const std::invalid_argument& e) {
      throw ProblemError(path + "b", e.what());
    }
    p.terms.push_back(std::move(t));
  }

  const json& init = get_array(doc, "initial", "");
  for (std::size_t i = 0; i < init.size(); ++i) {
    const std::string path = "initial[" + std::to_string(i) + "].";
    InitialDatum d;
    d.j = get_req<int>(init[i], "j", path);
    const std::string side = get_or<std::string>(init[i], "side", path, "t");
    if (side == "t") d.side = InitialDatum::Side::t;
    else if (side == "borel") d.side = InitialDatum::Side::borel;
    else throw ProblemError(path + "side", "expected \"t\" or \"borel\"");
    const json& cs = get_array(init[i], "coeffs", path);
    for (std::size_t c = 0; c < cs.size(); ++c) d.coeffs.push_back(get_complex(cs[c], path + "coeffs[" + std::to_string(c) + "]"));
    if (d.coeffs.empty()) throw ProblemError(path + "coeffs", "at least one coefficient required");
    p.initial.push_back(std::move(d));
  }

  const json& dom = doc.contains("domain") ? doc.at("domain") : throw ProblemError("domain", "required field missing");
  if (!dom.contains("lambda")) throw ProblemError("domain.lambda", "required field missing");
  p.domain.lambda = get_complex(dom.at("lambda"), "domain.lambda");
  p.domain.delta = get_req<double>(dom, "delta", "domain.");
  if (!dom.contains("r0")) throw ProblemError("domain.r0", "required field missing");
  const json& r0 = dom.at("r0");
  if (r0.is_string()) {
    if (r0.get<std::string>() != "auto") throw ProblemError("domain.r0", "number or \"auto\" expected");
    p.r0_auto = true;
    p.domain.r0 = std::numeric_limits<double>::infinity();  // resolved from the growth fit
  } else {
    p.domain.r0 = get_req<double>(dom, "r0", "domain.");
  }
  const json& V = get_array(dom, "V", "domain.");
  for (std::size_t i = 0; i < V.size(); ++i) p.domain.V_sample.push_back(get_complex(V[i], "domain.V[" + std::to_string(i) + "]"));
  p.domain.k_window = get_or<int>(dom, "k_window", "domain.", 0);
  p.epsilon_sector = get_or<double>(dom, "epsilon_sector", "domain.", 0.1);

  if (doc.contains("truncation")) {
    const json& tr = doc.at("truncation");
    p.trunc.M = get_or<int>(tr, "M", "truncation.", p.trunc.M);
    p.trunc.H = get_or<int>(tr, "H", "truncation.", p.trunc.H);
    p.trunc.l_min = get_or<int>(tr, "l_min", "truncation.", p.trunc.l_min);
    p.trunc.l_max = get_or<int>(tr, "l_max", "truncation.", p.trunc.l_max);
    p.trunc.tail_tol = get_or<double>(tr, "tail_tol", "truncation.", p.trunc.tail_tol);
  }
  if (doc.contains("fit")) {
    const json& f = doc.at("fit");
    p.fit.N = get_or<int>(f, "N", "fit.", p.fit.N);
    p.fit.t_rays = get_or<int>(f, "t_rays", "fit.", p.fit.t_rays);
    p.fit.t_points = get_or<int>(f, "t_points", "fit.", p.fit.t_points);
  }
  if (doc.contains("T0")) {
    const json& t0 = doc.at("T0");
    if (t0.is_number()) p.T0.assign(static_cast<std::size_t>(std::max(p.S, 0)), t0.get<double>());
    else p.T0 = get_req<std::vector<double>>(doc, "T0", "");
  }
  p.check_invariants();
  return p;
}

ProblemSpec load_problem(const std::string& path, const std::vector<std::string>& overrides, json* effective) {
  json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  ProblemSpec p = problem_from_json(doc);
  if (effective) *effective = std::move(doc);
  return p;
}

std::string problem_hash(const json& doc) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qdde
