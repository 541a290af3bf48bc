#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coremech/market.hpp"

namespace coremech {

using Json = nlohmann::ordered_json;

struct ParseResult {
  MarketInstance instance;
  std::vector<std::string> warnings;  // unknown fields and other tolerated oddities
};

namespace io_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::kSchemaViolation, path + ": " + message);
}

inline void warn_unknown(const Json& object, const std::string& path,
                         std::initializer_list<const char*> known,
                         std::vector<std::string>* warnings) {
  for (const auto& [key, value] : object.items()) {
    bool recognized = false;
    for (const char* k : known) recognized = recognized || key == k;
    if (!recognized) warnings->push_back("unknown field " + path + "/" + key + " ignored");
  }
}

inline const Json& expect(const Json& object, const char* key, const std::string& path) {
  if (!object.contains(key)) fail(path, std::string("missing required field '") + key + "'");
  return object.at(key);
}

inline double expect_number(const Json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

inline std::string expect_string(const Json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

inline BidCurve parse_curve(const Json& node, const std::string& path,
                            std::vector<std::string>* warnings) {
  if (!node.is_object()) fail(path, "curve must be an object");
  const std::string type = expect_string(expect(node, "type", path), path + "/type");
  if (type == "quadratic") {
    warn_unknown(node, path, {"type", "a", "b", "domain"}, warnings);
    const Json& domain = expect(node, "domain", path);
    if (!domain.is_array() || domain.size() != 2) fail(path + "/domain", "expected [lo, hi]");
    return make_quadratic(expect_number(expect(node, "a", path), path + "/a"),
                          expect_number(expect(node, "b", path), path + "/b"),
                          expect_number(domain[0], path + "/domain"),
                          expect_number(domain[1], path + "/domain"));
  }
  if (type == "piecewise_linear") {
    warn_unknown(node, path, {"type", "breakpoints"}, warnings);
    const Json& pts = expect(node, "breakpoints", path);
    if (!pts.is_array() || pts.empty()) fail(path + "/breakpoints", "expected [[q, cost], ...]");
    std::vector<PwlBreakpoint> breakpoints;
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2) fail(path + "/breakpoints", "expected [q, cost] pairs");
      breakpoints.push_back({expect_number(p[0], path), expect_number(p[1], path)});
    }
    return make_pwl(std::move(breakpoints));
  }
  if (type == "discrete_offers") {
    warn_unknown(node, path, {"type", "offers"}, warnings);
    const Json& offers = expect(node, "offers", path);
    if (!offers.is_array()) fail(path + "/offers", "expected a list of offers");
    DiscreteOffers d;
    for (const auto& offer : offers) {
      const std::string opath = path + "/offers";
      warn_unknown(offer, opath, {"quantity", "price"}, warnings);
      const Json& quantity = expect(offer, "quantity", opath);
      if (!quantity.is_array() || quantity.empty()) fail(opath, "offer quantity must be a vector");
      Eigen::VectorXd q(quantity.size());
      for (std::size_t k = 0; k < quantity.size(); ++k) q(k) = expect_number(quantity[k], opath);
      d.offers.push_back({q, expect_number(expect(offer, "price", opath), opath + "/price")});
    }
    return BidCurve{d, 0.0};
  }
  fail(path + "/type", "unknown curve type '" + type + "'");
}

inline VarRef resolve_var(const MarketInstance& inst, const std::string& token,
                          const std::string& path) {
  // "<bidder id>" or "<bidder id>:<component>" or a recourse variable name.
  if (const int bidder = inst.find_bidder(token); bidder >= 0) {
    return VarRef{VarRef::Kind::kBidder, bidder, 0};
  }
  if (const auto colon = token.rfind(':'); colon != std::string::npos) {
    const std::string suffix = token.substr(colon + 1);
    if (!suffix.empty() && suffix.find_first_not_of("0123456789") == std::string::npos) {
      if (const int bidder = inst.find_bidder(token.substr(0, colon)); bidder >= 0) {
        return VarRef{VarRef::Kind::kBidder, bidder, std::stoi(suffix)};
      }
    }
  }
  if (inst.recourse) {
    for (int i = 0; i < static_cast<int>(inst.recourse->variables.size()); ++i) {
      if (inst.recourse->variables[i] == token) return VarRef{VarRef::Kind::kRecourse, i, 0};
    }
  }
  fail(path, "unknown variable '" + token + "'");
}

inline std::vector<LinearTerm> parse_terms(const MarketInstance& inst, const Json& terms,
                                           const std::string& path) {
  if (!terms.is_array()) fail(path, "expected a list of [variable, coefficient] pairs");
  std::vector<LinearTerm> out;
  for (const auto& term : terms) {
    if (!term.is_array() || term.size() != 2) fail(path, "expected [variable, coefficient]");
    out.push_back(
        {resolve_var(inst, expect_string(term[0], path), path), expect_number(term[1], path)});
  }
  return out;
}

inline std::string var_token(const MarketInstance& inst, const VarRef& ref) {
  if (ref.kind == VarRef::Kind::kRecourse) return inst.recourse->variables[ref.index];
  const std::string& id = inst.bidders[ref.index].id;
  return ref.comp == 0 ? id : id + ":" + std::to_string(ref.comp);
}

}  // namespace io_detail

// Parses a market description document. Unknown fields warn rather than
// fail; structural problems raise SchemaViolation with a field path.
inline ParseResult parse_market(const std::string& text) {
  using namespace io_detail;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw Error(ErrorCode::kSchemaViolation,
                "line " + std::to_string(line) + ": " + std::string(e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorCode::kSchemaViolation, "top level must be an object");

  ParseResult result;
  MarketInstance& inst = result.instance;
  warn_unknown(doc, "", {"meta", "network", "bidders", "constraints", "recourse"},
               &result.warnings);

  const Json& meta = expect(doc, "meta", "/meta");
  warn_unknown(meta, "/meta", {"kind", "currency", "tolerance", "title"}, &result.warnings);
  const std::string kind = expect_string(expect(meta, "kind", "/meta"), "/meta/kind");
  if (kind == "one_sided") {
    inst.kind = MarketKind::kOneSided;
  } else if (kind == "exchange") {
    inst.kind = MarketKind::kExchange;
  } else {
    fail("/meta/kind", "expected 'one_sided' or 'exchange'");
  }
  if (meta.contains("currency")) {
    inst.meta.currency = expect_string(meta.at("currency"), "/meta/currency");
  }
  if (meta.contains("title")) inst.meta.title = expect_string(meta.at("title"), "/meta/title");
  if (meta.contains("tolerance")) {
    inst.meta.tolerance = expect_number(meta.at("tolerance"), "/meta/tolerance");
  }

  if (doc.contains("network")) {
    const Json& network = doc.at("network");
    warn_unknown(network, "/network", {"nodes", "reference", "lines"}, &result.warnings);
    Network net;
    for (const auto& node : expect(network, "nodes", "/network")) {
      net.nodes.push_back(expect_string(node, "/network/nodes"));
    }
    const std::string ref =
        expect_string(expect(network, "reference", "/network"), "/network/reference");
    net.reference = net.node_index(ref);
    if (net.reference < 0) fail("/network/reference", "unknown node '" + ref + "'");
    if (network.contains("lines")) {
      for (const auto& line : network.at("lines")) {
        const std::string path = "/network/lines";
        warn_unknown(line, path, {"from", "to", "susceptance", "limit"}, &result.warnings);
        Line l;
        l.from = net.node_index(expect_string(expect(line, "from", path), path));
        l.to = net.node_index(expect_string(expect(line, "to", path), path));
        if (l.from < 0 || l.to < 0) fail(path, "line endpoint is not a known node");
        l.susceptance = expect_number(expect(line, "susceptance", path), path);
        if (line.contains("limit") && !line.at("limit").is_null()) {
          l.limit = expect_number(line.at("limit"), path + "/limit");
        }
        net.lines.push_back(l);
      }
    }
    inst.network = std::move(net);
  }

  const Json& bidders = expect(doc, "bidders", "/bidders");
  if (!bidders.is_array() || bidders.empty()) fail("/bidders", "expected a nonempty list");
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const std::string path = "/bidders/" + std::to_string(i);
    const Json& b = bidders[i];
    warn_unknown(b, path, {"id", "node", "curve", "true_curve"}, &result.warnings);
    Bidder bidder;
    bidder.id = expect_string(expect(b, "id", path), path + "/id");
    if (b.contains("node") && !b.at("node").is_null()) {
      bidder.node = expect_string(b.at("node"), path + "/node");
    }
    bidder.curve = parse_curve(expect(b, "curve", path), path + "/curve", &result.warnings);
    if (b.contains("true_curve") && !b.at("true_curve").is_null()) {
      bidder.true_curve = parse_curve(b.at("true_curve"), path + "/true_curve", &result.warnings);
    }
    inst.bidders.push_back(std::move(bidder));
  }

  // Recourse variables must exist before constraint terms can reference them.
  if (doc.contains("recourse")) {
    const Json& recourse = doc.at("recourse");
    warn_unknown(recourse, "/recourse", {"variables", "linear", "quadratic", "scenarios"},
                 &result.warnings);
    Recourse rec;
    for (const auto& name : expect(recourse, "variables", "/recourse")) {
      rec.variables.push_back(expect_string(name, "/recourse/variables"));
    }
    inst.recourse = std::move(rec);
    Recourse& r = *inst.recourse;
    if (recourse.contains("linear")) {
      r.linear = parse_terms(inst, recourse.at("linear"), "/recourse/linear");
    }
    if (recourse.contains("quadratic")) {
      for (const auto& term : recourse.at("quadratic")) {
        const std::string path = "/recourse/quadratic";
        if (!term.is_array() || term.size() != 3) fail(path, "expected [var, var, coefficient]");
        r.quadratic.push_back({resolve_var(inst, expect_string(term[0], path), path),
                               resolve_var(inst, expect_string(term[1], path), path),
                               expect_number(term[2], path)});
      }
    }
    if (recourse.contains("scenarios")) {
      for (const auto& scenario : recourse.at("scenarios")) {
        const std::string path = "/recourse/scenarios";
        warn_unknown(scenario, path, {"weight", "linear"}, &result.warnings);
        RecourseScenario s;
        s.weight = expect_number(expect(scenario, "weight", path), path + "/weight");
        s.linear = parse_terms(inst, expect(scenario, "linear", path), path + "/linear");
        r.scenarios.push_back(std::move(s));
      }
    }
  }

  if (doc.contains("constraints")) {
    const Json& constraints = doc.at("constraints");
    if (!constraints.is_array()) fail("/constraints", "expected a list");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const std::string path = "/constraints/" + std::to_string(i);
      const Json& c = constraints[i];
      warn_unknown(c, path, {"name", "terms", "sense", "rhs"}, &result.warnings);
      LinearConstraint row;
      if (c.contains("name")) row.name = expect_string(c.at("name"), path + "/name");
      row.terms = parse_terms(inst, expect(c, "terms", path), path + "/terms");
      const std::string sense = expect_string(expect(c, "sense", path), path + "/sense");
      if (sense == "==") {
        row.sense = Sense::kEq;
      } else if (sense == "<=") {
        row.sense = Sense::kLe;
      } else if (sense == ">=") {
        row.sense = Sense::kGe;
      } else {
        fail(path + "/sense", "expected '==', '<=' or '>='");
      }
      row.rhs = expect_number(expect(c, "rhs", path), path + "/rhs");
      inst.constraints.push_back(std::move(row));
    }
  }

  const auto structural = structural_violations(inst);
  if (!structural.empty()) {
    fail("/" + structural.front().where, structural.front().message);
  }
  return result;
}

inline ParseResult parse_market_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_market(buffer.str());
}

// Canonical serialization; parse(emit(parse(x))) is byte-stable.
inline std::string emit_market(const MarketInstance& inst) {
  using namespace io_detail;
  Json doc = Json::object();

  Json meta = Json::object();
  meta["kind"] = inst.kind == MarketKind::kOneSided ? "one_sided" : "exchange";
  meta["currency"] = inst.meta.currency;
  if (!inst.meta.title.empty()) meta["title"] = inst.meta.title;
  if (inst.meta.tolerance) meta["tolerance"] = *inst.meta.tolerance;
  doc["meta"] = std::move(meta);

  if (inst.network) {
    const Network& net = *inst.network;
    Json network = Json::object();
    network["nodes"] = net.nodes;
    network["reference"] = net.nodes[net.reference];
    Json lines = Json::array();
    for (const auto& line : net.lines) {
      Json l = Json::object();
      l["from"] = net.nodes[line.from];
      l["to"] = net.nodes[line.to];
      l["susceptance"] = line.susceptance;
      if (line.limit) l["limit"] = *line.limit;
      lines.push_back(std::move(l));
    }
    network["lines"] = std::move(lines);
    doc["network"] = std::move(network);
  }

  auto curve_json = [](const BidCurve& curve) {
    Json c = Json::object();
    if (curve.is_quadratic()) {
      const auto& q = curve.quadratic();
      c["type"] = "quadratic";
      c["a"] = q.a;
      c["b"] = q.b;
      c["domain"] = Json::array({q.domain.lo, q.domain.hi});
    } else if (curve.is_pwl()) {
      c["type"] = "piecewise_linear";
      Json pts = Json::array();
      for (const auto& p : curve.pwl().points) pts.push_back(Json::array({p.quantity, p.cost}));
      c["breakpoints"] = std::move(pts);
    } else {
      c["type"] = "discrete_offers";
      Json offers = Json::array();
      for (const auto& offer : curve.discrete().offers) {
        Json o = Json::object();
        Json q = Json::array();
        for (int k = 0; k < offer.quantity.size(); ++k) q.push_back(offer.quantity(k));
        o["quantity"] = std::move(q);
        o["price"] = offer.price;
        offers.push_back(std::move(o));
      }
      c["offers"] = std::move(offers);
    }
    return c;
  };

  Json bidders = Json::array();
  for (const auto& bidder : inst.bidders) {
    Json b = Json::object();
    b["id"] = bidder.id;
    if (bidder.node) b["node"] = *bidder.node;
    b["curve"] = curve_json(bidder.curve);
    if (bidder.true_curve) b["true_curve"] = curve_json(*bidder.true_curve);
    bidders.push_back(std::move(b));
  }
  doc["bidders"] = std::move(bidders);

  if (!inst.constraints.empty()) {
    Json constraints = Json::array();
    for (const auto& row : inst.constraints) {
      Json c = Json::object();
      if (!row.name.empty()) c["name"] = row.name;
      Json terms = Json::array();
      for (const auto& term : row.terms) {
        terms.push_back(Json::array({var_token(inst, term.var), term.coef}));
      }
      c["terms"] = std::move(terms);
      c["sense"] = row.sense == Sense::kEq ? "==" : row.sense == Sense::kLe ? "<=" : ">=";
      c["rhs"] = row.rhs;
      constraints.push_back(std::move(c));
    }
    doc["constraints"] = std::move(constraints);
  }

  if (inst.recourse) {
    const Recourse& rec = *inst.recourse;
    Json recourse = Json::object();
    recourse["variables"] = rec.variables;
    if (!rec.linear.empty()) {
      Json linear = Json::array();
      for (const auto& term : rec.linear) {
        linear.push_back(Json::array({var_token(inst, term.var), term.coef}));
      }
      recourse["linear"] = std::move(linear);
    }
    if (!rec.quadratic.empty()) {
      Json quadratic = Json::array();
      for (const auto& term : rec.quadratic) {
        quadratic.push_back(
            Json::array({var_token(inst, term.a), var_token(inst, term.b), term.coef}));
      }
      recourse["quadratic"] = std::move(quadratic);
    }
    if (!rec.scenarios.empty()) {
      Json scenarios = Json::array();
      for (const auto& scenario : rec.scenarios) {
        Json s = Json::object();
        s["weight"] = scenario.weight;
        Json linear = Json::array();
        for (const auto& term : scenario.linear) {
          linear.push_back(Json::array({var_token(inst, term.var), term.coef}));
        }
        s["linear"] = std::move(linear);
        scenarios.push_back(std::move(s));
      }
      recourse["scenarios"] = std::move(scenarios);
    }
    doc["recourse"] = std::move(recourse);
  }

  return doc.dump(2) + "\n";
}

}  // namespace coremech
