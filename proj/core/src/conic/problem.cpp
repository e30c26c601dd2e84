#include "sdpkm/conic/problem.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace sdpkm::conic {

using nlohmann::json;

void ConicProblem::validate() const {
  const auto n = c.size();
  const auto m = b.size();
  if (a.rows() != m) {
    throw ProblemError("A has " + std::to_string(a.rows()) + " rows but b has " +
                       std::to_string(m));
  }
  if (a.cols() != n) {
    throw ProblemError("A has " + std::to_string(a.cols()) + " columns but c has " +
                       std::to_string(n));
  }
  for (const auto& cone : cones) {
    if (cone.dim < 1) throw ProblemError("cone of kind " + to_string(cone.kind) + " has dim < 1");
    if (cone.kind == ConeKind::SecondOrder && cone.dim < 2) {
      throw ProblemError("second-order cone needs dimension >= 2");
    }
  }
  if (total_size(cones) != m) {
    throw ProblemError("cone dimensions sum to " + std::to_string(total_size(cones)) +
                       " but there are " + std::to_string(m) + " rows");
  }
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& blk : variable_map) {
    if (blk.offset < 0 || blk.length < 1 || blk.offset + blk.length > n) {
      throw ProblemError("variable block '" + blk.name + "' out of range");
    }
    if (blk.psd_order > 0 && svec_size(blk.psd_order) != blk.length) {
      throw ProblemError("variable block '" + blk.name + "' length does not match psd order");
    }
    for (int j = blk.offset; j < blk.offset + blk.length; ++j) ++seen[static_cast<std::size_t>(j)];
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (seen[static_cast<std::size_t>(j)] != 1) {
      throw ProblemError("variable " + std::to_string(j) + " appears " +
                         std::to_string(seen[static_cast<std::size_t>(j)]) +
                         " times in the variable map");
    }
  }
  if (!c.allFinite() || !b.allFinite()) throw ProblemError("non-finite entry in b or c");
  for (int k = 0; k < a.outerSize(); ++k) {
    for (decltype(a)::InnerIterator it(a, k); it; ++it) {
      if (!std::isfinite(it.value())) throw ProblemError("non-finite entry in A");
    }
  }
}

const VariableBlock& ConicProblem::block(std::string_view name) const {
  for (const auto& blk : variable_map) {
    if (blk.name == name) return blk;
  }
  throw ProblemError("no variable block named '" + std::string(name) + "'");
}

std::string dump_problem_json(const ConicProblem& p) {
  json j;
  j["format"] = "sdpkm-conic-problem";
  j["version"] = 1;
  j["label"] = p.label;
  j["clusters"] = p.clusters;
  j["num_vars"] = p.num_vars();
  j["num_rows"] = p.num_rows();
  j["objective_offset"] = p.objective_offset;
  j["svec"] = "upper triangle, column-major, off-diagonal scaled by sqrt(2)";
  j["form"] = "minimize c'x s.t. Ax + s = b, s in K";
  json cones = json::array();
  for (const auto& c : p.cones) cones.push_back({{"kind", to_string(c.kind)}, {"dim", c.dim}});
  j["cones"] = std::move(cones);
  std::vector<int> rows, cols;
  std::vector<double> vals;
  for (int k = 0; k < p.a.outerSize(); ++k) {
    for (decltype(p.a)::InnerIterator it(p.a, k); it; ++it) {
      rows.push_back(static_cast<int>(it.row()));
      cols.push_back(static_cast<int>(it.col()));
      vals.push_back(it.value());
    }
  }
  j["A"] = {{"rows", rows}, {"cols", cols}, {"values", vals}};
  j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
  j["c"] = std::vector<double>(p.c.data(), p.c.data() + p.c.size());
  json vm = json::array();
  for (const auto& blk : p.variable_map) {
    vm.push_back({{"name", blk.name},
                  {"offset", blk.offset},
                  {"length", blk.length},
                  {"psd_order", blk.psd_order}});
  }
  j["variable_map"] = std::move(vm);
  return j.dump();
}

ConicProblem parse_problem_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProblemError(std::string("invalid problem JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "sdpkm-conic-problem") {
      throw ProblemError("unrecognized problem format");
    }
    ConicProblem p;
    p.label = j.value("label", "");
    p.clusters = j.value("clusters", 0);
    p.objective_offset = j.value("objective_offset", 0.0);
    const auto n = j.at("num_vars").get<int>();
    const auto m = j.at("num_rows").get<int>();
    for (const auto& c : j.at("cones")) {
      p.cones.push_back({cone_kind_from_string(c.at("kind").get<std::string>()),
                         c.at("dim").get<int>()});
    }
    const auto rows = j.at("A").at("rows").get<std::vector<int>>();
    const auto cols = j.at("A").at("cols").get<std::vector<int>>();
    const auto vals = j.at("A").at("values").get<std::vector<double>>();
    if (rows.size() != cols.size() || rows.size() != vals.size()) {
      throw ProblemError("A triplet arrays differ in length");
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k] < 0 || rows[k] >= m || cols[k] < 0 || cols[k] >= n) {
        throw ProblemError("A triplet " + std::to_string(k) + " out of range");
      }
      trip.emplace_back(rows[k], cols[k], vals[k]);
    }
    p.a.resize(m, n);
    p.a.setFromTriplets(trip.begin(), trip.end());
    const auto b = j.at("b").get<std::vector<double>>();
    const auto c = j.at("c").get<std::vector<double>>();
    p.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    p.c = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    for (const auto& blk : j.at("variable_map")) {
      p.variable_map.push_back({blk.at("name").get<std::string>(), blk.at("offset").get<int>(),
                                blk.at("length").get<int>(), blk.value("psd_order", 0)});
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ProblemError(std::string("malformed problem JSON: ") + e.what());
  }
}

int ProblemBuilder::add_variables(std::string name, int length, int psd_order) {
  const int off = nvars_;
  map_.push_back({std::move(name), off, length, psd_order});
  nvars_ += length;
  return off;
}

void ProblemBuilder::add_cost(int var, double coef) { cost_.emplace_back(var, coef); }

void ProblemBuilder::push_row(const Affine& row) {
  const int r = num_rows();
  for (const auto& [var, coef] : row.terms) {
    if (coef != 0.0) triplets_.emplace_back(r, var, -coef);
  }
  rhs_.push_back(row.constant);
}

void ProblemBuilder::push_cone(Cone c) {
  const bool mergeable = c.kind == ConeKind::Zero || c.kind == ConeKind::NonNeg;
  if (mergeable && !cones_.empty() && cones_.back().kind == c.kind) {
    cones_.back().dim += c.dim;
  } else {
    cones_.push_back(c);
  }
}

void ProblemBuilder::add_zero(const Affine& row) {
  push_row(row);
  push_cone(Cone::zero(1));
}

void ProblemBuilder::add_nonneg(const Affine& row) {
  push_row(row);
  push_cone(Cone::nonneg(1));
}

void ProblemBuilder::add_soc(const std::vector<Affine>& rows) {
  for (const auto& r : rows) push_row(r);
  push_cone(Cone::second_order(static_cast<int>(rows.size())));
}

void ProblemBuilder::add_psd(int n, const std::vector<Affine>& svec_rows) {
  if (static_cast<int>(svec_rows.size()) != svec_size(n)) {
    throw ProblemError("psd cone of order " + std::to_string(n) + " needs " +
                       std::to_string(svec_size(n)) + " rows");
  }
  for (const auto& r : svec_rows) push_row(r);
  push_cone(Cone::psd(n));
}

ConicProblem ProblemBuilder::build(std::string label) const {
  ConicProblem p;
  p.label = std::move(label);
  p.c = Eigen::VectorXd::Zero(nvars_);
  for (const auto& [var, coef] : cost_) p.c(var) += coef;
  p.a.resize(num_rows(), nvars_);
  p.a.setFromTriplets(triplets_.begin(), triplets_.end());
  p.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
  p.cones = cones_;
  p.variable_map = map_;
  p.objective_offset = offset_;
  p.validate();
  return p;
}

}  // namespace sdpkm::conic
