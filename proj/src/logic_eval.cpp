/* Copyright 2026 The OilSense Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"
#include "oilsense/logic.hpp"

namespace oilsense::logic {
namespace {

constexpr double kProbEpsilon = 1e-7;

struct CompiledAtom {
  Predicate pred;
  bool negated;
  std::size_t arg0;
  std::size_t arg1;  // unused for unary atoms
};

struct CompiledRule {
  std::vector<std::string> vars;
  std::vector<CompiledAtom> atoms;
  std::size_t head_var;
};

CompiledRule Compile(const RuleAST& rule) {
  CompiledRule c;
  c.vars = rule.Variables();
  auto index_of = [&c](const std::string& v) {
    return static_cast<std::size_t>(std::find(c.vars.begin(), c.vars.end(), v) - c.vars.begin());
  };
  for (const Atom& a : rule.body) {
    const auto pred = LookupPredicate(a.name);
    if (!pred) ThrowData("unknown predicate '" + a.name + "'");
    if (PredicateArity(*pred) != a.arity()) ThrowData("arity mismatch for predicate '" + a.name + "'");
    c.atoms.push_back({*pred, a.negated, index_of(a.args[0]), a.arity() == 2 ? index_of(a.args[1]) : 0});
  }
  c.head_var = index_of(rule.head.args.at(0));
  if (c.head_var >= c.vars.size()) ThrowData("head variable does not appear in the rule body");
  return c;
}

ClassLabel PredicateClass(Predicate p) {
  switch (p) {
    case Predicate::kSuspectedArea: return ClassLabel::kSuspectedArea;
    case Predicate::kGround: return ClassLabel::kGround;
    case Predicate::kOilStorageDevice: return ClassLabel::kOilStorageDevice;
    default: break;
  }
  ThrowData("predicate is not a class predicate");
}

double RawAtom(Predicate pred, std::size_t a, std::size_t b, const Scene& scene,
               const RelationTable& relations) {
  switch (pred) {
    case Predicate::kOn:
      return relations.at(a, b)[static_cast<std::size_t>(relnet::RelationLabel::kAbove)];
    case Predicate::kAround:
      return relations.at(a, b)[static_cast<std::size_t>(relnet::RelationLabel::kNearby)];
    default: {
      const DetectedObject& obj = scene.objects[a];
      return obj.label == PredicateClass(pred) ? obj.confidence : 0.0;
    }
  }
}

double AtomValue(const CompiledAtom& atom, std::span<const std::size_t> bind, const Scene& scene,
                 const RelationTable& relations) {
  const FuzzyValue v(RawAtom(atom.pred, bind[atom.arg0], bind[atom.arg1], scene, relations));
  return atom.negated ? FuzzyNot(v).value() : v.value();
}

// Calls fn(binding) for every assignment of objects to variables; the last
// variable varies fastest.
template <typename Fn>
void ForEachBinding(std::size_t n_vars, std::size_t n_objects, Fn&& fn) {
  if (n_objects == 0) return;
  std::vector<std::size_t> bind(n_vars, 0);
  for (;;) {
    fn(std::span<const std::size_t>(bind));
    std::size_t k = n_vars;
    while (k > 0) {
      --k;
      if (++bind[k] < n_objects) break;
      bind[k] = 0;
      if (k == 0) return;
    }
    if (n_vars == 0) return;
  }
}

// A binding is admissible when every positive class atom names an object of
// that class; variables of a rule about absent objects have no binding.
bool Admissible(const CompiledRule& c, std::span<const std::size_t> bind, const Scene& scene) {
  for (const CompiledAtom& a : c.atoms) {
    if (a.negated || a.pred == Predicate::kOn || a.pred == Predicate::kAround) continue;
    if (scene.objects[bind[a.arg0]].label != PredicateClass(a.pred)) return false;
  }
  return true;
}

template <typename Fn>
void ForEachAdmissibleBinding(const CompiledRule& c, const Scene& scene, Fn&& fn) {
  ForEachBinding(c.vars.size(), scene.objects.size(), [&](std::span<const std::size_t> bind) {
    if (Admissible(c, bind, scene)) fn(bind);
  });
}

void CheckRelations(const Scene& scene, const RelationTable& relations) {
  if (relations.size() != scene.objects.size()) {
    ThrowData("relation table covers " + std::to_string(relations.size()) + " objects, scene has " +
              std::to_string(scene.objects.size()));
  }
}

GroundingContext ToContext(const CompiledRule& c, std::span<const std::size_t> bind, const Scene& scene) {
  GroundingContext ctx;
  for (std::size_t v = 0; v < c.vars.size(); ++v) ctx.binding[c.vars[v]] = scene.objects[bind[v]].id;
  return ctx;
}

}  // namespace

FuzzyValue FuzzyNot(FuzzyValue x) { return FuzzyValue(1.0 - x.value()); }

FuzzyValue FuzzyOr(std::span<const FuzzyValue> xs) {
  if (xs.empty()) ThrowData("fuzzy or of an empty list");
  return *std::max_element(xs.begin(), xs.end());
}

double FuzzyAndRaw(std::span<const double> xs, const RuleParams& params) {
  if (xs.size() != params.weights.size()) {
    ThrowData("fuzzy and: " + std::to_string(xs.size()) + " inputs but " +
              std::to_string(params.weights.size()) + " weights");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += params.weights[i] * xs[i];
  return acc + params.bias;
}

FuzzyValue FuzzyAnd(std::span<const FuzzyValue> xs, const RuleParams& params) {
  std::vector<double> raw(xs.size());
  std::transform(xs.begin(), xs.end(), raw.begin(), [](FuzzyValue v) { return v.value(); });
  return FuzzyValue(FuzzyAndRaw(raw, params));
}

RelationTable::RelationTable(std::size_t n_objects)
    : n_(n_objects), probs_(n_objects * n_objects, {0.0, 0.0, 1.0}) {}

const std::array<double, relnet::kNumRelations>& RelationTable::at(std::size_t subject,
                                                                   std::size_t reference) const {
  if (subject >= n_ || reference >= n_) ThrowData("relation table index out of range");
  return probs_[subject * n_ + reference];
}

void RelationTable::set(std::size_t subject, std::size_t reference,
                        const std::array<double, relnet::kNumRelations>& probs) {
  if (subject >= n_ || reference >= n_) ThrowData("relation table index out of range");
  probs_[subject * n_ + reference] = probs;
}

FuzzyValue AtomProbability(const Atom& atom, const GroundingContext& ctx, const Scene& scene,
                           const RelationTable& relations) {
  CheckRelations(scene, relations);
  const auto pred = LookupPredicate(atom.name);
  if (!pred) ThrowData("unknown predicate '" + atom.name + "'");
  if (PredicateArity(*pred) != atom.arity()) ThrowData("arity mismatch for predicate '" + atom.name + "'");
  std::array<std::size_t, 2> idx{0, 0};
  for (std::size_t k = 0; k < atom.args.size(); ++k) {
    auto it = ctx.binding.find(atom.args[k]);
    if (it == ctx.binding.end()) ThrowData("variable '" + atom.args[k] + "' is unbound");
    auto obj = std::find_if(scene.objects.begin(), scene.objects.end(),
                            [id = it->second](const DetectedObject& o) { return o.id == id; });
    if (obj == scene.objects.end()) ThrowData("object id " + std::to_string(it->second) + " not in scene");
    idx[k] = static_cast<std::size_t>(obj - scene.objects.begin());
  }
  const FuzzyValue v(RawAtom(*pred, idx[0], idx[1], scene, relations));
  return atom.negated ? FuzzyNot(v) : v;
}

RuleEvaluation EvaluateRule(const RuleAST& rule, const RuleParams& params, const Scene& scene,
                            const RelationTable& relations) {
  CheckRelations(scene, relations);
  const CompiledRule c = Compile(rule);
  if (params.weights.size() != c.atoms.size()) ThrowData("rule parameters do not match the rule body");
  RuleEvaluation best{FuzzyValue(0.0), std::nullopt};
  std::vector<double> xs(c.atoms.size());
  std::vector<std::size_t> best_bind;
  bool have = false;
  ForEachAdmissibleBinding(c, scene, [&](std::span<const std::size_t> bind) {
    for (std::size_t k = 0; k < c.atoms.size(); ++k) xs[k] = AtomValue(c.atoms[k], bind, scene, relations);
    const FuzzyValue y(FuzzyAndRaw(xs, params));
    if (!have || y > best.score) {
      best.score = y;
      best_bind.assign(bind.begin(), bind.end());
      have = true;
    }
  });
  if (have) best.binding = ToContext(c, best_bind, scene);
  return best;
}

RulesetEvaluation EvaluateRuleset(std::span<const RuleAST> rules, std::span<const RuleParams> params,
                                  const Scene& scene, const RelationTable& relations) {
  if (rules.empty()) ThrowData("ruleset is empty");
  if (rules.size() != params.size()) ThrowData("ruleset and parameter counts differ");
  RulesetEvaluation out;
  std::optional<RuleEvaluation> best;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    RuleEvaluation ev = EvaluateRule(rules[r], params[r], scene, relations);
    out.rule_scores.push_back(ev.score);
    if (!best || ev.score > best->score) {
      best = ev;
      out.fired_rule = r;
    }
  }
  out.score = FuzzyOr(out.rule_scores);
  out.binding = best->binding;
  if (!out.binding) out.fired_rule.reset();
  return out;
}

std::map<int, FuzzyValue> HeadScores(std::span<const RuleAST> rules, std::span<const RuleParams> params,
                                     const Scene& scene, const RelationTable& relations) {
  if (rules.size() != params.size()) ThrowData("ruleset and parameter counts differ");
  CheckRelations(scene, relations);
  std::map<int, FuzzyValue> out;
  for (const DetectedObject& o : scene.objects) out[o.id] = FuzzyValue(0.0);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const CompiledRule c = Compile(rules[r]);
    std::vector<double> xs(c.atoms.size());
    ForEachAdmissibleBinding(c, scene, [&](std::span<const std::size_t> bind) {
      for (std::size_t k = 0; k < c.atoms.size(); ++k) xs[k] = AtomValue(c.atoms[k], bind, scene, relations);
      const FuzzyValue y(FuzzyAndRaw(xs, params[r]));
      FuzzyValue& slot = out[scene.objects[bind[c.head_var]].id];
      slot = std::max(slot, y);
    });
  }
  return out;
}

GroundedDataset::GroundedDataset(std::span<const RuleAST> rules, std::span<const LabeledScene> scenes) {
  std::vector<CompiledRule> compiled;
  for (const RuleAST& r : rules) {
    compiled.push_back(Compile(r));
    n_atoms_.push_back(compiled.back().atoms.size());
  }
  for (const LabeledScene& ls : scenes) {
    CheckRelations(ls.scene, ls.relations);
    SceneRows rows{ls.label, {}, {}};
    for (const CompiledRule& c : compiled) {
      std::vector<double> data;
      std::size_t n = 0;
      ForEachAdmissibleBinding(c, ls.scene, [&](std::span<const std::size_t> bind) {
        for (const CompiledAtom& a : c.atoms) data.push_back(AtomValue(a, bind, ls.scene, ls.relations));
        ++n;
      });
      rows.rows.push_back(std::move(data));
      rows.n_bindings.push_back(n);
    }
    scenes_.push_back(std::move(rows));
  }
}

double GroundedDataset::Score(std::size_t s, std::span<const RuleParams> params) const {
  const SceneRows& sr = scenes_.at(s);
  double best = 0.0;
  for (std::size_t r = 0; r < n_atoms_.size(); ++r) {
    const std::size_t k = n_atoms_[r];
    for (std::size_t b = 0; b < sr.n_bindings[r]; ++b) {
      const double y = std::clamp(
          FuzzyAndRaw(std::span<const double>(sr.rows[r].data() + b * k, k), params[r]), 0.0, 1.0);
      best = std::max(best, y);
    }
  }
  return best;
}

GroundedDataset::Loss GroundedDataset::LossAndGrad(std::span<const RuleParams> params) const {
  if (params.size() != n_atoms_.size()) ThrowData("ruleset and parameter counts differ");
  for (std::size_t r = 0; r < params.size(); ++r) {
    if (params[r].weights.size() != n_atoms_[r]) ThrowData("rule parameters do not match the rule body");
  }
  Loss out;
  for (std::size_t r = 0; r < params.size(); ++r) out.grads.push_back({std::vector<double>(n_atoms_[r], 0.0), 0.0});
  if (scenes_.empty()) return out;
  const double scale = 1.0 / static_cast<double>(scenes_.size());

  for (const SceneRows& sr : scenes_) {
    // First argmax over (rule, binding).
    bool have = false;
    double best_y = 0.0, best_z = 0.0;
    std::size_t best_r = 0, best_b = 0;
    for (std::size_t r = 0; r < n_atoms_.size(); ++r) {
      const std::size_t k = n_atoms_[r];
      for (std::size_t b = 0; b < sr.n_bindings[r]; ++b) {
        const double z = FuzzyAndRaw(std::span<const double>(sr.rows[r].data() + b * k, k), params[r]);
        const double y = std::clamp(z, 0.0, 1.0);
        if (!have || y > best_y) {
          have = true;
          best_y = y;
          best_z = z;
          best_r = r;
          best_b = b;
        }
      }
    }
    const double y_label = sr.label ? 1.0 : 0.0;
    const double p = std::clamp(best_y, kProbEpsilon, 1.0 - kProbEpsilon);
    out.loss -= scale * (y_label * std::log(p) + (1.0 - y_label) * std::log(1.0 - p));
    if (!have || best_y != p || best_z < 0.0 || best_z > 1.0) continue;
    const double dl_dp = scale * (-y_label / p + (1.0 - y_label) / (1.0 - p));
    const std::size_t k = n_atoms_[best_r];
    const double* x = sr.rows[best_r].data() + best_b * k;
    RuleParams& g = out.grads[best_r];
    for (std::size_t i = 0; i < k; ++i) g.weights[i] += dl_dp * x[i];
    g.bias += dl_dp;
  }
  return out;
}

void RuleTrainConfig::Validate() const {
  if (!(lr >= 0.0)) ThrowUsage("rule training: lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) ThrowUsage("rule training: momentum must be in [0, 1)");
}

std::vector<RuleParams> InitRuleParams(std::span<const RuleAST> rules, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::vector<RuleParams> out;
  for (const RuleAST& r : rules) {
    const double n = static_cast<double>(r.body.size());
    RuleParams p;
    for (std::size_t i = 0; i < r.body.size(); ++i) p.weights.push_back(0.9 / n * (1.0 + jitter(rng)));
    p.bias = 0.05;
    out.push_back(std::move(p));
  }
  return out;
}

RuleTrainResult TrainRuleParams(std::span<const RuleAST> rules, std::vector<RuleParams> initial,
                                std::span<const LabeledScene> dataset, const RuleTrainConfig& cfg) {
  cfg.Validate();
  CheckRuleParams(rules, initial);
  const bool any_pos = std::any_of(dataset.begin(), dataset.end(), [](const LabeledScene& s) { return s.label; });
  const bool any_neg = std::any_of(dataset.begin(), dataset.end(), [](const LabeledScene& s) { return !s.label; });
  if (!any_pos || !any_neg) ThrowData("rule training needs both leak and normal scenes");

  const GroundedDataset grounded(rules, dataset);
  RuleTrainResult result;
  result.params = std::move(initial);
  std::vector<RuleParams> velocity;
  for (const RuleParams& p : result.params) velocity.push_back({std::vector<double>(p.weights.size(), 0.0), 0.0});

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const GroundedDataset::Loss l = grounded.LossAndGrad(result.params);
    if (!std::isfinite(l.loss)) ThrowNumeric("rule training diverged at step " + std::to_string(step));
    result.loss_history.push_back(l.loss);
    for (std::size_t r = 0; r < result.params.size(); ++r) {
      RuleParams& p = result.params[r];
      RuleParams& v = velocity[r];
      for (std::size_t i = 0; i < p.weights.size(); ++i) {
        v.weights[i] = cfg.momentum * v.weights[i] + l.grads[r].weights[i];
        p.weights[i] -= cfg.lr * v.weights[i];
      }
      v.bias = cfg.momentum * v.bias + l.grads[r].bias;
      p.bias -= cfg.lr * v.bias;
    }
  }
  result.loss_history.push_back(grounded.LossAndGrad(result.params).loss);
  return result;
}

std::string SerializeRuleParams(std::span<const RuleParams> params) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t r = 0; r < params.size(); ++r) {
    doc[std::to_string(r)] = {{"weights", params[r].weights}, {"bias", params[r].bias}};
  }
  return doc.dump(2);
}

std::vector<RuleParams> ParseRuleParams(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ThrowData(std::string("rule parameter file: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) ThrowData("rule parameter file: expected an object keyed by rule index");
  std::vector<RuleParams> out(doc.size());
  std::vector<bool> seen(doc.size(), false);
  for (const auto& [key, value] : doc.items()) {
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      ThrowData("rule parameter file: key '" + key + "' is not a rule index");
    }
    if (idx >= out.size() || seen[idx]) ThrowData("rule parameter file: indices must be 0..n-1 without gaps");
    seen[idx] = true;
    try {
      out[idx].weights = value.at("weights").get<std::vector<double>>();
      out[idx].bias = value.at("bias").get<double>();
    } catch (const nlohmann::json::exception&) {
      ThrowData("rule parameter file: entry '" + key + "' needs weights and bias");
    }
  }
  return out;
}

void CheckRuleParams(std::span<const RuleAST> rules, std::span<const RuleParams> params) {
  if (rules.size() != params.size()) {
    ThrowData("have " + std::to_string(params.size()) + " parameter sets for " + std::to_string(rules.size()) +
              " rules");
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (params[r].weights.size() != rules[r].body.size()) {
      ThrowData("rule " + std::to_string(r) + " has " + std::to_string(rules[r].body.size()) +
                " body atoms but " + std::to_string(params[r].weights.size()) + " weights");
    }
  }
}

}  // namespace oilsense::logic
