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
#ifndef OILSENSE_LOGIC_HPP_
#define OILSENSE_LOGIC_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oilsense/relnet.hpp"
#include "oilsense/scene.hpp"

namespace oilsense::logic {

// Body predicates understood by the grounder.
enum class Predicate { kSuspectedArea, kGround, kOilStorageDevice, kOn, kAround };

std::optional<Predicate> LookupPredicate(std::string_view name);
std::string_view PredicateName(Predicate p);
int PredicateArity(Predicate p);

struct Atom {
  std::string name;
  std::vector<std::string> args;  // upper-case variables, 1 or 2
  bool negated = false;

  int arity() const { return static_cast<int>(args.size()); }
  friend bool operator==(const Atom&, const Atom&) = default;
};

inline constexpr std::size_t kMaxBodyAtoms = 16;

struct RuleAST {
  Atom head;
  std::vector<Atom> body;

  // Distinct variables in order of first appearance in the body.
  std::vector<std::string> Variables() const;
  friend bool operator==(const RuleAST&, const RuleAST&) = default;
};

// Conjunction weights, one per body atom, plus bias: [b1 .. bn, c].
struct RuleParams {
  std::vector<double> weights;
  double bias = 0.0;

  std::vector<double> Flatten() const;
  static RuleParams Unflatten(std::span<const double> flat);
  friend bool operator==(const RuleParams&, const RuleParams&) = default;
};

struct ParsedRule {
  RuleAST rule;
  std::optional<RuleParams> params;

  friend bool operator==(const ParsedRule&, const ParsedRule&) = default;
};

// Grammar (one statement per rule, '#' starts a comment):
//   rule   := atom "<-" atom ("&" atom)* ["@" "[" num ("," num)* "]"] "."
//   atom   := ["!"] IDENT "(" VAR ("," VAR)? ")"
// The optional "@ [...]" block carries [b1 .. bn, c]. Errors are
// Error(kData) prefixed with "line:col".
std::vector<ParsedRule> ParseRules(std::string_view text);
std::string PrintRule(const ParsedRule& rule);
std::string PrintRules(std::span<const ParsedRule> rules);

// Truth degree in [0, 1]; clamped at construction.
class FuzzyValue {
 public:
  constexpr FuzzyValue() = default;
  constexpr explicit FuzzyValue(double v) : v_(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v)) {}
  constexpr double value() const { return v_; }
  friend constexpr bool operator==(FuzzyValue, FuzzyValue) = default;
  friend constexpr auto operator<=>(FuzzyValue a, FuzzyValue b) { return a.v_ <=> b.v_; }

 private:
  double v_ = 0.0;
};

FuzzyValue FuzzyNot(FuzzyValue x);
// Max; throws Error(kData) on an empty list.
FuzzyValue FuzzyOr(std::span<const FuzzyValue> xs);
// Unclamped affine combination sum(b_i x_i) + c.
double FuzzyAndRaw(std::span<const double> xs, const RuleParams& params);
// clamp(sum(b_i x_i) + c, 0, 1); throws Error(kData) on length mismatch.
FuzzyValue FuzzyAnd(std::span<const FuzzyValue> xs, const RuleParams& params);

// Relation probabilities for every ordered object pair of one scene, indexed
// by object position in Scene::objects.
class RelationTable {
 public:
  RelationTable() = default;
  explicit RelationTable(std::size_t n_objects);

  std::size_t size() const { return n_; }
  const std::array<double, relnet::kNumRelations>& at(std::size_t subject, std::size_t reference) const;
  void set(std::size_t subject, std::size_t reference,
           const std::array<double, relnet::kNumRelations>& probs);

 private:
  std::size_t n_ = 0;
  std::vector<std::array<double, relnet::kNumRelations>> probs_;
};

// Variable -> object id.
struct GroundingContext {
  std::map<std::string, int> binding;
  friend bool operator==(const GroundingContext&, const GroundingContext&) = default;
};

// Unary atoms: the bound object's confidence when its class matches, else 0.
// On -> P(Above), Around -> P(Nearby). Negation wraps with FuzzyNot.
// Throws Error(kData) for unbound variables or unknown ids.
FuzzyValue AtomProbability(const Atom& atom, const GroundingContext& ctx, const Scene& scene,
                           const RelationTable& relations);

struct RuleEvaluation {
  FuzzyValue score;
  std::optional<GroundingContext> binding;  // empty when no binding exists
};

// Max over all variable-to-object bindings (existential semantics). A
// binding counts only if each positive class atom names an object of that
// class; with no such binding the rule scores 0.
RuleEvaluation EvaluateRule(const RuleAST& rule, const RuleParams& params, const Scene& scene,
                            const RelationTable& relations);

struct RulesetEvaluation {
  FuzzyValue score;
  std::optional<std::size_t> fired_rule;  // first maximizing rule
  std::optional<GroundingContext> binding;
  std::vector<FuzzyValue> rule_scores;
};

RulesetEvaluation EvaluateRuleset(std::span<const RuleAST> rules, std::span<const RuleParams> params,
                                  const Scene& scene, const RelationTable& relations);

// Best score per object bound to the head variable, over all rules.
std::map<int, FuzzyValue> HeadScores(std::span<const RuleAST> rules,
                                     std::span<const RuleParams> params, const Scene& scene,
                                     const RelationTable& relations);

struct LabeledScene {
  Scene scene;
  RelationTable relations;
  bool label = false;
};

// Precomputed atom truth degrees for every (scene, rule, binding).
class GroundedDataset {
 public:
  GroundedDataset(std::span<const RuleAST> rules, std::span<const LabeledScene> scenes);

  std::size_t num_scenes() const { return scenes_.size(); }
  std::size_t num_rules() const { return n_atoms_.size(); }

  // Ruleset score for scene s.
  double Score(std::size_t s, std::span<const RuleParams> params) const;

  struct Loss {
    double loss = 0.0;
    std::vector<RuleParams> grads;
  };
  // Mean binary cross-entropy of the ruleset score against the labels.
  // Subgradients: max routes to the first argmax (rule, then binding); the
  // clamp passes gradient only on [0, 1].
  Loss LossAndGrad(std::span<const RuleParams> params) const;

 private:
  struct SceneRows {
    bool label;
    // per rule: bindings x atoms, row-major
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> n_bindings;
  };
  std::vector<std::size_t> n_atoms_;
  std::vector<SceneRows> scenes_;
};

struct RuleTrainConfig {
  double lr = 0.02;
  std::size_t steps = 500;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  void Validate() const;
};

struct RuleTrainResult {
  std::vector<RuleParams> params;
  std::vector<double> loss_history;  // loss before each step, then final
};

// Seeded starting point: b_i near 0.9/n, c = 0.05.
std::vector<RuleParams> InitRuleParams(std::span<const RuleAST> rules, std::uint64_t seed);

// Full-batch gradient descent with momentum on the ruleset loss. All rules
// are trained jointly through the fuzzy-or. Throws Error(kData) unless both
// labels occur.
RuleTrainResult TrainRuleParams(std::span<const RuleAST> rules, std::vector<RuleParams> initial,
                                std::span<const LabeledScene> dataset, const RuleTrainConfig& cfg);

// {"0": {"weights": [...], "bias": c}, ...}
std::string SerializeRuleParams(std::span<const RuleParams> params);
std::vector<RuleParams> ParseRuleParams(std::string_view text);
// Checks count and per-rule length against `rules`.
void CheckRuleParams(std::span<const RuleAST> rules, std::span<const RuleParams> params);

}  // namespace oilsense::logic

#endif  // OILSENSE_LOGIC_HPP_
