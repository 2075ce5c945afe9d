#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "n2a/nn.hpp"

namespace n2a {

// Node-replication map used when widening a layer from n_old to n_new nodes.
// Indices are 0-based internally: map[j] = j for j < n_old (every original
// node maps to itself), the remaining entries are uniform draws from the
// originals. repetition[o] counts how often original node o appears in map.
struct RandomMapping {
  std::size_t n_old = 0;
  std::size_t n_new = 0;
  std::vector<std::size_t> map;
  std::vector<std::size_t> repetition;
};

RandomMapping random_mapping(std::size_t n_old, std::size_t n_new, std::uint64_t seed);

// Widens hidden layer `layer_index` (1-based) to `new_width`. New nodes copy
// the incoming weights and bias of a randomly chosen original node; every
// outgoing weight of a node replicated r times is divided by r, so the layer
// after it (next hidden layer or the classifier) sees an unchanged sum and
// the network function is preserved exactly for noise_eps = 0. noise_eps > 0
// adds U(-eps, eps) noise to the replicated incoming weights to break the
// symmetry between clones before further training.
Network widen(const Network& net, std::size_t layer_index, std::size_t new_width,
              double noise_eps, std::uint64_t seed);

// Inserts an identity-initialized layer (weight = I, bias = 0, activation
// copied) after hidden layer `after_layer_index` (1-based). Exactly
// function-preserving for relu/identity activations; for sigmoid the
// inserted layer changes the outputs and only the shape is guaranteed.
Network deepen(const Network& net, std::size_t after_layer_index);

struct TransformStep {
  enum class Op { Widen, Deepen };
  Op op;
  std::size_t index = 0;  // widen: layer (1-based); deepen: insert after layer
  std::size_t width = 0;  // widen only

  friend bool operator==(const TransformStep&, const TransformStep&) = default;
};

struct TransformPlan {
  std::vector<TransformStep> steps;

  std::string to_json_string() const;
  static TransformPlan from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static TransformPlan load(const std::string& path);

  friend bool operator==(const TransformPlan&, const TransformPlan&) = default;
};

// Computes a deepen-then-widen step sequence turning the teacher's hidden
// widths into the student's. Throws PlanError when the student is shallower
// or no order-preserving alignment exists.
TransformPlan plan_transform(const std::vector<std::size_t>& teacher_hidden,
                             const std::vector<std::size_t>& student_hidden);

// Arch-level application of a plan (hidden widths only).
std::vector<std::size_t> apply_plan_arch(const TransformPlan& plan,
                                         std::vector<std::size_t> hidden);

// Applies the plan to an actual network; widen seeds derive from `seed`.
Network apply_plan(const Network& net, const TransformPlan& plan, double noise_eps,
                   std::uint64_t seed);

}  // namespace n2a
