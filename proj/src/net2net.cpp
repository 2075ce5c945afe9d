#include "n2a/net2net.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace n2a {

using nlohmann::json;

namespace {

RandomMapping random_mapping_gen(std::size_t n_old, std::size_t n_new,
                                 std::mt19937_64& gen) {
  if (n_old == 0) throw PlanError("random_mapping: layer has no nodes");
  if (n_new < n_old)
    throw PlanError("random_mapping: widening only (" + std::to_string(n_new) + " < " +
                    std::to_string(n_old) + ")");
  RandomMapping m;
  m.n_old = n_old;
  m.n_new = n_new;
  m.map.resize(n_new);
  m.repetition.assign(n_old, 0);
  for (std::size_t j = 0; j < n_old; ++j) m.map[j] = j;
  std::uniform_int_distribution<std::size_t> pick(0, n_old - 1);
  for (std::size_t j = n_old; j < n_new; ++j) m.map[j] = pick(gen);
  for (std::size_t j = 0; j < n_new; ++j) ++m.repetition[m.map[j]];
  return m;
}

}  // namespace

RandomMapping random_mapping(std::size_t n_old, std::size_t n_new, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return random_mapping_gen(n_old, n_new, gen);
}

Network widen(const Network& net, std::size_t layer_index, std::size_t new_width,
              double noise_eps, std::uint64_t seed) {
  net.validate();
  if (layer_index < 1 || layer_index > net.hidden.size())
    throw ShapeError("widen: layer index " + std::to_string(layer_index) +
                     " out of range [1," + std::to_string(net.hidden.size()) + "]");
  if (noise_eps < 0.0) throw ConfigError("widen: noise_eps must be >= 0");

  const std::size_t l = layer_index - 1;
  const std::size_t n_old = net.hidden[l].out_dim();
  if (new_width < n_old)
    throw PlanError("widen: cannot narrow layer " + std::to_string(layer_index) +
                    " from " + std::to_string(n_old) + " to " + std::to_string(new_width));
  if (new_width == n_old) return net;

  std::mt19937_64 gen(seed);
  const RandomMapping m = random_mapping_gen(n_old, new_width, gen);
  std::uniform_real_distribution<double> noise(-noise_eps, noise_eps);

  Network out = net;
  const Layer& in_old = net.hidden[l];
  Layer& in_new = out.hidden[l];
  in_new.weights = Matrix(new_width, in_old.in_dim());
  in_new.bias.assign(new_width, 0.0);
  for (std::size_t j = 0; j < new_width; ++j) {
    const std::size_t src = m.map[j];
    const double* w_src = in_old.weights.row(src);
    double* w_dst = in_new.weights.row(j);
    for (std::size_t i = 0; i < in_old.in_dim(); ++i) w_dst[i] = w_src[i];
    in_new.bias[j] = in_old.bias[src];
    if (j >= n_old && noise_eps > 0.0)
      for (std::size_t i = 0; i < in_old.in_dim(); ++i) w_dst[i] += noise(gen);
  }

  // Outgoing weights: each column goes to original/r so that replicated
  // nodes together contribute exactly the teacher's weight.
  const Layer& out_old = (l + 1 < net.hidden.size()) ? net.hidden[l + 1] : net.classifier;
  Layer& out_new = (l + 1 < out.hidden.size()) ? out.hidden[l + 1] : out.classifier;
  out_new.weights = Matrix(out_old.out_dim(), new_width);
  for (std::size_t k = 0; k < out_old.out_dim(); ++k) {
    const double* w_src = out_old.weights.row(k);
    double* w_dst = out_new.weights.row(k);
    for (std::size_t j = 0; j < new_width; ++j) {
      const std::size_t src = m.map[j];
      w_dst[j] = w_src[src] / double(m.repetition[src]);
    }
  }
  out.validate();
  return out;
}

Network deepen(const Network& net, std::size_t after_layer_index) {
  net.validate();
  if (after_layer_index < 1 || after_layer_index > net.hidden.size())
    throw ShapeError("deepen: layer index " + std::to_string(after_layer_index) +
                     " out of range [1," + std::to_string(net.hidden.size()) + "]");
  const std::size_t l = after_layer_index - 1;
  const std::size_t width = net.hidden[l].out_dim();
  Layer id;
  id.weights = Matrix::identity(width);
  id.bias.assign(width, 0.0);
  id.activation = net.hidden[l].activation;
  Network out = net;
  out.hidden.insert(out.hidden.begin() + long(l) + 1, std::move(id));
  out.validate();
  return out;
}

std::string TransformPlan::to_json_string() const {
  json arr = json::array();
  for (const auto& s : steps) {
    if (s.op == TransformStep::Op::Deepen)
      arr.push_back(json{{"op", "deepen"}, {"after", s.index}});
    else
      arr.push_back(json{{"op", "widen"}, {"layer", s.index}, {"width", s.width}});
  }
  return json{{"steps", arr}}.dump();
}

TransformPlan TransformPlan::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("plan parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  TransformPlan plan;
  try {
    for (const auto& sj : j.at("steps")) {
      const std::string op = sj.at("op").get<std::string>();
      TransformStep step;
      if (op == "deepen") {
        step.op = TransformStep::Op::Deepen;
        step.index = sj.at("after").get<std::size_t>();
      } else if (op == "widen") {
        step.op = TransformStep::Op::Widen;
        step.index = sj.at("layer").get<std::size_t>();
        step.width = sj.at("width").get<std::size_t>();
      } else {
        throw ValidationError("plan: unknown op '" + op + "'");
      }
      plan.steps.push_back(step);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
  return plan;
}

void TransformPlan::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << to_json_string() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

TransformPlan TransformPlan::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open plan file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

TransformPlan plan_transform(const std::vector<std::size_t>& teacher_hidden,
                             const std::vector<std::size_t>& student_hidden) {
  const std::size_t T = teacher_hidden.size();
  const std::size_t S = student_hidden.size();
  if (T == 0) throw PlanError("teacher has no hidden layers");
  if (S < T)
    throw PlanError("student has fewer hidden layers (" + std::to_string(S) + " < " +
                    std::to_string(T) + ")");

  // Order-preserving alignment of teacher layers onto student positions;
  // unmatched student positions become duplicates of the nearest aligned
  // layer to their left (a Deepen), then every position that still differs
  // in width gets a Widen. Minimizes the total step count via DP over
  // (teacher layers consumed, student positions consumed).
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  // cost[i][j], parent action: 0 = none, 1 = align, 2 = surplus
  std::vector<std::vector<std::size_t>> cost(T + 1, std::vector<std::size_t>(S + 1, kInf));
  std::vector<std::vector<unsigned char>> act(T + 1, std::vector<unsigned char>(S + 1, 0));
  cost[0][0] = 0;
  for (std::size_t j = 0; j < S; ++j) {
    for (std::size_t i = 0; i <= T; ++i) {
      if (cost[i][j] == kInf) continue;
      if (S - j < T - i) continue;  // not enough student slots left
      // Align teacher layer i+1 with student position j+1.
      if (i < T && student_hidden[j] >= teacher_hidden[i]) {
        const std::size_t c = cost[i][j] + (student_hidden[j] != teacher_hidden[i] ? 1 : 0);
        if (c < cost[i + 1][j + 1]) {
          cost[i + 1][j + 1] = c;
          act[i + 1][j + 1] = 1;
        }
      }
      // Student position j+1 is a duplicate of teacher layer i (needs i >= 1).
      if (i >= 1 && student_hidden[j] >= teacher_hidden[i - 1]) {
        const std::size_t c =
            cost[i][j] + 1 + (student_hidden[j] != teacher_hidden[i - 1] ? 1 : 0);
        if (c < cost[i][j + 1]) {
          cost[i][j + 1] = c;
          act[i][j + 1] = 2;
        }
      }
    }
  }

  if (cost[T][S] == kInf) {
    std::size_t first_blocked = S;
    for (std::size_t j = 1; j <= S; ++j) {
      bool reachable = false;
      for (std::size_t i = 0; i <= T && !reachable; ++i) reachable = cost[i][j] != kInf;
      if (!reachable) {
        first_blocked = j;
        break;
      }
    }
    throw PlanError("no feasible transform: student layer " + std::to_string(first_blocked) +
                    " (width " + std::to_string(student_hidden[first_blocked - 1]) +
                    ") cannot be reached by widening");
  }

  // Recover which student positions are surplus duplicates.
  std::vector<bool> surplus(S + 1, false);
  {
    std::size_t i = T, j = S;
    while (j > 0) {
      if (act[i][j] == 1) {
        --i;
        --j;
      } else {
        surplus[j] = true;
        --j;
      }
    }
  }

  TransformPlan plan;
  std::vector<std::size_t> widths;  // widths after all deepen steps, pre-widen
  widths.reserve(S);
  {
    std::size_t t = 0;
    for (std::size_t j = 1; j <= S; ++j) {
      if (surplus[j]) {
        plan.steps.push_back({TransformStep::Op::Deepen, j - 1, 0});
        widths.push_back(widths.back());
      } else {
        widths.push_back(teacher_hidden[t++]);
      }
    }
  }
  for (std::size_t j = 1; j <= S; ++j)
    if (widths[j - 1] != student_hidden[j - 1])
      plan.steps.push_back({TransformStep::Op::Widen, j, student_hidden[j - 1]});

  if (apply_plan_arch(plan, teacher_hidden) != student_hidden)
    throw PlanError("internal: generated plan does not reproduce the student arch");
  return plan;
}

std::vector<std::size_t> apply_plan_arch(const TransformPlan& plan,
                                         std::vector<std::size_t> hidden) {
  for (const auto& s : plan.steps) {
    if (s.op == TransformStep::Op::Deepen) {
      if (s.index < 1 || s.index > hidden.size())
        throw PlanError("plan deepen index out of range");
      hidden.insert(hidden.begin() + long(s.index), hidden[s.index - 1]);
    } else {
      if (s.index < 1 || s.index > hidden.size())
        throw PlanError("plan widen index out of range");
      if (s.width < hidden[s.index - 1]) throw PlanError("plan widen would narrow a layer");
      hidden[s.index - 1] = s.width;
    }
  }
  return hidden;
}

Network apply_plan(const Network& net, const TransformPlan& plan, double noise_eps,
                   std::uint64_t seed) {
  std::mt19937_64 master(seed);
  Network out = net;
  for (const auto& s : plan.steps) {
    if (s.op == TransformStep::Op::Deepen)
      out = deepen(out, s.index);
    else
      out = widen(out, s.index, s.width, noise_eps, master());
  }
  return out;
}

}  // namespace n2a
