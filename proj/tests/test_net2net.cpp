#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "n2a/net2net.hpp"
#include "oracles.hpp"

using namespace n2a;

TEST_CASE("random_mapping with no new nodes is the identity") {
  const RandomMapping m = random_mapping(3, 3, 7);
  CHECK(m.map == std::vector<std::size_t>{0, 1, 2});
  CHECK(m.repetition == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("random_mapping keeps the identity prefix and counts repetitions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RandomMapping m = random_mapping(2, 4, seed);
    CHECK(m.map[0] == 0);
    CHECK(m.map[1] == 1);
    CHECK(m.map[2] < 2);
    CHECK(m.map[3] < 2);
    std::size_t total = 0;
    for (std::size_t o = 0; o < 2; ++o) {
      std::size_t count = 0;
      for (std::size_t j = 0; j < 4; ++j)
        if (m.map[j] == o) ++count;
      CHECK(m.repetition[o] == count);
      CHECK(count >= 1);
      total += count;
    }
    CHECK(total == 4);
  }
}

TEST_CASE("random_mapping draws new nodes roughly uniformly") {
  const RandomMapping m = random_mapping(2, 1002, 99);
  std::size_t node0 = 0;
  for (std::size_t j = 2; j < 1002; ++j)
    if (m.map[j] == 0) ++node0;
  const double freq = double(node0) / 1000.0;
  CHECK(freq >= 0.45);
  CHECK(freq <= 0.55);
}

TEST_CASE("random_mapping rejects narrowing") {
  CHECK_THROWS_AS(random_mapping(4, 3, 0), PlanError);
}

TEST_CASE("widen reproduces the two-node worked example") {
  // hidden node h2 with incoming (0.3, -0.5) and outgoing 0.8; adding one
  // replica must copy the incoming weights and split the outgoing weight.
  Network net;
  net.input_dim = 2;
  Layer l;
  l.weights = Matrix{{0.7, 0.2}, {0.3, -0.5}};
  l.bias = {0.0, 0.0};
  l.activation = Activation::Sigmoid;
  net.hidden.push_back(l);
  net.classifier.weights = Matrix{{0.6, 0.8}};
  net.classifier.bias = {0.0};
  net.classifier.activation = Activation::Identity;

  // find a seed whose new node replicates node 2 (index 1)
  std::uint64_t seed = 0;
  while (random_mapping(2, 3, seed).map[2] != 1) ++seed;
  const Network wide = widen(net, 1, 3, 0.0, seed);

  CHECK(wide.hidden[0].weights(2, 0) == 0.3);
  CHECK(wide.hidden[0].weights(2, 1) == -0.5);
  CHECK(wide.classifier.weights(0, 1) == 0.4);
  CHECK(wide.classifier.weights(0, 2) == 0.4);
  CHECK(wide.classifier.weights(0, 0) == 0.6);  // unreplicated node untouched
}

TEST_CASE("widen preserves the function on a 70-30-20 teacher") {
  const Network teacher = init_random({70, 30, 20, 4}, Activation::Sigmoid, 11);
  const Network student = widen(teacher, 1, 50, 0.0, 5);
  CHECK(student.hidden_widths() == std::vector<std::size_t>{50, 20});
  const Matrix X = oracle::random_matrix(100, 70, 9);
  const double dev = oracle::max_abs_diff(forward(teacher, X).probabilities,
                                          forward(student, X).probabilities);
  CHECK(dev <= 1e-10);
}

TEST_CASE("widen to the current width is the identity") {
  const Network net = init_random({6, 4, 3}, Activation::Sigmoid, 3);
  CHECK(widen(net, 1, 4, 0.0, 1) == net);
}

TEST_CASE("widen rejects narrowing and bad layer indices") {
  const Network net = init_random({6, 4, 3}, Activation::Sigmoid, 3);
  CHECK_THROWS_AS(widen(net, 1, 3, 0.0, 1), PlanError);
  CHECK_THROWS_AS(widen(net, 0, 8, 0.0, 1), ShapeError);
  CHECK_THROWS_AS(widen(net, 2, 8, 0.0, 1), ShapeError);
}

TEST_CASE("function preservation holds for any single widen step") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::size_t> depth_dist(1, 4);
    const std::size_t depth = depth_dist(gen);
    std::vector<std::size_t> arch{std::uniform_int_distribution<std::size_t>(4, 20)(gen)};
    for (std::size_t l = 0; l < depth; ++l)
      arch.push_back(std::uniform_int_distribution<std::size_t>(3, 16)(gen));
    arch.push_back(std::uniform_int_distribution<std::size_t>(2, 4)(gen));
    const Activation act = trial % 2 == 0 ? Activation::Sigmoid : Activation::Relu;
    const Network teacher = init_random(arch, act, gen());

    const std::size_t layer = std::uniform_int_distribution<std::size_t>(1, depth)(gen);
    const std::size_t extra = std::uniform_int_distribution<std::size_t>(1, 10)(gen);
    const Network student =
        widen(teacher, layer, teacher.hidden[layer - 1].out_dim() + extra, 0.0, gen());

    const Matrix X = oracle::random_matrix(50, arch[0], gen());
    CHECK(oracle::max_abs_diff(forward(teacher, X).probabilities,
                               forward(student, X).probabilities) <= 1e-10);
  }
}

TEST_CASE("composed widen steps preserve the function") {
  const Network teacher = init_random({12, 10, 8, 6, 3}, Activation::Sigmoid, 55);
  Network student = widen(teacher, 1, 14, 0.0, 1);
  student = widen(student, 2, 13, 0.0, 2);
  student = widen(student, 3, 9, 0.0, 3);
  const Matrix X = oracle::random_matrix(100, 12, 4);
  CHECK(oracle::max_abs_diff(forward(teacher, X).probabilities,
                             forward(student, X).probabilities) <= 1e-10);
}

TEST_CASE("outgoing weight mass is conserved per original node") {
  const Network teacher = init_random({8, 6, 5, 3}, Activation::Sigmoid, 77);
  const std::size_t layer = 1;
  const std::size_t new_width = 11;
  const std::uint64_t seed = 13;
  const Network student = widen(teacher, layer, new_width, 0.0, seed);
  const RandomMapping m = random_mapping(6, new_width, seed);

  const Matrix& old_out = teacher.hidden[layer].weights;
  const Matrix& new_out = student.hidden[layer].weights;
  for (std::size_t k = 0; k < old_out.rows(); ++k)
    for (std::size_t o = 0; o < 6; ++o) {
      double mass = 0.0;
      for (std::size_t j = 0; j < new_width; ++j)
        if (m.map[j] == o) mass += new_out(k, j);
      CHECK(mass == doctest::Approx(old_out(k, o)).epsilon(1e-12));
    }
}

TEST_CASE("widen with noise still copies structure but breaks ties") {
  const Network teacher = init_random({6, 4, 3}, Activation::Sigmoid, 21);
  const Network student = widen(teacher, 1, 8, 1e-3, 9);
  const RandomMapping m = random_mapping(4, 8, 9);
  for (std::size_t j = 4; j < 8; ++j) {
    bool differs = false;
    for (std::size_t i = 0; i < 6; ++i) {
      const double base = teacher.hidden[0].weights(m.map[j], i);
      const double got = student.hidden[0].weights(j, i);
      CHECK(std::abs(got - base) <= 1e-3);
      if (got != base) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("deepen inserts an identity layer and preserves relu nets") {
  const Network net = init_random({8, 6, 4, 3}, Activation::Relu, 15);
  const Network deeper = deepen(net, 1);
  CHECK(deeper.hidden_widths() == std::vector<std::size_t>{6, 6, 4});
  CHECK(deeper.hidden[1].weights == Matrix::identity(6));

  const Matrix X = oracle::random_matrix(60, 8, 2);
  CHECK(oracle::max_abs_diff(forward(net, X).probabilities,
                             forward(deeper, X).probabilities) <= 1e-12);
}

TEST_CASE("deepen on sigmoid nets grows the arch but changes outputs") {
  const Network net = init_random({8, 6, 4, 3}, Activation::Sigmoid, 15);
  const Network deeper = deepen(net, 2);
  CHECK(deeper.hidden_widths() == std::vector<std::size_t>{6, 4, 4});
  const Matrix X = oracle::random_matrix(20, 8, 6);
  CHECK(oracle::max_abs_diff(forward(net, X).probabilities,
                             forward(deeper, X).probabilities) > 1e-6);
}

TEST_CASE("deepen adds exactly one activation matrix of the copied width") {
  const Network net = init_random({8, 6, 4, 3}, Activation::Relu, 19);
  const Network deeper = deepen(net, 2);
  const Matrix X = oracle::random_matrix(5, 8, 3);
  const ForwardTrace before = forward(net, X);
  const ForwardTrace after = forward(deeper, X);
  CHECK(after.activations.size() == before.activations.size() + 1);
  CHECK(after.activations[3].cols() == 4);
  CHECK_THROWS_AS(deepen(net, 0), ShapeError);
  CHECK_THROWS_AS(deepen(net, 3), ShapeError);
}

TEST_CASE("plan for 70-30-20 -> 70-50-30-20 is deepen(2) then widen(2,50)") {
  const TransformPlan plan = plan_transform({70, 30, 20}, {70, 50, 30, 20});
  REQUIRE(plan.steps.size() == 2);
  CHECK(plan.steps[0] == TransformStep{TransformStep::Op::Deepen, 2, 0});
  CHECK(plan.steps[1] == TransformStep{TransformStep::Op::Widen, 2, 50});
  CHECK(apply_plan_arch(plan, {70, 30, 20}) == std::vector<std::size_t>{70, 50, 30, 20});
}

TEST_CASE("identical archs need an empty plan") {
  CHECK(plan_transform({70, 30, 20}, {70, 30, 20}).steps.empty());
}

TEST_CASE("a shallower student is rejected") {
  CHECK_THROWS_AS(plan_transform({70, 30, 20}, {70, 20}), PlanError);
}

TEST_CASE("an unalignably narrow student is rejected with a position") {
  try {
    plan_transform({70, 30}, {50, 30});
    FAIL("expected PlanError");
  } catch (const PlanError& e) {
    CHECK(std::string(e.what()).find("student layer") != std::string::npos);
  }
}

TEST_CASE("plan soundness on 1000 random feasible arch pairs") {
  std::mt19937_64 gen(4242);
  std::uniform_int_distribution<std::size_t> depth_dist(1, 5);
  std::uniform_int_distribution<std::size_t> width_dist(2, 40);
  std::uniform_int_distribution<std::size_t> grow_dist(0, 12);
  int built = 0;
  while (built < 1000) {
    const std::size_t depth = depth_dist(gen);
    std::vector<std::size_t> teacher(depth);
    for (auto& w : teacher) w = width_dist(gen);

    // grow a feasible student: keep every teacher layer (possibly wider) and
    // sprinkle duplicates after their source layer
    std::vector<std::size_t> student;
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t base = teacher[l];
      student.push_back(base + grow_dist(gen));
      while (gen() % 3 == 0) student.push_back(base + grow_dist(gen));
    }
    const TransformPlan plan = plan_transform(teacher, student);
    CHECK(apply_plan_arch(plan, teacher) == student);
    ++built;
  }
}

TEST_CASE("plans applied to networks preserve function for relu teachers") {
  const Network teacher = init_random({16, 12, 8, 4}, Activation::Relu, 3);
  const TransformPlan plan = plan_transform({12, 8}, {14, 12, 8});
  const Network student = apply_plan(teacher, plan, 0.0, 77);
  CHECK(student.hidden_widths() == std::vector<std::size_t>{14, 12, 8});
  const Matrix X = oracle::random_matrix(50, 16, 8);
  CHECK(oracle::max_abs_diff(forward(teacher, X).probabilities,
                             forward(student, X).probabilities) <= 1e-10);
}

TEST_CASE("plan JSON round trip") {
  const TransformPlan plan = plan_transform({70, 30, 20}, {70, 50, 30, 20});
  const std::string text = plan.to_json_string();
  CHECK(text.find("\"op\":\"deepen\"") != std::string::npos);
  CHECK(text.find("\"after\":2") != std::string::npos);
  CHECK(text.find("\"op\":\"widen\"") != std::string::npos);
  const TransformPlan back = TransformPlan::from_json_string(text);
  CHECK(back == plan);
  CHECK_THROWS_AS(TransformPlan::from_json_string("{\"steps\":[{"), ParseError);
}
