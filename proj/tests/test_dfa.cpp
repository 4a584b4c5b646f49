#include <random>
#include <vector>

#include "doctest.h"
#include "dynashield/dfa.hpp"
#include "dynashield/ltl.hpp"
#include "dynashield/monitor.hpp"

using namespace dynashield;

namespace {

Dfa universal_dfa(std::uint32_t n_letters) {
  Dfa d;
  d.num_states = 1;
  d.initial = 0;
  for (std::uint32_t i = 0; i < n_letters; ++i) d.letters.push_back("l" + std::to_string(i));
  d.delta.assign(n_letters, 0);
  d.accepting = {1};
  return d;
}

Dfa random_dfa(std::mt19937& rng, std::uint32_t max_states, std::uint32_t n_letters) {
  std::uniform_int_distribution<std::uint32_t> nd(1, max_states);
  const std::uint32_t n = nd(rng);
  Dfa d;
  d.num_states = n;
  d.initial = std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng);
  for (std::uint32_t i = 0; i < n_letters; ++i) d.letters.push_back("l" + std::to_string(i));
  d.delta.resize(static_cast<std::size_t>(n) * n_letters);
  for (auto& t : d.delta) t = std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng);
  d.accepting.resize(n);
  for (auto& a : d.accepting) a = std::uniform_int_distribution<int>(0, 1)(rng);
  return d;
}

// All words of length <= max_len, enumerated depth-first.
template <typename Fn>
void for_all_words(std::uint32_t n_letters, std::size_t max_len, Fn&& fn) {
  std::vector<std::vector<LetterId>> stack{{}};
  while (!stack.empty()) {
    std::vector<LetterId> w = std::move(stack.back());
    stack.pop_back();
    fn(w);
    if (w.size() >= max_len) continue;
    for (LetterId l = 0; l < n_letters; ++l) {
      auto next = w;
      next.push_back(l);
      stack.push_back(std::move(next));
    }
  }
}

}  // namespace

TEST_CASE("run: empty word yields just the initial state") {
  const Dfa d = universal_dfa(3);
  const auto states = run(d, {});
  REQUIRE(states.size() == 1);
  CHECK(states[0] == d.initial);
}

TEST_CASE("run: monitor trace safe,safe,trap") {
  const PropositionAlphabet sigma({"collision"});
  const Dfa m = to_monitor_dfa(parse_ltl("G !collision"), sigma);
  const std::vector<LetterId> word{0, 1};  // no-collision, collision
  const auto states = run(m, word);
  REQUIRE(states.size() == 3);
  CHECK(states[0] == m.initial);
  CHECK(states[1] == m.initial);
  CHECK(states[2] != m.initial);
  CHECK_FALSE(m.is_accepting(states[2]));
}

TEST_CASE("run: universal DFA stays constant; unknown letters rejected") {
  const Dfa d = universal_dfa(2);
  const std::vector<LetterId> word{0, 1, 1, 0};
  for (StateId s : run(d, word)) CHECK(s == 0);
  const std::vector<LetterId> bad{2};
  CHECK_THROWS_AS(run(d, bad), Error);
}

TEST_CASE("product: universal DFA is an identity element") {
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    const Dfa d = random_dfa(rng, 6, 2);
    const Dfa u = universal_dfa(2);
    const Dfa p = product(u, d, identity_align(u, d));
    for_all_words(2, 5, [&](const std::vector<LetterId>& w) {
      CHECK(accepts(p, w) == accepts(d, w));
    });
  }
}

TEST_CASE("product: language is the intersection of the factors") {
  std::mt19937 rng(11);
  for (int i = 0; i < 30; ++i) {
    const Dfa a = random_dfa(rng, 8, 2);
    const Dfa b = random_dfa(rng, 8, 2);
    const Dfa p = product(a, b, identity_align(a, b));
    for_all_words(2, 5, [&](const std::vector<LetterId>& w) {
      CHECK(accepts(p, w) == (accepts(a, w) && accepts(b, w)));
    });
  }
}

TEST_CASE("product: monitor times small abstraction stays within the size bound") {
  const PropositionAlphabet sigma({"collision"});
  const Dfa m = to_monitor_dfa(parse_ltl("G !collision"), sigma);
  std::mt19937 rng(3);
  Dfa env = random_dfa(rng, 3, 2);
  std::fill(env.accepting.begin(), env.accepting.end(), 1);
  const Dfa p = product(m, env, identity_align(m, env));
  CHECK(p.num_states <= 6);
  for_all_words(2, 5, [&](const std::vector<LetterId>& w) {
    CHECK(accepts(p, w) == (accepts(m, w) && accepts(env, w)));
  });
}

TEST_CASE("product: self-product preserves the language") {
  std::mt19937 rng(23);
  const Dfa d = random_dfa(rng, 7, 2);
  const Dfa p = product(d, d, identity_align(d, d));
  for_all_words(2, 5, [&](const std::vector<LetterId>& w) {
    CHECK(accepts(p, w) == accepts(d, w));
  });
}

TEST_CASE("product: misaligned alphabets are rejected") {
  const Dfa a = universal_dfa(2);
  const Dfa b = universal_dfa(3);
  CHECK_THROWS_AS(identity_align(a, b), Error);
  LetterAlign bad;
  bad.a_letter = {0, 5};
  bad.b_letter = {0, 1};
  CHECK_THROWS_AS(product(a, b, bad), Error);
}

TEST_CASE("minimize: language preserved and result is minimal") {
  std::mt19937 rng(42);
  for (int i = 0; i < 40; ++i) {
    const Dfa d = random_dfa(rng, 9, 2);
    const Dfa m = minimize(d);
    CHECK(m.num_states <= d.num_states);
    for_all_words(2, 6, [&](const std::vector<LetterId>& w) {
      CHECK(accepts(m, w) == accepts(d, w));
    });
    // Minimality: all state pairs distinguishable by some word of length
    // <= number of states (checked via a second minimization round trip).
    CHECK(minimize(m).num_states == m.num_states);
  }
}

TEST_CASE("to_dot: smoke") {
  const Dfa d = universal_dfa(2);
  const std::string dot = to_dot(d, "u");
  CHECK(dot.find("digraph u") != std::string::npos);
  CHECK(dot.find("doublecircle") != std::string::npos);
}
