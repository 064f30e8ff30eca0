#include <chrono>

#include "doctest.h"
#include "gradcheck.hpp"
#include "gradient_suite.hpp"

using namespace chunkloc;

TEST_CASE("every autodiff op matches central differences on 20 random instances") {
  const auto start = std::chrono::steady_clock::now();
  const auto results = testing::run_gradient_suite(20, 11);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& r : results) {
    CAPTURE(r.op);
    CAPTURE(r.max_rel_error);
    CHECK(r.coordinates > 0);
    CHECK(r.max_rel_error <= 1e-4);
    if (r.op.find("loss") == std::string::npos) {
      CHECK(r.instances >= 20);
    }
  }
  CHECK(seconds < 60.0);
}

TEST_CASE("the checker detects a wrong gradient") {
  auto x = ad::Tensor::parameter({1}, {0.7});
  // Graph node whose backward claims d/dx = 1 while the value is x^2.
  auto f = [&] {
    return ad::Tensor::make({}, {x[0] * x[0]}, {x}, [](ad::Node& self) {
      self.inputs[0]->grad_buffer()[0] += self.grad[0];
    });
  };
  std::vector<ad::Tensor> leaves{x};
  const auto rep = testing::gradient_check(leaves, f);
  CHECK(rep.max_rel_error > 0.1);
}
