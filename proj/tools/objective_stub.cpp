// Test double for the external-objective protocol.
//
//   objective_stub MODE [GOOD]
//
// MODE: ackley2 | sum | nan | exit | hang | garbage | reject
// With GOOD > 0 the faulty modes answer the first GOOD requests with the
// Ackley value before misbehaving.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "epsts/benchmarks.hpp"
#include "epsts/external_objective.hpp"

namespace {

void reply(const std::string& line) {
  std::cout << line << '\n' << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ackley2";
  long good = argc > 2 ? std::atol(argv[2]) : 0;

  std::string line;
  bool greeted = false;
  while (std::getline(std::cin, line)) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      reply(R"({"error":"bad request"})");
      continue;
    }
    if (!greeted) {
      greeted = true;
      reply(mode == "reject" ? R"({"ok":false})" : R"({"ok":true})");
      continue;
    }
    const auto xs = msg.at("x").get<std::vector<double>>();
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));

    const bool misbehave = mode != "ackley2" && mode != "sum" && good-- <= 0;
    if (!misbehave) {
      double y = 0.0;
      if (mode == "sum") {
        y = x.sum();
      } else {
        try {
          y = epsts::ackley2(x);
        } catch (const std::exception& e) {
          reply(nlohmann::json{{"error", e.what()}}.dump());
          continue;
        }
      }
      reply("{\"y\":" + epsts::format_double(y) + "}");
    } else if (mode == "nan") {
      reply(R"({"y":nan})");
    } else if (mode == "exit") {
      return 3;
    } else if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    } else {
      reply("this is not json");
    }
  }
  return 0;
}
