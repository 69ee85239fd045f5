#pragma once

#include <nlohmann/json.hpp>

#include "lanca/matrix.hpp"

namespace lanca {

inline void to_json(nlohmann::json& j, const Matrix& m) {
  j = nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline void from_json(const nlohmann::json& j, Matrix& m) {
  m = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
             j.at("data").get<std::vector<double>>());
}

}  // namespace lanca
