#include "lanca/autodiff/serialize.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lanca::ad {

nlohmann::json tensors_to_json(std::span<const Tensor> tensors) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tensors) {
    out.push_back({{"shape", t.shape()},
                   {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  return out;
}

void load_tensors(const nlohmann::json& j, std::span<Tensor> tensors) {
  if (!j.is_array() || j.size() != tensors.size()) {
    throw std::invalid_argument("load_tensors: expected " + std::to_string(tensors.size()) +
                                " tensors, found " + std::to_string(j.size()));
  }
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto shape = j[k].at("shape").get<Shape>();
    if (shape != tensors[k].shape()) {
      throw std::invalid_argument("load_tensors: tensor " + std::to_string(k) + " has shape " +
                                  shape_to_string(shape) + ", expected " +
                                  shape_to_string(tensors[k].shape()));
    }
    const auto values = j[k].at("values").get<std::vector<double>>();
    std::copy(values.begin(), values.end(), tensors[k].mutable_values().begin());
  }
}

}  // namespace lanca::ad
