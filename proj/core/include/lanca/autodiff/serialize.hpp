#pragma once

#include <span>

#include <nlohmann/json.hpp>

#include "lanca/autodiff/tensor.hpp"

namespace lanca::ad {

// [{"shape": [...], "values": [...]}, ...]
nlohmann::json tensors_to_json(std::span<const Tensor> tensors);
// Copies stored values into existing tensors; throws on count or shape mismatch.
void load_tensors(const nlohmann::json& j, std::span<Tensor> tensors);

}  // namespace lanca::ad
