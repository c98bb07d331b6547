#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "json.hpp"

#include "aptdetect/pipeline.hpp"

namespace aptd {

// Model files: the 8-byte magic "APTDMODL", a little-endian u32 format
// version, a u64 payload length, then the payload as CBOR. The payload
// holds the model kind, fitted encoder, standardizer (mlp), model parameters
// and training history.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(std::ostream& out, const TrainedModel& model);
void save_model(const std::filesystem::path& path, const TrainedModel& model);

// Throws ModelIoError on a bad magic, a newer format version, truncation or
// a malformed payload.
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

nlohmann::json encoder_to_json(const Encoder& encoder);
Encoder encoder_from_json(const nlohmann::json& j);

}  // namespace aptd
