#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurobit/neural/network.hpp"

namespace neurobit::nn {

nlohmann::json network_config_to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

// Versioned container shared by neural and baseline models: magic, version,
// kind tag + JSON header, then a float32 little-endian payload.
struct CheckpointBlob {
  std::string kind;  // "network" | "svm" | "mahalanobis"
  nlohmann::json header;
  std::vector<float> payload;
};

void save_checkpoint_blob(const std::string& path, const CheckpointBlob& blob);
CheckpointBlob load_checkpoint_blob(const std::string& path);

void save_network(const std::string& path, const Network<float>& net,
                  std::uint64_t seed, std::size_t epoch);
Network<float> load_network(const std::string& path);

}  // namespace neurobit::nn
