#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "termgnn/gnn/model.hpp"

namespace termgnn::gnn {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Container layout: 8-byte magic "TGNNMDL\0", u32 version, u64 header
/// length, JSON header, then every tensor as row-major little-endian f64 in
/// header order. All integers are little-endian.
std::string serialize(const Model& m);
Model deserialize(std::string_view bytes);

void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace termgnn::gnn
