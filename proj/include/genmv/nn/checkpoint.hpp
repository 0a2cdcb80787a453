#pragma once

#include <string>

#include <json.hpp>

#include "genmv/common.hpp"

namespace genmv::nn {

inline constexpr const char* kCheckpointMagic = "GENMV-CKPT-1";

// Named parameter arrays with shape headers, serialized as JSON behind a
// versioned magic string. Also carries a free-form "meta" block so models can
// echo their configuration.
class Checkpoint {
 public:
  Checkpoint();

  void put(const std::string& name, const Mat& m);
  void put(const std::string& name, const Vec& v);
  bool has(const std::string& name) const;
  Mat get_mat(const std::string& name) const;
  Vec get_vec(const std::string& name) const;

  nlohmann::json& meta() { return doc_["meta"]; }
  const nlohmann::json& meta() const { return doc_.at("meta"); }

  void save(const std::string& path) const;
  std::string dump() const;
  static Checkpoint load(const std::string& path);
  static Checkpoint parse(const std::string& text);

 private:
  nlohmann::json doc_;
};

}  // namespace genmv::nn
