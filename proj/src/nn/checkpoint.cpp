#include "genmv/nn/checkpoint.hpp"

#include <fstream>

namespace genmv::nn {

using nlohmann::json;

Checkpoint::Checkpoint() {
  doc_["magic"] = kCheckpointMagic;
  doc_["arrays"] = json::object();
  doc_["meta"] = json::object();
}

void Checkpoint::put(const std::string& name, const Mat& m) {
  json arr;
  arr["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(m.size());
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  arr["data"] = std::move(data);
  doc_["arrays"][name] = std::move(arr);
}

void Checkpoint::put(const std::string& name, const Vec& v) {
  json arr;
  arr["shape"] = {v.size()};
  arr["data"] = std::vector<double>(v.data(), v.data() + v.size());
  doc_["arrays"][name] = std::move(arr);
}

bool Checkpoint::has(const std::string& name) const {
  return doc_.at("arrays").contains(name);
}

Mat Checkpoint::get_mat(const std::string& name) const {
  if (!has(name)) throw ConfigError("checkpoint: missing array '" + name + "'");
  const json& arr = doc_.at("arrays").at(name);
  const auto& shape = arr.at("shape");
  if (shape.size() != 2) throw ConfigError("checkpoint: '" + name + "' is not a matrix");
  Mat m(shape[0].get<long>(), shape[1].get<long>());
  const auto& data = arr.at("data");
  if (static_cast<long>(data.size()) != m.size())
    throw ConfigError("checkpoint: '" + name + "' data/shape mismatch");
  long k = 0;
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Vec Checkpoint::get_vec(const std::string& name) const {
  if (!has(name)) throw ConfigError("checkpoint: missing array '" + name + "'");
  const json& arr = doc_.at("arrays").at(name);
  const auto& shape = arr.at("shape");
  if (shape.size() != 1) throw ConfigError("checkpoint: '" + name + "' is not a vector");
  const auto& data = arr.at("data");
  Vec v(shape[0].get<long>());
  if (static_cast<long>(data.size()) != v.size())
    throw ConfigError("checkpoint: '" + name + "' data/shape mismatch");
  for (long i = 0; i < v.size(); ++i) v[i] = data[i].get<double>();
  return v;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("checkpoint: cannot write '" + path + "'");
  out << dump();
}

std::string Checkpoint::dump() const { return doc_.dump(1); }

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint: cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

Checkpoint Checkpoint::parse(const std::string& text) {
  Checkpoint ck;
  json doc = json::parse(text, nullptr, true);
  if (!doc.contains("magic") || doc["magic"] != kCheckpointMagic)
    throw ConfigError(std::string("checkpoint: bad or missing magic, expected ") +
                      kCheckpointMagic);
  if (!doc.contains("arrays")) throw ConfigError("checkpoint: missing arrays block");
  if (!doc.contains("meta")) doc["meta"] = json::object();
  ck.doc_ = std::move(doc);
  return ck;
}

}  // namespace genmv::nn
