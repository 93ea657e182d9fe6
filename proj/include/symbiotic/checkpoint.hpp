#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symbiotic/tensor.hpp"

namespace symbiotic {

// Named-tensor manifest: a JSON index header (length-prefixed) followed by
// the STNS records back to back. Entry order is preserved so identical
// state serializes to identical bytes.
class Checkpoint {
 public:
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  void add(const std::string& name, const Tensor& t);
  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;  // VersionError if absent
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace symbiotic
