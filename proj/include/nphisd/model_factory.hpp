#pragma once

#include <initializer_list>
#include <memory>
#include <string>

#include "json.hpp"
#include "nphisd/model.hpp"

namespace nphisd {

// Throws when `obj` carries a key outside `allowed`; config typos fail loudly
// instead of silently running with defaults.
void check_known_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                      const std::string& where);

std::unique_ptr<EnergyModel> make_model(const std::string& name,
                                        const nlohmann::json& params = nlohmann::json::object());

} // namespace nphisd
