#include "nphisd/model_factory.hpp"

#include <stdexcept>

#include "nphisd/gross_pitaevskii.hpp"
#include "nphisd/lennard_jones.hpp"
#include "nphisd/lifshitz_petrich.hpp"
#include "nphisd/synthetic.hpp"

namespace nphisd {

void check_known_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                      const std::string& where) {
  if (obj.is_null()) return;
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
  }
}

std::unique_ptr<EnergyModel> make_model(const std::string& name, const nlohmann::json& p) {
  if (name == "lj7" || name == "lennard_jones") {
    check_known_keys(p, {"atoms"}, "model.params");
    return std::make_unique<LennardJonesCluster>(p.value("atoms", 7));
  }
  if (name == "lifshitz_petrich" || name == "lp") {
    check_known_keys(p, {"n", "eps", "alpha", "q_sq", "length"}, "model.params");
    return std::make_unique<LifshitzPetrichModel>(p.value("n", 128), p.value("eps", 0.03),
                                                  p.value("alpha", 0.1), p.value("q_sq", 2.0),
                                                  p.value("length", 0.0));
  }
  if (name == "gross_pitaevskii" || name == "gp") {
    check_known_keys(p, {"n", "omega", "eta", "length", "lattice_depth"}, "model.params");
    return std::make_unique<GrossPitaevskiiModel>(p.value("n", 64), p.value("omega", 1.0),
                                                  p.value("eta", 300.0), p.value("length", 0.0),
                                                  p.value("lattice_depth", 2.0));
  }
  if (name == "double_well") {
    check_known_keys(p, {"dim", "transverse"}, "model.params");
    return std::make_unique<DoubleWellModel>(p.value("dim", 2), p.value("transverse", 1.0));
  }
  if (name == "quadratic") {
    check_known_keys(p, {"diag"}, "model.params");
    if (!p.contains("diag") || !p["diag"].is_array() || p["diag"].empty()) {
      throw std::invalid_argument("model.params: quadratic requires a non-empty 'diag' array");
    }
    const auto d = p["diag"].get<std::vector<double>>();
    Matrix A = Matrix::Zero(d.size(), d.size());
    for (size_t i = 0; i < d.size(); ++i) A(i, i) = d[i];
    return std::make_unique<QuadraticModel>(A);
  }
  if (name == "rotated_quadratic") {
    check_known_keys(p, {"diag", "theta", "axis_a", "axis_b"}, "model.params");
    if (!p.contains("diag") || !p["diag"].is_array() || p["diag"].empty()) {
      throw std::invalid_argument("model.params: rotated_quadratic requires a 'diag' array");
    }
    return std::make_unique<QuadraticModel>(
        rotated_quadratic(p["diag"].get<std::vector<double>>(), p.value("theta", 0.0),
                          p.value("axis_a", 0), p.value("axis_b", 1)));
  }
  if (name == "flat_tail") {
    check_known_keys(p, {"stiffness", "flat"}, "model.params");
    if (!p.contains("stiffness") || !p["stiffness"].is_array() || p["stiffness"].empty()) {
      throw std::invalid_argument("model.params: flat_tail requires a 'stiffness' array");
    }
    return std::make_unique<FlatTailModel>(p["stiffness"].get<std::vector<double>>(),
                                           p.value("flat", 1));
  }
  if (name == "rotating_valley") {
    check_known_keys(p, {"valley", "twist", "tilt", "tail"}, "model.params");
    return std::make_unique<RotatingValleyModel>(
        p.value("valley", 1.0), p.value("twist", 1.0), p.value("tilt", 0.1),
        p.value("tail", std::vector<double>{2.0}));
  }
  if (name == "ring_minimum") {
    check_known_keys(p, {"dim"}, "model.params");
    return std::make_unique<RingMinimumModel>(p.value("dim", 4));
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

} // namespace nphisd
