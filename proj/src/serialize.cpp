#include "wrl/serialize.hpp"

#include <fstream>

namespace wrl {

namespace {

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const Json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

Json to_json(const DiscreteMeasure& measure) {
  Json atoms = Json::array();
  for (const Point& p : measure.atoms()) atoms.push_back(vector_to_json(p));
  return Json{{"atoms", atoms}, {"weights", vector_to_json(measure.weights())}};
}

DiscreteMeasure measure_from_json(const Json& j) {
  if (!j.contains("atoms") || !j.contains("weights"))
    throw std::invalid_argument("measure record needs 'atoms' and 'weights'");
  std::vector<Point> atoms;
  for (const Json& a : j.at("atoms")) atoms.push_back(vector_from_json(a));
  return DiscreteMeasure(std::move(atoms), vector_from_json(j.at("weights")));
}

DiscreteMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file: " + path);
  Json j;
  in >> j;
  return measure_from_json(j);
}

void save_measure(const DiscreteMeasure& measure, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write measure file: " + path);
  out << to_json(measure).dump(2) << "\n";
}

Json to_json(const Trajectory& tau) {
  Json states = Json::array(), actions = Json::array(), rewards = Json::array();
  for (const TimeStep& step : tau.steps) {
    states.push_back(vector_to_json(step.state));
    actions.push_back(step.action.id >= 0 ? Json(step.action.id)
                                          : vector_to_json(step.action.vec));
    rewards.push_back(step.reward);
  }
  return Json{{"states", states},
              {"actions", actions},
              {"rewards", rewards},
              {"final_state", vector_to_json(tau.final_state)},
              {"terminated", tau.terminated}};
}

Json to_json(const PolicyParams& params) {
  Json j;
  j["theta"] = vector_to_json(params.theta);
  if (params.family == PolicyFamily::RbfSoftmax) {
    j["family"] = "rbf_softmax";
    Json centers = Json::array();
    for (const Point& c : params.rbf.centers) centers.push_back(vector_to_json(c));
    j["shape"] = Json{{"centers", centers},
                      {"bandwidth", params.rbf.bandwidth},
                      {"actions", params.rbf.actions}};
  } else {
    j["family"] = "mlp_gaussian";
    j["shape"] = Json{{"input", params.mlp.input},
                      {"hidden", params.mlp.hidden},
                      {"output", params.mlp.output},
                      {"stddev", params.mlp.stddev}};
  }
  return j;
}

PolicyParams params_from_json(const Json& j) {
  const std::string family = j.at("family").get<std::string>();
  const Json& shape = j.at("shape");
  PolicyParams params;
  if (family == "rbf_softmax") {
    RbfSoftmaxShape s;
    for (const Json& c : shape.at("centers")) s.centers.push_back(vector_from_json(c));
    s.bandwidth = shape.at("bandwidth").get<double>();
    s.actions = shape.at("actions").get<int>();
    params = PolicyParams::rbf_softmax(std::move(s));
  } else if (family == "mlp_gaussian") {
    MlpGaussianShape s;
    s.input = shape.at("input").get<int>();
    s.hidden = shape.at("hidden").get<std::vector<int>>();
    s.output = shape.at("output").get<int>();
    s.stddev = shape.at("stddev").get<double>();
    params = PolicyParams::mlp_gaussian(std::move(s));
  } else {
    throw std::invalid_argument("unknown policy family: " + family);
  }
  const Vector theta = vector_from_json(j.at("theta"));
  if (theta.size() != params.theta.size())
    throw std::invalid_argument("theta length does not match the declared shape");
  params.theta = theta;
  return params;
}

}  // namespace wrl
