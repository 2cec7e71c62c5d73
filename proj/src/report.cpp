#include <sstream>

#include <json.hpp>

#include "saekit/evalkit.hpp"

namespace saekit::evalkit {

namespace {

using nlohmann::ordered_json;

ordered_json hist_json(const Histogram& h) {
  return ordered_json{{"edges", h.edges}, {"counts", h.counts}};
}

}  // namespace

std::string EvalReport::to_json() const {
  ordered_json j;
  j["format"] = "saekit-eval-report";
  j["version"] = 1;
  j["model_digest"] = model_digest;
  j["data_digest"] = data_digest;
  ordered_json sweep = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json row{{"mode", to_string(e.mode)}, {"k", e.k},         {"l0", e.l0},
                     {"fvu", e.fvu},              {"explained_variance", 1.0 - e.fvu},
                     {"live", e.live},            {"almost_dead", e.almost_dead}};
    if (e.theta) row["theta"] = *e.theta;
    sweep.push_back(std::move(row));
  }
  j["sweep"] = std::move(sweep);
  if (!cosine_profile.empty()) j["cosine_profile"] = cosine_profile;
  if (distributions) {
    j["frequency_histogram"] = hist_json(distributions->frequency_hist);
    j["mean_sq_activation_histogram"] = hist_json(distributions->mean_sq_hist);
  }
  if (comparison) {
    ordered_json c{{"k", comparison->k},
                   {"mode_a", to_string(comparison->mode_a)},
                   {"mode_b", to_string(comparison->mode_b)},
                   {"fvu_a", comparison->fvu_a},
                   {"fvu_b", comparison->fvu_b},
                   {"l0_a", comparison->l0_a},
                   {"l0_b", comparison->l0_b},
                   {"difference", comparison->difference()}};
    if (comparison->theta) c["theta"] = *comparison->theta;
    j["comparison"] = std::move(c);
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(9);
  os << "mode,k,l0,fvu\n";
  for (const auto& e : entries) os << to_string(e.mode) << ',' << e.k << ',' << e.l0 << ',' << e.fvu << '\n';
  return os.str();
}

}  // namespace saekit::evalkit
