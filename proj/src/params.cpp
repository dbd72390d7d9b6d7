#include "immfit/params.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace immfit {

using nlohmann::json;

std::string params_to_json_string(const ParamVector& theta, const ModelConfig& cfg) {
    theta.validate();
    cfg.validate();
    json j;
    j["sigma_v"] = theta.sigma_v;
    j["p_stay"] = theta.p_stay;
    j["sigma_r"] = theta.sigma_r;
    j["tau"] = cfg.tau;
    j["m"] = cfg.m;
    return j.dump(2) + "\n";
}

std::pair<ParamVector, ModelConfig> params_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed parameter JSON: ") + e.what());
    }
    ParamVector theta;
    ModelConfig cfg;
    try {
        theta.sigma_v = j.at("sigma_v").get<std::vector<double>>();
        theta.p_stay = j.at("p_stay").get<std::vector<double>>();
        theta.sigma_r = j.at("sigma_r").get<double>();
        cfg.tau = j.at("tau").get<double>();
        cfg.m = j.at("m").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("parameter JSON missing field: ") + e.what());
    }
    if (cfg.m != theta.modes()) {
        throw ConfigError("parameter JSON: m does not match sigma_v length");
    }
    theta.validate();
    cfg.validate();
    return {theta, cfg};
}

void save_params(const std::string& path, const ParamVector& theta, const ModelConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open parameter file for writing", path);
    out << params_to_json_string(theta, cfg);
    if (!out) throw IoError("failed writing parameter file", path);
}

std::pair<ParamVector, ModelConfig> load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parameter file", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return params_from_json_string(buf.str());
}

}  // namespace immfit
