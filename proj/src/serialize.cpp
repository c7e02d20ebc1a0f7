#include "shapemle/serialize.hpp"

#include "json.hpp"

#include "shapemle/errors.hpp"

namespace shapemle {

namespace {

using json = nlohmann::ordered_json;

const char* setting_name(SettingKind kind) {
    switch (kind) {
        case SettingKind::LogConcave: return "1";
        case SettingKind::TailInflationGauss: return "2a";
        case SettingKind::TailInflationGamma: return "2b";
    }
    return "?";
}

json model_fields(const Model& model) {
    json j;
    j["setting"] = setting_name(model.setting().kind);
    j["alpha"] = model.setting().alpha;
    j["beta"] = model.setting().beta;
    j["knots"] = model.tau();
    std::vector<double> theta, slopes;
    if (model.m() == 0) {
        theta.push_back(model.coef()[0]);  // value at 0
    } else {
        for (std::size_t jx = 0; jx < model.m(); ++jx) theta.push_back(model.value_at(jx));
    }
    for (const Model::Piece& p : model.pieces()) slopes.push_back(p.slope);
    j["theta"] = theta;
    j["slopes"] = slopes;
    return j;
}

std::vector<double> number_array(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array())
        throw InvalidInput(std::string("model JSON: missing array field '") + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw InvalidInput(std::string("model JSON: non-numeric '") + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

std::string model_to_json(const Model& model) { return model_fields(model).dump(2) + "\n"; }

std::string to_json(const FitResult& result) {
    json j = model_fields(result.model);
    j["loglik"] = result.loglik;
    j["newton_steps"] = result.newton_steps;
    j["local_searches"] = result.local_searches;
    j["converged"] = result.converged;
    json cert;
    cert["integral_of_density"] = result.certificate.integral_of_density;
    cert["mean_match"] = result.certificate.mean_match;
    cert["knot_equalities"] = result.certificate.knot_equalities;
    cert["grid_max_h"] = result.certificate.grid_max_h;
    cert["passed"] = result.certificate.passed;
    j["certificate"] = cert;
    return j.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("model JSON: ") + e.what());
    }
    if (!j.contains("setting") || !j["setting"].is_string())
        throw InvalidInput("model JSON: missing string field 'setting'");
    std::string name = j["setting"].get<std::string>();
    double alpha = j.value("alpha", 1.0);
    double beta = j.value("beta", 1.0);

    Setting setting;
    if (name == "1")
        setting = Setting::log_concave();
    else if (name == "2a")
        setting = Setting::tail_gauss();
    else if (name == "2b")
        setting = Setting::tail_gamma(alpha, beta);
    else
        throw InvalidInput("model JSON: unknown setting '" + name + "'");

    std::vector<double> knots = number_array(j, "knots");
    std::vector<double> theta = number_array(j, "theta");
    std::vector<double> slopes = number_array(j, "slopes");
    std::size_t m = knots.size();

    auto need = [&](bool ok, const char* what) {
        if (!ok) throw InvalidInput(std::string("model JSON: ") + what);
    };

    Eigen::VectorXd coef;
    switch (setting.kind) {
        case SettingKind::LogConcave: {
            need(m >= 2 && theta.size() == m, "setting 1 needs >= 2 knots and matching theta");
            coef = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<long>(m));
            break;
        }
        case SettingKind::TailInflationGauss: {
            if (m == 0) {
                need(theta.size() == 1 && !slopes.empty(), "affine model needs theta[0] and a slope");
                coef.resize(2);
                coef << theta[0], slopes.front();
            } else {
                need(theta.size() == m && slopes.size() == m + 1,
                     "setting 2a needs m theta values and m+1 slopes");
                coef.resize(static_cast<long>(m) + 2);
                coef[0] = slopes.front();
                for (std::size_t k = 0; k < m; ++k) coef[static_cast<long>(k) + 1] = theta[k];
                coef[static_cast<long>(m) + 1] = slopes.back();
            }
            break;
        }
        case SettingKind::TailInflationGamma: {
            if (m == 0) {
                need(theta.size() == 1, "constant model needs theta[0]");
                coef.resize(1);
                coef << theta[0];
            } else {
                need(theta.size() == m && !slopes.empty(),
                     "setting 2b needs m theta values and the tail slope");
                coef.resize(static_cast<long>(m) + 1);
                for (std::size_t k = 0; k < m; ++k) coef[static_cast<long>(k)] = theta[k];
                coef[static_cast<long>(m)] = slopes.back();
            }
            break;
        }
    }
    return Model(setting, std::move(knots), std::move(coef));
}

}  // namespace shapemle
