#include "palsim/sensor.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/error.hpp"

namespace palsim {

void SensorModel::validate() const {
    if (!(pixel_size_um > 0.0)) throw config_error("sensor: pixel size must be positive");
    if (lambdas_nm.empty()) throw config_error("sensor: no wavelengths");
    if (response.size() != 3 * lambdas_nm.size())
        throw config_error("sensor: response must be 3 x n_lambda");
    for (int c = 0; c < 3; ++c) {
        double row = 0.0;
        for (int l = 0; l < n_lambda(); ++l) {
            double v = response_at(c, l);
            if (v < 0.0) throw config_error("sensor: response weights must be non-negative");
            row += v;
        }
        if (std::abs(row - 1.0) > 1e-6)
            throw config_error("sensor: response rows must sum to 1");
    }
    isp.validate();
}

std::vector<double> make_response(const ResponseModel& model,
                                  const std::vector<double>& lambdas_nm) {
    if (lambdas_nm.empty()) throw argument_error("make_response: no wavelengths");
    std::vector<double> r(3 * lambdas_nm.size(), 0.0);
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t l = 0; l < lambdas_nm.size(); ++l) {
            double z = (lambdas_nm[l] - model.centers_nm[static_cast<std::size_t>(c)]) /
                       model.sigmas_nm[static_cast<std::size_t>(c)];
            double v = std::exp(-0.5 * z * z);
            r[static_cast<std::size_t>(c) * lambdas_nm.size() + l] = v;
            sum += v;
        }
        for (std::size_t l = 0; l < lambdas_nm.size(); ++l)
            r[static_cast<std::size_t>(c) * lambdas_nm.size() + l] /= sum;
    }
    return r;
}

namespace {

IspParams isp_from_json(const nlohmann::json& j) {
    IspParams p;
    if (j.contains("wb_gains")) {
        auto v = j.at("wb_gains").get<std::vector<double>>();
        if (v.size() != 3) throw data_error("sensor: wb_gains must have 3 entries");
        std::copy(v.begin(), v.end(), p.wb_gains.begin());
    }
    if (j.contains("ccm")) {
        auto m = j.at("ccm").get<std::vector<std::vector<double>>>();
        if (m.size() != 3 || m[0].size() != 3 || m[1].size() != 3 || m[2].size() != 3)
            throw data_error("sensor: ccm must be 3x3");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                p.ccm[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    p.gamma = j.value("gamma", 2.2);
    p.bayer_pattern = bayer_from_string(j.value("bayer", "RGGB"));
    p.noise.read_sigma = j.value("read_sigma", 0.003);
    p.noise.shot_gain = j.value("shot_gain", 0.001);
    return p;
}

nlohmann::json isp_to_json(const IspParams& p) {
    nlohmann::json j;
    j["wb_gains"] = p.wb_gains;
    j["ccm"] = {{p.ccm[0][0], p.ccm[0][1], p.ccm[0][2]},
                {p.ccm[1][0], p.ccm[1][1], p.ccm[1][2]},
                {p.ccm[2][0], p.ccm[2][1], p.ccm[2][2]}};
    j["gamma"] = p.gamma;
    j["bayer"] = bayer_to_string(p.bayer_pattern);
    j["read_sigma"] = p.noise.read_sigma;
    j["shot_gain"] = p.noise.shot_gain;
    return j;
}

} // namespace

SensorModel load_sensor(const std::filesystem::path& path,
                        const std::vector<double>& lambdas_nm) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad sensor file " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "palsim-sensor")
        throw data_error("not a sensor file: " + path.string());
    SensorModel s;
    s.pixel_size_um = j.value("pixel_size_um", 1.34);
    if (j.contains("resolution")) {
        auto res = j.at("resolution").get<std::vector<int>>();
        if (res.size() != 2) throw data_error("sensor: resolution must be [H, W]");
        s.height = res[0];
        s.width = res[1];
    }
    s.lambdas_nm = lambdas_nm;
    const auto& resp = j.at("response");
    if (resp.contains("matrix")) {
        auto m = resp.at("matrix").get<std::vector<std::vector<double>>>();
        if (m.size() != 3) throw data_error("sensor: response matrix must have 3 rows");
        for (const auto& row : m)
            if (row.size() != lambdas_nm.size())
                throw data_error("sensor: response matrix does not match wavelength count");
        s.response.reserve(3 * lambdas_nm.size());
        for (const auto& row : m) s.response.insert(s.response.end(), row.begin(), row.end());
        // normalize rows
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (std::size_t l = 0; l < lambdas_nm.size(); ++l)
                sum += s.response[static_cast<std::size_t>(c) * lambdas_nm.size() + l];
            if (!(sum > 0.0)) throw data_error("sensor: empty response row");
            for (std::size_t l = 0; l < lambdas_nm.size(); ++l)
                s.response[static_cast<std::size_t>(c) * lambdas_nm.size() + l] /= sum;
        }
    } else {
        ResponseModel model;
        if (resp.contains("centers_nm")) {
            auto v = resp.at("centers_nm").get<std::vector<double>>();
            if (v.size() != 3) throw data_error("sensor: centers_nm must have 3 entries");
            std::copy(v.begin(), v.end(), model.centers_nm.begin());
        }
        if (resp.contains("sigmas_nm")) {
            auto v = resp.at("sigmas_nm").get<std::vector<double>>();
            if (v.size() != 3) throw data_error("sensor: sigmas_nm must have 3 entries");
            std::copy(v.begin(), v.end(), model.sigmas_nm.begin());
        }
        s.response = make_response(model, lambdas_nm);
    }
    if (j.contains("isp")) s.isp = isp_from_json(j.at("isp"));
    try {
        s.validate();
    } catch (const config_error& e) {
        throw data_error("invalid sensor " + path.string() + ": " + e.what());
    }
    return s;
}

void save_sensor(const std::filesystem::path& path, const SensorModel& sensor,
                 const ResponseModel* model) {
    nlohmann::json j;
    j["format"] = "palsim-sensor";
    j["pixel_size_um"] = sensor.pixel_size_um;
    j["resolution"] = {sensor.height, sensor.width};
    if (model) {
        j["response"] = {{"centers_nm", model->centers_nm}, {"sigmas_nm", model->sigmas_nm}};
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (int c = 0; c < 3; ++c) {
            nlohmann::json row = nlohmann::json::array();
            for (int l = 0; l < sensor.n_lambda(); ++l) row.push_back(sensor.response_at(c, l));
            rows.push_back(row);
        }
        j["response"] = {{"matrix", rows}};
    }
    j["isp"] = isp_to_json(sensor.isp);
    write_text_atomic(path, j.dump(1) + "\n");
}

SensorModel sensor_preset_small_pitch(const std::vector<double>& lambdas_nm) {
    SensorModel s;
    s.pixel_size_um = 1.34;
    s.height = 3152;
    s.width = 3152;
    s.lambdas_nm = lambdas_nm;
    s.response = make_response(ResponseModel{}, lambdas_nm);
    s.isp.gamma = 2.2;
    return s;
}

SensorModel sensor_preset_large_pitch(const std::vector<double>& lambdas_nm) {
    SensorModel s = sensor_preset_small_pitch(lambdas_nm);
    s.pixel_size_um = 4.0;
    s.height = 1024;
    s.width = 1024;
    return s;
}

} // namespace palsim
