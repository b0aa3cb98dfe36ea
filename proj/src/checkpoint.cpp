#include "gvs/checkpoint.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "gvs/error.hpp"
#include "json.hpp"

namespace gvs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path strip(const fs::path& p) {
    std::string s = p.string();
    for (const std::string suffix : {".manifest.json", ".params.f32"}) {
        if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return fs::path(s.substr(0, s.size() - suffix.size()));
        }
    }
    return p;
}

json vector_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector json_vector(const json& arr, std::size_t expected, const std::string& what) {
    if (!arr.is_array() || arr.size() != expected) {
        throw FormatError("checkpoint: '" + what + "' must be an array of " + std::to_string(expected) + " numbers");
    }
    Vector v(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

}  // namespace

void save_checkpoint(const FlowModel& model, const fs::path& base_in) {
    const fs::path base = strip(base_in);
    const auto& a = model.arch();
    const std::size_t n_params = model.parameter_count();
    json tensors = json::array();
    for (const auto& t : model.tensors()) {
        const std::size_t elem = t.buffer ? n_params + t.offset : t.offset;
        tensors.push_back({{"name", t.name},
                           {"shape", t.shape},
                           {"byte_offset", elem * 4},
                           {"kind", t.buffer ? "buffer" : "param"}});
    }
    json manifest = {
        {"format", "gvs-flow-checkpoint"},
        {"format_version", kCheckpointVersion},
        {"architecture",
         {{"input_dim", a.input_dim},
          {"hidden_dim", a.hidden_dim},
          {"time_dim", a.time_dim},
          {"cond_dim", a.cond_dim},
          {"layers", a.layers},
          {"rank", a.rank}}},
        {"objective", objective_name(model.objective())},
        {"condition_dropout", model.trained_condition_dropout()},
        {"standardize", {{"mean", vector_json(model.stats().mean)}, {"std", vector_json(model.stats().std)}}},
        {"param_count", n_params},
        {"buffer_count", model.buffers().size()},
        {"tensors", tensors},
    };
    detail::write_text(fs::path(base.string() + ".manifest.json"), manifest.dump(2) + "\n");

    Vector all(model.params().size() + model.buffers().size());
    all << model.params(), model.buffers();
    const auto bytes = detail::encode_f32le(all.data(), static_cast<std::size_t>(all.size()));
    detail::write_file(fs::path(base.string() + ".params.f32"), bytes.data(), bytes.size());
}

FlowModel load_checkpoint(const fs::path& base_in) {
    const fs::path base = strip(base_in);
    const fs::path manifest_path(base.string() + ".manifest.json");
    json m;
    try {
        m = json::parse(detail::read_text(manifest_path));
    } catch (const json::parse_error& e) {
        throw FormatError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    try {
        if (m.value("format_version", -1) != kCheckpointVersion) {
            throw FormatError(manifest_path.string() + ": unsupported checkpoint version " +
                              m.value("format_version", json(-1)).dump());
        }
        const auto& aj = m.at("architecture");
        Architecture a;
        a.input_dim = aj.at("input_dim").get<std::size_t>();
        a.hidden_dim = aj.at("hidden_dim").get<std::size_t>();
        a.time_dim = aj.at("time_dim").get<std::size_t>();
        a.cond_dim = aj.at("cond_dim").get<std::size_t>();
        a.layers = aj.at("layers").get<std::size_t>();
        a.rank = aj.at("rank").get<std::size_t>();
        FlowModel model = FlowModel::zeros(a);

        const auto& tj = m.at("tensors");
        if (!tj.is_array() || tj.size() != model.tensors().size()) {
            throw FormatError(manifest_path.string() + ": tensor table does not match the architecture");
        }
        const std::size_t n_params = model.parameter_count();
        for (std::size_t i = 0; i < tj.size(); ++i) {
            const auto& t = model.tensors()[i];
            const std::size_t elem = t.buffer ? n_params + t.offset : t.offset;
            if (tj[i].at("name").get<std::string>() != t.name ||
                tj[i].at("shape").get<std::vector<std::size_t>>() != t.shape ||
                tj[i].at("byte_offset").get<std::size_t>() != elem * 4) {
                throw FormatError(manifest_path.string() + ": tensor entry " + std::to_string(i) + " ('" +
                                  tj[i].value("name", std::string("?")) + "') does not match the architecture");
            }
        }

        const fs::path raw_path(base.string() + ".params.f32");
        const auto bytes = detail::read_file(raw_path);
        const std::size_t total = n_params + static_cast<std::size_t>(model.buffers().size());
        if (bytes.size() != total * 4) {
            throw FormatError(raw_path.string() + ": expected " + std::to_string(total * 4) + " bytes, found " +
                              std::to_string(bytes.size()));
        }
        const auto values = detail::decode_f32le(bytes);
        for (std::size_t i = 0; i < total; ++i) {
            if (!std::isfinite(values[i])) throw FormatError(raw_path.string() + ": non-finite parameter");
        }
        model.params() = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(n_params));
        model.buffers() =
            Eigen::Map<const Vector>(values.data() + n_params, static_cast<Eigen::Index>(total - n_params));

        const auto& sj = m.at("standardize");
        model.stats().mean = json_vector(sj.at("mean"), a.input_dim, "standardize.mean");
        model.stats().std = json_vector(sj.at("std"), a.input_dim, "standardize.std");
        model.set_trained_condition_dropout(m.value("condition_dropout", 0.0));
        model.set_objective(parse_objective(m.value("objective", std::string("cfm"))));
        return model;
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
}

}  // namespace gvs
