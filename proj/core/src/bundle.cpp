#include "trace/bundle.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace trace {

namespace {

constexpr const char* kFormat = "trace-bundle 1";

std::filesystem::path resolve(const std::filesystem::path& dir, const nlohmann::json& manifest, const char* key) {
    const auto& v = manifest.at(key);
    if (v.is_null()) return {};
    return dir / v.get<std::string>();
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, const ModelBundle& b) {
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "static.ckpt", b.intent.net());
    save_checkpoint(dir / "likelihood.ckpt", b.likelihood->net());
    if (b.completer) save_checkpoint(dir / "completer.ckpt", b.completer->net());
    save_window_weights(dir / "window_weights.txt", b.window_weights);

    nlohmann::json m;
    m["format"] = kFormat;
    m["static"] = "static.ckpt";
    m["likelihood"] = "likelihood.ckpt";
    m["completer"] = b.completer ? nlohmann::json("completer.ckpt") : nlohmann::json(nullptr);
    m["window_weights"] = "window_weights.txt";
    m["horizon"] = {{"boundaries", b.horizon.boundaries},
                    {"behaviors", b.horizon.behavior_names},
                    {"purchase", b.horizon.purchase_behavior ? nlohmann::json(*b.horizon.purchase_behavior)
                                                             : nlohmann::json(nullptr)}};
    m["schema"] = {{"numeric", b.schema.numeric}, {"categorical", b.schema.categorical}, {"hash_space", b.schema.hash_space}};
    m["split_end"] = b.split_end;
    std::ofstream out(dir / kManifestName);
    if (!out) throw std::runtime_error("cannot write bundle manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream in(dir / kManifestName);
    if (!in) throw std::runtime_error("no bundle manifest in " + dir.string());
    try {
        const auto m = nlohmann::json::parse(in);
        if (m.at("format") != kFormat) throw std::runtime_error("unsupported bundle format");

        HorizonConfig horizon;
        horizon.boundaries = m.at("horizon").at("boundaries").get<std::vector<Seconds>>();
        horizon.behavior_names = m.at("horizon").at("behaviors").get<std::vector<std::string>>();
        if (!m.at("horizon").at("purchase").is_null()) horizon.purchase_behavior = m.at("horizon").at("purchase").get<int>();
        horizon.validate();

        FeatureSchema schema;
        schema.numeric = m.at("schema").at("numeric").get<int>();
        schema.categorical = m.at("schema").at("categorical").get<int>();
        schema.hash_space = m.at("schema").at("hash_space").get<std::uint32_t>();

        auto likelihood = std::make_shared<TrajectoryLikelihood>(load_checkpoint(resolve(dir, m, "likelihood")),
                                                                 horizon.windows(), horizon.behaviors());
        likelihood->freeze();
        std::shared_ptr<Completer> completer;
        if (const auto path = resolve(dir, m, "completer"); !path.empty()) {
            completer = std::make_shared<Completer>(load_checkpoint(path), horizon.windows(), horizon.behaviors());
            completer->freeze();
        }
        auto weights = load_window_weights(resolve(dir, m, "window_weights"));
        if (weights.windows() != horizon.windows()) throw std::runtime_error("window weights do not match the horizon");

        return ModelBundle{schema,
                           horizon,
                           StaticIntent(load_checkpoint(resolve(dir, m, "static"))),
                           std::move(likelihood),
                           std::move(completer),
                           std::move(weights),
                           m.at("split_end").get<Seconds>()};
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bundle manifest in " + dir.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("bundle in " + dir.string() + ": " + e.what());
    }
}

}  // namespace trace
