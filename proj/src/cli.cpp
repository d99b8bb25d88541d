// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/cli.hpp"

#include "steepgs/eigsym.hpp"
#include "steepgs/io.hpp"
#include "steepgs/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

namespace steepgs {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Typed access to one JSON object that remembers which keys were read.
class Section {
  public:
    Section(const json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError(label() + "expected an object");
    }

    bool
    has(const char *key) const {
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <typename T>
    T
    get(const char *key, T fallback) {
        used_.insert(key);
        if (!has(key))
            return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception &e) {
            throw ConfigError(label() + key + ": " + e.what());
        }
    }

    template <typename T>
    std::optional<T>
    optional(const char *key, std::optional<T> fallback) {
        used_.insert(key);
        if (!j_.contains(key))
            return fallback;
        if (j_.at(key).is_null())
            return std::nullopt;
        return get<T>(key, T{});
    }

    void
    mark(const char *key) {
        used_.insert(key);
    }

    const json &
    raw(const char *key) {
        used_.insert(key);
        return j_.at(key);
    }

    std::string
    path(const char *key) const {
        return where_.empty() ? key : where_ + "." + key;
    }

    /// Throws on any key that was never read.
    void
    finish() const {
        for (const auto &item : j_.items())
            if (!used_.count(item.key()))
                throw ConfigError("unknown config key '" + path(item.key().c_str()) + "'");
    }

  private:
    std::string
    label() const {
        return where_.empty() ? "config: " : "config " + where_ + ": ";
    }

    const json &j_;
    std::string where_;
    std::set<std::string> used_;
};

template <typename F>
auto
as_config_error(F &&f) {
    try {
        return f();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

void
apply_override(json &doc, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;
    json *node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw ConfigError("--set: empty key component in '" + key + "'");
        json *child = nullptr;
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception &) {
                throw ConfigError("--set: '" + part + "' is not an array index");
            }
            if (idx >= node->size())
                throw ConfigError("--set: index " + part + " out of range");
            child = &(*node)[idx];
        } else if (node->is_object() || node->is_null()) {
            child = &(*node)[part];
        } else {
            throw ConfigError("--set: '" + key + "' descends into a scalar");
        }
        if (dot == std::string::npos) {
            *child = value;
            return;
        }
        node = child;
        start = dot + 1;
    }
}

fs::path
resolve(const fs::path &base, const std::string &p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename E>
E
parse_enum(const std::string &where, const std::string &value, std::initializer_list<std::pair<const char *, E>> names) {
    for (const auto &[name, e] : names)
        if (value == name)
            return e;
    std::string options;
    for (const auto &n : names)
        options += std::string(options.empty() ? "" : ", ") + n.first;
    throw ConfigError("config " + where + ": unknown value '" + value + "' (expected " + options + ")");
}

const char *
mode_name(SceneMode m) {
    return m == SceneMode::Planar ? "planar" : "affine3d";
}

Camera
parse_view_camera(const json &j, const fs::path &base, const fs::path &target) {
    json doc = j;
    if (j.is_string())
        doc = json::parse(read_file(resolve(base, j.get<std::string>())), nullptr, false);
    if (doc.is_null())
        doc = json::object();
    if (!doc.is_object())
        throw ConfigError("config views.camera: expected an object or a camera file");
    for (const auto &item : doc.items())
        if (item.key() != "P" && item.key() != "b" && item.key() != "width" && item.key() != "height" &&
            item.key() != "pixel_scale")
            throw ConfigError("unknown camera key '" + item.key() + "'");
    if (!doc.contains("width") || !doc.contains("height")) {
        const Image img = load_ppm(target);
        doc["width"] = img.width;
        doc["height"] = img.height;
    }
    return camera_from_json(doc.dump());
}

const char *
optimizer_name(Optimizer o) {
    switch (o) {
    case Optimizer::Momentum:
        return "momentum";
    case Optimizer::Adam:
        return "adam";
    default:
        return "gd";
    }
}

std::string
policy_dir_name(DensifyPolicy p) {
    return to_string(p);
}

} // namespace

ExperimentConfig
parse_config(const std::string &text, const fs::path &baseDir, std::span<const std::string> overrides) {
    json doc = json::parse(text, nullptr, false, true);
    if (doc.is_discarded())
        throw ConfigError("config: not valid JSON");
    for (const std::string &o : overrides)
        apply_override(doc, o);

    ExperimentConfig cfg;
    Section top(doc, "");
    cfg.mode = parse_enum<SceneMode>("mode", top.get<std::string>("mode", "planar"),
                                     {{"planar", SceneMode::Planar}, {"affine3d", SceneMode::Affine3D}});
    cfg.outputDir = top.get<std::string>("output_dir", cfg.outputDir.string());
    if (auto dir = top.optional<std::string>("checkpoint_dir", std::nullopt))
        cfg.checkpointDir = *dir;
    cfg.checkpointInterval = top.get<int>("checkpoint_interval", 0);
    if (cfg.checkpointInterval < 0)
        throw ConfigError("config checkpoint_interval: must be >= 0");

    if (!top.has("views"))
        throw ConfigError("config: 'views' is required");
    const json &views = top.raw("views");
    if (!views.is_array() || views.empty())
        throw ConfigError("config views: expected a non-empty array");
    for (std::size_t k = 0; k < views.size(); ++k) {
        Section v(views[k], "views." + std::to_string(k));
        if (!v.has("target"))
            throw ConfigError("config " + v.path("target") + ": required");
        ViewSource src;
        src.target = resolve(baseDir, v.get<std::string>("target", ""));
        if (!fs::exists(src.target))
            throw FileNotFound("target image not found: " + src.target.string());
        v.mark("camera");
        src.camera = parse_view_camera(v.has("camera") ? v.raw("camera") : json(), baseDir, src.target);
        v.finish();
        cfg.views.push_back(std::move(src));
    }

    if (top.has("init")) {
        Section init(top.raw("init"), "init");
        cfg.init.count = init.get<int>("count", cfg.init.count);
        cfg.init.seed = init.get<std::uint64_t>("seed", cfg.init.seed);
        if (auto scene = init.optional<std::string>("scene", std::nullopt)) {
            cfg.init.scene = resolve(baseDir, *scene);
            if (!fs::exists(*cfg.init.scene))
                throw FileNotFound("initial scene not found: " + cfg.init.scene->string());
        }
        init.finish();
    } else {
        top.mark("init");
    }
    if (cfg.init.count < 1)
        throw ConfigError("config init.count: must be >= 1");

    TrainConfig &t = cfg.train;
    if (top.has("train")) {
        Section s(top.raw("train"), "train");
        t.steps = s.get<int>("steps", t.steps);
        t.optimizer = parse_enum<Optimizer>("train.optimizer", s.get<std::string>("optimizer", "gd"),
                                            {{"gd", Optimizer::GradientDescent}, {"momentum", Optimizer::Momentum}, {"adam", Optimizer::Adam}});
        t.momentum = s.get<double>("momentum", t.momentum);
        t.adamBeta2 = s.get<double>("adam_beta2", t.adamBeta2);
        t.adamEps = s.get<double>("adam_eps", t.adamEps);
        t.policy = as_config_error([&] { return parse_policy(s.get<std::string>("policy", to_string(t.policy))); });
        t.seed = s.get<std::uint64_t>("seed", t.seed);
        t.perViewSampling = s.get<bool>("per_view_sampling", t.perViewSampling);
        t.loss = parse_enum<LossKind>("train.loss", s.get<std::string>("loss", "l1"),
                                      {{"l1", LossKind::L1}, {"l2", LossKind::L2}});
        t.renderMode = parse_enum<RenderMode>("train.render_mode", s.get<std::string>("render_mode", "composited"),
                                              {{"composited", RenderMode::Composited}, {"additive", RenderMode::Additive}});
        t.sigmaCutoff = s.get<double>("sigma_cutoff", t.sigmaCutoff);
        t.logInterval = s.get<int>("log_interval", t.logInterval);
        t.minScalePixels = s.get<double>("min_scale_pixels", t.minScalePixels);
        if (s.has("lr")) {
            Section lr(s.raw("lr"), "train.lr");
            t.lr.position = lr.get<double>("position", t.lr.position);
            t.lr.scale = lr.get<double>("scale", t.lr.scale);
            t.lr.rotation = lr.get<double>("rotation", t.lr.rotation);
            t.lr.opacity = lr.get<double>("opacity", t.lr.opacity);
            t.lr.color = lr.get<double>("color", t.lr.color);
            lr.finish();
        } else {
            s.mark("lr");
        }
        s.finish();
    } else {
        top.mark("train");
    }

    DensifyConfig &d = t.densify;
    if (top.has("densify")) {
        Section s(top.raw("densify"), "densify");
        d.epsSplit = s.get<double>("eps_split", d.epsSplit);
        d.stepPolicy = parse_enum<StepPolicy>("densify.step_policy", s.get<std::string>("step_policy", "relative"),
                                              {{"relative", StepPolicy::Relative}, {"absolute", StepPolicy::Absolute}});
        d.stepValue = s.get<double>("step_value", d.stepValue);
        d.budget = s.optional<int>("budget", d.budget);
        d.epsGrad = s.optional<double>("eps_grad", d.epsGrad);
        d.adcPrefilter = s.get<bool>("adc_prefilter", d.adcPrefilter);
        d.pruneOpacity = s.get<double>("prune_opacity", d.pruneOpacity);
        d.interval = s.get<int>("interval", d.interval);
        d.warmup = s.get<int>("warmup", d.warmup);
        d.densifyUntil = s.optional<int>("densify_until", d.densifyUntil);
        if (s.has("adc")) {
            Section a(s.raw("adc"), "densify.adc");
            d.adc.gradThreshold = a.get<double>("grad_threshold", d.adc.gradThreshold);
            d.adc.scaleThreshold = a.get<double>("scale_threshold", d.adc.scaleThreshold);
            d.adc.scaleFactor = a.get<double>("scale_factor", d.adc.scaleFactor);
            a.finish();
        } else {
            s.mark("adc");
        }
        s.finish();
    } else {
        top.mark("densify");
    }

    if (top.has("compare")) {
        const json &pair = top.raw("compare");
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
            throw ConfigError("config compare: expected two policy names");
        for (int k = 0; k < 2; ++k)
            cfg.compare[k] = as_config_error([&] { return parse_policy(pair[k].get<std::string>()); });
    } else {
        top.mark("compare");
    }
    top.finish();

    as_config_error([&] {
        t.validate();
        return 0;
    });
    return cfg;
}

ExperimentConfig
load_config(const fs::path &path, std::span<const std::string> overrides) {
    const std::string text = read_file(path);
    return parse_config(text, fs::absolute(path).parent_path(), overrides);
}

std::string
config_to_json(const ExperimentConfig &cfg) {
    const TrainConfig &t = cfg.train;
    const DensifyConfig &d = t.densify;
    json views = json::array();
    for (const ViewSource &v : cfg.views)
        views.push_back({{"target", fs::absolute(v.target).lexically_normal().string()},
                         {"camera", json::parse(camera_to_json(v.camera))}});
    auto opt = [](const auto &o) { return o ? json(*o) : json(nullptr); };
    json doc{
        {"mode", mode_name(cfg.mode)},
        {"output_dir", cfg.outputDir.string()},
        {"checkpoint_dir", cfg.checkpointDir ? json(cfg.checkpointDir->string()) : json(nullptr)},
        {"checkpoint_interval", cfg.checkpointInterval},
        {"views", views},
        {"init",
         {{"count", cfg.init.count},
          {"seed", cfg.init.seed},
          {"scene", cfg.init.scene ? json(fs::absolute(*cfg.init.scene).string()) : json(nullptr)}}},
        {"train",
         {{"steps", t.steps},
          {"optimizer", optimizer_name(t.optimizer)},
          {"momentum", t.momentum},
          {"adam_beta2", t.adamBeta2},
          {"adam_eps", t.adamEps},
          {"policy", to_string(t.policy)},
          {"seed", t.seed},
          {"per_view_sampling", t.perViewSampling},
          {"loss", t.loss == LossKind::L1 ? "l1" : "l2"},
          {"render_mode", t.renderMode == RenderMode::Composited ? "composited" : "additive"},
          {"sigma_cutoff", t.sigmaCutoff},
          {"log_interval", t.logInterval},
          {"min_scale_pixels", t.minScalePixels},
          {"lr",
           {{"position", t.lr.position},
            {"scale", t.lr.scale},
            {"rotation", t.lr.rotation},
            {"opacity", t.lr.opacity},
            {"color", t.lr.color}}}}},
        {"densify",
         {{"eps_split", d.epsSplit},
          {"step_policy", d.stepPolicy == StepPolicy::Relative ? "relative" : "absolute"},
          {"step_value", d.stepValue},
          {"budget", opt(d.budget)},
          {"eps_grad", opt(d.epsGrad)},
          {"adc_prefilter", d.adcPrefilter},
          {"prune_opacity", d.pruneOpacity},
          {"interval", d.interval},
          {"warmup", d.warmup},
          {"densify_until", opt(d.densifyUntil)},
          {"adc",
           {{"grad_threshold", d.adc.gradThreshold},
            {"scale_threshold", d.adc.scaleThreshold},
            {"scale_factor", d.adc.scaleFactor}}}}},
        {"compare", {to_string(cfg.compare[0]), to_string(cfg.compare[1])}},
    };
    return doc.dump(2) + "\n";
}

LoadedExperiment
load_experiment(const ExperimentConfig &cfg) {
    LoadedExperiment out;
    for (const ViewSource &v : cfg.views) {
        Image target = load_ppm(v.target);
        if (target.width != v.camera.width || target.height != v.camera.height)
            throw ConfigError("target " + v.target.string() + " is " + std::to_string(target.width) + "x" +
                              std::to_string(target.height) + " but its camera is " +
                              std::to_string(v.camera.width) + "x" + std::to_string(v.camera.height));
        out.views.push_back(View{v.camera, std::move(target)});
    }
    if (cfg.init.scene) {
        out.initial = load_scene(*cfg.init.scene);
        if (out.initial.mode != cfg.mode)
            throw ConfigError("initial scene mode differs from the configured mode");
    } else {
        out.initial = initialize_scene(cfg.init.count, cfg.views.front().camera, cfg.mode, cfg.init.seed);
    }
    return out;
}

TrainReport
run_experiment(const ExperimentConfig &cfg, const LoadedExperiment &data, DensifyPolicy policy, const fs::path &outDir,
               std::ostream &log) {
    ExperimentConfig effective = cfg;
    effective.train.policy = policy;
    effective.outputDir = outDir;

    std::string densifyLog;
    TrainHooks hooks;
    if (cfg.checkpointDir && cfg.checkpointInterval > 0) {
        const fs::path dir = *cfg.checkpointDir;
        hooks.checkpointInterval = cfg.checkpointInterval;
        hooks.checkpoint = [dir](int step, const Scene &scene) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%07d.json", step);
            atomic_write(dir / name, scene_to_json(scene));
        };
    }
    const std::string tag = to_string(policy);
    hooks.onDensify = [&](const DensifyEvent &e) {
        densifyLog += e.logLine() + "\n";
        log << "[" << tag << "] " << e.logLine() << "\n";
    };

    TrainReport report = train(data.initial, data.views, effective.train, hooks);

    fs::create_directories(outDir);
    atomic_write(outDir / "config.json", config_to_json(effective));
    atomic_write(outDir / "metrics.csv", metrics_csv(report.rows));
    atomic_write(outDir / "densify.log", densifyLog);
    atomic_write(outDir / "scene.json", scene_to_json(report.finalScene));
    const RenderOptions ro{effective.train.renderMode, effective.train.sigmaCutoff};
    for (std::size_t k = 0; k < data.views.size(); ++k)
        atomic_write(outDir / ("render_" + std::to_string(k) + ".ppm"),
                     encode_ppm(render(report.finalScene, data.views[k].cam, ro).image));
    log << "[" << tag << "] final loss " << format_float(report.finalLoss) << ", psnr "
        << format_float(report.finalPsnr) << ", points " << report.finalScene.size() << "\n";
    return report;
}

std::string
compare_csv(const TrainReport &a, const TrainReport &b) {
    std::string out = "step,loss_A,loss_B,n_A,n_B\n";
    std::size_t i = 0, j = 0;
    while (i < a.rows.size() && j < b.rows.size()) {
        if (a.rows[i].step < b.rows[j].step) {
            ++i;
        } else if (b.rows[j].step < a.rows[i].step) {
            ++j;
        } else {
            out += std::to_string(a.rows[i].step) + "," + format_float(a.rows[i].loss) + "," +
                   format_float(b.rows[j].loss) + "," + std::to_string(a.rows[i].points) + "," +
                   std::to_string(b.rows[j].points) + "\n";
            ++i;
            ++j;
        }
    }
    return out;
}

namespace {

int
cmd_train(const std::string &configPath, const std::vector<std::string> &sets, std::ostream &out) {
    const ExperimentConfig cfg = load_config(configPath, sets);
    const LoadedExperiment data = load_experiment(cfg);
    run_experiment(cfg, data, cfg.train.policy, cfg.outputDir, out);
    out << "wrote " << (cfg.outputDir / "metrics.csv").string() << "\n";
    return kExitOk;
}

int
cmd_compare(const std::vector<std::string> &policies, const std::string &configPath,
            const std::vector<std::string> &sets, std::ostream &out) {
    ExperimentConfig cfg = load_config(configPath, sets);
    for (int k = 0; k < 2; ++k)
        cfg.compare[k] = as_config_error([&] { return parse_policy(policies[k]); });
    const LoadedExperiment data = load_experiment(cfg);
    std::string names[2] = {policy_dir_name(cfg.compare[0]), policy_dir_name(cfg.compare[1])};
    if (names[0] == names[1])
        names[1] += "_b";
    TrainReport reports[2];
    for (int k = 0; k < 2; ++k) {
        ExperimentConfig run = cfg;
        if (run.checkpointDir)
            run.checkpointDir = *run.checkpointDir / names[k];
        reports[k] = run_experiment(run, data, cfg.compare[k], cfg.outputDir / names[k], out);
    }
    atomic_write(cfg.outputDir / "compare.csv", compare_csv(reports[0], reports[1]));
    std::vector<CurveSeries> curves(2);
    for (int k = 0; k < 2; ++k) {
        curves[k].label = names[k];
        for (const TrainRow &r : reports[k].rows) {
            curves[k].x.push_back(r.step);
            curves[k].y.push_back(r.loss);
        }
    }
    atomic_write(cfg.outputDir / "loss.svg", loss_curve_svg(curves, "loss: " + names[0] + " vs " + names[1]));
    const double pointRatio = static_cast<double>(reports[0].finalScene.size()) /
                              static_cast<double>(std::max<std::size_t>(reports[1].finalScene.size(), 1));
    const double lossRatio = reports[0].finalLoss / reports[1].finalLoss;
    out << names[0] << "/" << names[1] << " points ratio " << format_float(pointRatio) << ", loss ratio "
        << format_float(lossRatio) << "\n";
    out << "wrote " << (cfg.outputDir / "compare.csv").string() << "\n";
    return kExitOk;
}

int
cmd_render(const std::string &scenePath, const std::string &cameraPath, const std::string &outPath,
           const std::string &mode, std::ostream &out) {
    const Scene scene = load_scene(scenePath);
    const Camera cam = load_camera(cameraPath);
    const RenderMode rm = parse_enum<RenderMode>(
        "--mode", mode, {{"composited", RenderMode::Composited}, {"additive", RenderMode::Additive}});
    atomic_write(outPath, encode_ppm(render(scene, cam, rm).image));
    out << "wrote " << outPath << "\n";
    return kExitOk;
}

int
cmd_verify(const std::string &filter, std::ostream &out) {
    bool any = false, ok = true;
    for (const CheckInfo &c : all_checks()) {
        if (!filter.empty() && c.name != filter)
            continue;
        any = true;
        const CheckResult r = c.run();
        ok = ok && r.passed;
        out << format_check(r) << "\n";
    }
    if (!any) {
        std::string names;
        for (const CheckInfo &c : all_checks())
            names += " " + c.name;
        throw ConfigError("no check named '" + filter + "'; available:" + names);
    }
    return ok ? kExitOk : kExitCheckFailed;
}

int
cmd_eigen(std::istream &in, std::ostream &out) {
    std::vector<double> v;
    double x;
    while (in >> x)
        v.push_back(x);
    if (!in.eof())
        throw ConfigError("eigen: stdin must contain only numbers");
    // 15 significant digits hide the last-ulp noise of the closed form
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.15g", v + 0.0);
        return std::string(buf);
    };
    auto print = [&](double lambda, const auto &vec) {
        out << "lambda " << num(lambda) << "  v [";
        for (Eigen::Index k = 0; k < vec.size(); ++k)
            out << (k ? ", " : "") << num(vec[k]);
        out << "]\n";
    };
    auto check_symmetric = [](const auto &A) {
        const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
        if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ConfigError("eigen: matrix is not symmetric");
    };
    if (v.size() == 9) {
        const Mat3 A = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
        check_symmetric(A);
        for (const auto &p : eig_sym3(A))
            print(p.value, p.vector);
    } else if (v.size() == 4) {
        const Mat2 A = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(v.data());
        check_symmetric(A);
        for (const auto &p : eig_sym2(A))
            print(p.value, p.vector);
    } else {
        throw ConfigError("eigen: expected 4 or 9 numbers, got " + std::to_string(v.size()));
    }
    return kExitOk;
}

} // namespace

int
run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err, std::istream &in) {
    CLI::App app{"Gaussian splatting on the CPU with steepest density control"};
    app.name("steepgs");
    app.require_subcommand(1);

    std::string configPath, scenePath, cameraPath, outPath, filter, renderMode = "composited";
    std::vector<std::string> sets, policies;

    auto *train = app.add_subcommand("train", "fit a scene to the configured targets");
    train->add_option("--config", configPath, "experiment config (JSON)")->required();
    train->add_option("--set", sets, "override a dotted config key, e.g. train.steps=500")->allow_extra_args(false);

    auto *render = app.add_subcommand("render", "render a saved scene");
    render->add_option("--scene", scenePath, "scene JSON")->required();
    render->add_option("--camera", cameraPath, "camera JSON")->required();
    render->add_option("--out", outPath, "output PPM")->required();
    render->add_option("--mode", renderMode, "composited or additive");

    auto *verify = app.add_subcommand("verify", "run the derivative and splitting property checks");
    verify->add_option("--filter", filter, "run only the named check");

    auto *compare = app.add_subcommand("compare", "train two policies from the same seed");
    compare->add_option("policies", policies, "two densification policies")->expected(2)->required();
    compare->add_option("--config", configPath, "experiment config (JSON)")->required();
    compare->add_option("--set", sets, "override a dotted config key")->allow_extra_args(false);

    auto *eigen = app.add_subcommand("eigen", "eigenpairs of a symmetric 2x2 or 3x3 matrix read from stdin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed())
            return cmd_train(configPath, sets, out);
        if (compare->parsed())
            return cmd_compare(policies, configPath, sets, out);
        if (render->parsed())
            return cmd_render(scenePath, cameraPath, outPath, renderMode, out);
        if (verify->parsed())
            return cmd_verify(filter, out);
        if (eigen->parsed())
            return cmd_eigen(in, out);
    } catch (const ConfigError &e) {
        err << "steepgs: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FileNotFound &e) {
        err << "steepgs: missing file: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const std::exception &e) {
        err << "steepgs: error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace steepgs
