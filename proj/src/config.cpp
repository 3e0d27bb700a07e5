#include "wt/config.hpp"

#include "wt/functionals.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wt {

namespace {

std::string join_errors(const std::vector<std::string>& errs) {
    std::ostringstream os;
    os << "config errors (" << errs.size() << "):";
    for (const auto& e : errs) os << "\n  - " << e;
    return os.str();
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct RawConfig {
    // section -> key -> value text
    std::map<std::string, std::map<std::string, std::string>> kv;
    std::vector<std::string>* errors;

    bool has(const std::string& sec, const std::string& key) const {
        auto s = kv.find(sec);
        return s != kv.end() && s->second.count(key) > 0;
    }
    std::string get(const std::string& sec, const std::string& key) const {
        return kv.at(sec).at(key);
    }
};

class Reader {
public:
    Reader(const RawConfig& raw, std::vector<std::string>& errors)
        : raw_(raw), errors_(errors) {}

    void mark_known(const std::string& sec, const std::string& key) {
        known_.insert(sec + "." + key);
    }

    double number(const std::string& sec, const std::string& key, double fallback) {
        mark_known(sec, key);
        if (!raw_.has(sec, key)) return fallback;
        std::string v = raw_.get(sec, key);
        char* end = nullptr;
        double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') {
            errors_.push_back(sec + "." + key + ": expected a number, got '" + v + "'");
            return fallback;
        }
        return x;
    }

    int integer(const std::string& sec, const std::string& key, int fallback) {
        double x = number(sec, key, fallback);
        return static_cast<int>(x);
    }

    uint64_t u64(const std::string& sec, const std::string& key, uint64_t fallback) {
        mark_known(sec, key);
        if (!raw_.has(sec, key)) return fallback;
        std::string v = raw_.get(sec, key);
        char* end = nullptr;
        unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') {
            errors_.push_back(sec + "." + key + ": expected an unsigned integer, got '" + v + "'");
            return fallback;
        }
        return x;
    }

    bool boolean(const std::string& sec, const std::string& key, bool fallback) {
        mark_known(sec, key);
        if (!raw_.has(sec, key)) return fallback;
        std::string v = lower(raw_.get(sec, key));
        if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "off" || v == "no" || v == "0") return false;
        errors_.push_back(sec + "." + key + ": expected a boolean, got '" + v + "'");
        return fallback;
    }

    std::string text(const std::string& sec, const std::string& key,
                     const std::string& fallback) {
        mark_known(sec, key);
        if (!raw_.has(sec, key)) return fallback;
        return raw_.get(sec, key);
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key) {
        mark_known(sec, key);
        std::vector<double> out;
        if (!raw_.has(sec, key)) return out;
        std::stringstream ss(raw_.get(sec, key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            char* end = nullptr;
            double x = std::strtod(item.c_str(), &end);
            if (end == item.c_str() || *end != '\0') {
                errors_.push_back(sec + "." + key + ": expected numbers, got '" + item + "'");
                return out;
            }
            out.push_back(x);
        }
        return out;
    }

    std::vector<std::string> words(const std::string& sec, const std::string& key) {
        mark_known(sec, key);
        std::vector<std::string> out;
        if (!raw_.has(sec, key)) return out;
        std::stringstream ss(raw_.get(sec, key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(lower(item));
        }
        return out;
    }

    void report_unknown() {
        for (const auto& [sec, keys] : raw_.kv) {
            for (const auto& [key, val] : keys) {
                (void)val;
                if (known_.count(sec + "." + key) == 0) {
                    errors_.push_back(sec + "." + key + ": unknown key");
                }
            }
        }
    }

private:
    const RawConfig& raw_;
    std::vector<std::string>& errors_;
    std::set<std::string> known_;
};

std::vector<double> broadcast(std::vector<double> v, int dim, double fill) {
    if (v.empty()) v.assign(dim, fill);
    if (static_cast<int>(v.size()) == 1 && dim > 1) v.assign(dim, v[0]);
    return v;
}

void validate(ExperimentConfig& cfg, std::vector<std::string>& errors) {
    auto fail = [&errors](const std::string& msg) { errors.push_back(msg); };

    if (cfg.topology != "euclidean" && cfg.topology != "torus") {
        fail("space.topology: must be 'euclidean' or 'torus'");
    }
    if (cfg.dim < 1) fail("space.dim: must be >= 1");
    if (!(cfg.period > 0.0)) fail("space.period: must be positive");
    const bool torus = cfg.topology == "torus";
    const int dim = std::max(cfg.dim, 1);

    auto kind = parse_kind(cfg.kind);
    if (!kind) {
        fail("functional.kind: unknown kind '" + cfg.kind + "'");
    } else {
        if (cfg.backend.empty()) {
            switch (*kind) {
                case FunctionalKind::MMD:
                case FunctionalKind::LinearLifted:
                    cfg.backend = "closed_form";
                    break;
                case FunctionalKind::KL:
                case FunctionalKind::LinearEntropyKL:
                    cfg.backend = "kde_score";
                    break;
                case FunctionalKind::Chi2:
                    cfg.backend = "rkhs_dual";
                    break;
            }
        }
        auto backend = parse_backend(cfg.backend);
        if (!backend) {
            fail("functional.backend: unknown backend '" + cfg.backend + "'");
        } else if (!backend_legal(*kind, *backend)) {
            fail("functional.backend: " + cfg.backend + " is not legal for kind " + cfg.kind +
                 " (legality invariant: mmd/linear_lifted->closed_form, kl->kde_score, "
                 "linear_entropy_kl->kde_score|rkhs_dual, chi2->rkhs_dual)");
        }

        bool needs_g = *kind == FunctionalKind::LinearLifted ||
                       *kind == FunctionalKind::LinearEntropyKL;
        if (needs_g) {
            if (cfg.g_name != "zero" && cfg.g_name != "quadratic" &&
                cfg.g_name != "double_well" && cfg.g_name != "cosine") {
                fail("functional.g: unknown objective function '" + cfg.g_name + "'");
            }
            cfg.g_center = broadcast(cfg.g_center, dim, 0.0);
            if (static_cast<int>(cfg.g_center.size()) != dim) {
                fail("functional.g_center: expected " + std::to_string(dim) + " entries");
            }
        }
        if (*kind == FunctionalKind::LinearEntropyKL) {
            if (!(cfg.tau > 0.0)) fail("functional.tau: must be positive");
            if (cfg.prior.empty()) {
                fail("functional.prior: required for linear_entropy_kl");
            } else if (cfg.prior == "gaussian") {
                if (torus) fail("functional.prior: gaussian prior requires euclidean space");
            } else if (cfg.prior == "flat") {
                if (backend && *backend == WitnessBackend::RKHSDual) {
                    fail("functional.prior: flat prior has no sampler; rkhs_dual needs one");
                }
            } else if (cfg.prior == "uniform_torus" || cfg.prior == "wrapped_gaussian") {
                if (!torus) fail("functional.prior: " + cfg.prior + " requires torus space");
            } else {
                fail("functional.prior: unknown prior '" + cfg.prior + "'");
            }
            cfg.prior_mean = broadcast(cfg.prior_mean, dim, 0.0);
            cfg.prior_sigma = broadcast(cfg.prior_sigma, dim, 1.0);
            for (double s : cfg.prior_sigma) {
                if (!(s > 0.0) && cfg.prior != "flat" && cfg.prior != "uniform_torus") {
                    fail("functional.prior_sigma: must be positive");
                    break;
                }
            }
        }
        if (*kind == FunctionalKind::KL) {
            if (cfg.target_kind != "gaussian") {
                fail("target.kind: kl functional requires a gaussian target score");
            }
        }
        if (*kind == FunctionalKind::Chi2 || *kind == FunctionalKind::MMD) {
            if (cfg.target_kind == "none") {
                fail("target.kind: " + cfg.kind + " requires target samples");
            }
        }
    }
    if (cfg.kde_bandwidth < 0.0) fail("functional.kde_bandwidth: must be >= 0");

    if (cfg.kernel_bandwidth < 0.0) fail("kernel.bandwidth: must be >= 0 (0 = median)");
    if (cfg.wrap_images < 0) fail("kernel.wrap_images: must be >= 0");

    if (!(cfg.alpha > 0.0)) fail("transport.alpha: must be positive");
    if (cfg.iters < 0) fail("transport.iters: must be >= 0");
    if (cfg.n_particles < 1) fail("transport.n_particles: must be >= 1");
    if (cfg.lambda < 0.0) fail("transport.lambda: must be >= 0 (0 = auto)");
    if (cfg.mode != "direct" && cfg.mode != "map") {
        fail("transport.mode: must be 'direct' or 'map'");
    }
    if (cfg.snapshot_every < 0) fail("transport.snapshot_every: must be >= 0");
    if (cfg.grad_norm_tol < 0.0) fail("transport.grad_norm_tol: must be >= 0");

    if (cfg.init_sampler == "gaussian") {
        cfg.init_mean = broadcast(cfg.init_mean, dim, 0.0);
        cfg.init_sigma = broadcast(cfg.init_sigma, dim, 1.0);
        for (double s : cfg.init_sigma) {
            if (s < 0.0) {
                fail("init.sigma: must be >= 0");
                break;
            }
        }
    } else if (cfg.init_sampler == "uniform_torus" || cfg.init_sampler == "wrapped_gaussian") {
        if (!torus) fail("init.sampler: " + cfg.init_sampler + " requires torus space");
        cfg.init_mean = broadcast(cfg.init_mean, dim, 0.0);
        cfg.init_sigma = broadcast(cfg.init_sigma, dim, 1.0);
        if (cfg.init_sampler == "wrapped_gaussian") {
            for (double s : cfg.init_sigma) {
                if (!(s > 0.0)) {
                    fail("init.sigma: wrapped_gaussian requires sigma > 0");
                    break;
                }
            }
        }
    } else {
        fail("init.sampler: unknown sampler '" + cfg.init_sampler + "'");
    }

    if (cfg.target_kind == "gaussian") {
        if (torus) fail("target.kind: gaussian target requires euclidean space");
        cfg.target_mean = broadcast(cfg.target_mean, dim, 0.0);
        cfg.target_sigma = broadcast(cfg.target_sigma, dim, 1.0);
        for (double s : cfg.target_sigma) {
            if (!(s > 0.0)) {
                fail("target.sigma: must be positive");
                break;
            }
        }
    } else if (cfg.target_kind == "gibbs") {
        if (cfg.dim != 1) fail("target.kind: gibbs target requires dim = 1");
        if (cfg.kind != "linear_entropy_kl") {
            fail("target.kind: gibbs target is defined by the linear_entropy_kl functional");
        }
        if (torus) fail("target.kind: gibbs target oracle requires euclidean space");
    } else if (cfg.target_kind != "none") {
        fail("target.kind: unknown target '" + cfg.target_kind + "'");
    }
    if (cfg.target_samples < 0) fail("target.samples: must be >= 0");
    if (cfg.mmd_bandwidth < 0.0) fail("target.mmd_bandwidth: must be >= 0 (0 = median)");
    if (cfg.w2_every < 0) fail("target.w2_every: must be >= 0");
    if (cfg.grid_kl_every < 0) fail("target.grid_kl_every: must be >= 0");
    if (cfg.grid_points < 16) fail("target.grid_points: must be >= 16");
    if (cfg.grid_kl_every > 0 && cfg.dim > 2) {
        fail("target.grid_kl_every: grid KL requires dim <= 2");
    }

    for (const auto& b : cfg.baselines) {
        if (b != "ula" && b != "svgd") fail("baselines.run: unknown baseline '" + b + "'");
    }
    if (!cfg.baselines.empty() && cfg.target_kind == "none") {
        fail("baselines.run: baselines need a target score; set target.kind");
    }
    if (!(cfg.ula_gamma > 0.0)) fail("baselines.ula_gamma: must be positive");
    if (!(cfg.svgd_eps > 0.0)) fail("baselines.svgd_eps: must be positive");
    if (cfg.svgd_bandwidth < 0.0) fail("baselines.svgd_bandwidth: must be >= 0 (0 = median)");

    if (cfg.bias_every < 0) fail("run.bias_every: must be >= 0");
    if (cfg.out_dir.empty()) fail("run.out_dir: must not be empty");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errs)
    : std::runtime_error(join_errors(errs)), errors(std::move(errs)) {}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::vector<std::string> errors;
    RawConfig raw;
    raw.errors = &errors;

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back(origin + ":" + std::to_string(lineno) + ": bad section header");
                continue;
            }
            section = lower(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(origin + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = lower(trim(line.substr(0, eq)));
        std::string val = trim(line.substr(eq + 1));
        if (section.empty()) {
            errors.push_back(origin + ":" + std::to_string(lineno) + ": key outside a section");
            continue;
        }
        raw.kv[section][key] = val;
    }

    Reader r(raw, errors);
    ExperimentConfig cfg;
    cfg.topology = lower(r.text("space", "topology", cfg.topology));
    cfg.dim = r.integer("space", "dim", cfg.dim);
    cfg.period = r.number("space", "period", cfg.period);

    cfg.kind = lower(r.text("functional", "kind", cfg.kind));
    cfg.backend = lower(r.text("functional", "backend", cfg.backend));
    cfg.g_name = lower(r.text("functional", "g", cfg.g_name));
    cfg.g_center = r.numbers("functional", "g_center");
    cfg.g_scale = r.number("functional", "g_scale", cfg.g_scale);
    cfg.tau = r.number("functional", "tau", cfg.tau);
    cfg.prior = lower(r.text("functional", "prior", cfg.prior));
    cfg.prior_mean = r.numbers("functional", "prior_mean");
    cfg.prior_sigma = r.numbers("functional", "prior_sigma");
    cfg.prior_samples = r.integer("functional", "prior_samples", cfg.prior_samples);
    cfg.kde_bandwidth = r.number("functional", "kde_bandwidth", cfg.kde_bandwidth);
    cfg.kde_leave_one_out = r.boolean("functional", "kde_leave_one_out", cfg.kde_leave_one_out);

    std::string kb = lower(r.text("kernel", "bandwidth", "median"));
    if (kb == "median") {
        cfg.kernel_bandwidth = 0.0;
    } else {
        char* end = nullptr;
        cfg.kernel_bandwidth = std::strtod(kb.c_str(), &end);
        if (end == kb.c_str() || *end != '\0') {
            errors.push_back("kernel.bandwidth: expected a number or 'median', got '" + kb + "'");
        }
    }
    cfg.wrap_images = r.integer("kernel", "wrap_images", cfg.wrap_images);

    cfg.alpha = r.number("transport", "alpha", cfg.alpha);
    cfg.iters = r.integer("transport", "iters", cfg.iters);
    cfg.n_particles = r.integer("transport", "n_particles", cfg.n_particles);
    cfg.lambda = r.number("transport", "lambda", cfg.lambda);
    cfg.mode = lower(r.text("transport", "mode", cfg.mode));
    cfg.safeguard = r.boolean("transport", "safeguard", cfg.safeguard);
    cfg.snapshot_every = r.integer("transport", "snapshot_every", cfg.snapshot_every);
    cfg.grad_norm_tol = r.number("transport", "grad_norm_tol", cfg.grad_norm_tol);
    cfg.warm_start = r.boolean("transport", "warm_start", cfg.warm_start);

    cfg.init_sampler = lower(r.text("init", "sampler", cfg.init_sampler));
    cfg.init_mean = r.numbers("init", "mean");
    cfg.init_sigma = r.numbers("init", "sigma");

    cfg.target_kind = lower(r.text("target", "kind", cfg.target_kind));
    cfg.target_mean = r.numbers("target", "mean");
    cfg.target_sigma = r.numbers("target", "sigma");
    cfg.target_samples = r.integer("target", "samples", cfg.target_samples);
    cfg.mmd_bandwidth = r.number("target", "mmd_bandwidth", cfg.mmd_bandwidth);
    cfg.null_mmd2 = r.boolean("target", "null_mmd2", cfg.null_mmd2);
    cfg.w2_every = r.integer("target", "w2_every", cfg.w2_every);
    cfg.grid_kl_every = r.integer("target", "grid_kl_every", cfg.grid_kl_every);
    cfg.grid_points = r.integer("target", "grid_points", cfg.grid_points);

    cfg.baselines = r.words("baselines", "run");
    cfg.ula_gamma = r.number("baselines", "ula_gamma", cfg.ula_gamma);
    cfg.svgd_eps = r.number("baselines", "svgd_eps", cfg.svgd_eps);
    std::string sb = lower(r.text("baselines", "svgd_bandwidth", "median"));
    if (sb == "median") {
        cfg.svgd_bandwidth = 0.0;
    } else {
        char* end = nullptr;
        cfg.svgd_bandwidth = std::strtod(sb.c_str(), &end);
        if (end == sb.c_str() || *end != '\0') {
            errors.push_back("baselines.svgd_bandwidth: expected a number or 'median'");
        }
    }
    cfg.baselines_exact_score = r.boolean("baselines", "use_exact_score",
                                          cfg.baselines_exact_score);

    cfg.seed = r.u64("run", "seed", cfg.seed);
    cfg.out_dir = r.text("run", "out_dir", cfg.out_dir);
    cfg.bias_every = r.integer("run", "bias_every", cfg.bias_every);

    r.report_unknown();
    validate(cfg, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError({"cannot open config file: " + path});
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config_text(os.str(), path);
}

namespace {

std::string num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string nums(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += num(v[i]);
    }
    return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[space]\n";
    os << "topology = " << c.topology << "\n";
    os << "dim = " << c.dim << "\n";
    os << "period = " << num(c.period) << "\n";
    os << "\n[functional]\n";
    os << "kind = " << c.kind << "\n";
    if (!c.backend.empty()) os << "backend = " << c.backend << "\n";
    os << "g = " << c.g_name << "\n";
    if (!c.g_center.empty()) os << "g_center = " << nums(c.g_center) << "\n";
    os << "g_scale = " << num(c.g_scale) << "\n";
    os << "tau = " << num(c.tau) << "\n";
    if (!c.prior.empty()) os << "prior = " << c.prior << "\n";
    if (!c.prior_mean.empty()) os << "prior_mean = " << nums(c.prior_mean) << "\n";
    if (!c.prior_sigma.empty()) os << "prior_sigma = " << nums(c.prior_sigma) << "\n";
    os << "prior_samples = " << c.prior_samples << "\n";
    os << "kde_bandwidth = " << num(c.kde_bandwidth) << "\n";
    os << "kde_leave_one_out = " << (c.kde_leave_one_out ? "true" : "false") << "\n";
    os << "\n[kernel]\n";
    os << "bandwidth = " << (c.kernel_bandwidth > 0.0 ? num(c.kernel_bandwidth) : "median")
       << "\n";
    os << "wrap_images = " << c.wrap_images << "\n";
    os << "\n[transport]\n";
    os << "alpha = " << num(c.alpha) << "\n";
    os << "iters = " << c.iters << "\n";
    os << "n_particles = " << c.n_particles << "\n";
    os << "lambda = " << num(c.lambda) << "\n";
    os << "mode = " << c.mode << "\n";
    os << "safeguard = " << (c.safeguard ? "on" : "off") << "\n";
    os << "snapshot_every = " << c.snapshot_every << "\n";
    os << "grad_norm_tol = " << num(c.grad_norm_tol) << "\n";
    os << "warm_start = " << (c.warm_start ? "true" : "false") << "\n";
    os << "\n[init]\n";
    os << "sampler = " << c.init_sampler << "\n";
    if (!c.init_mean.empty()) os << "mean = " << nums(c.init_mean) << "\n";
    if (!c.init_sigma.empty()) os << "sigma = " << nums(c.init_sigma) << "\n";
    os << "\n[target]\n";
    os << "kind = " << c.target_kind << "\n";
    if (!c.target_mean.empty()) os << "mean = " << nums(c.target_mean) << "\n";
    if (!c.target_sigma.empty()) os << "sigma = " << nums(c.target_sigma) << "\n";
    os << "samples = " << c.target_samples << "\n";
    os << "mmd_bandwidth = " << (c.mmd_bandwidth > 0.0 ? num(c.mmd_bandwidth) : "0") << "\n";
    os << "null_mmd2 = " << (c.null_mmd2 ? "true" : "false") << "\n";
    os << "w2_every = " << c.w2_every << "\n";
    os << "grid_kl_every = " << c.grid_kl_every << "\n";
    os << "grid_points = " << c.grid_points << "\n";
    os << "\n[baselines]\n";
    if (!c.baselines.empty()) {
        os << "run = ";
        for (size_t i = 0; i < c.baselines.size(); ++i) {
            if (i) os << ", ";
            os << c.baselines[i];
        }
        os << "\n";
    }
    os << "ula_gamma = " << num(c.ula_gamma) << "\n";
    os << "svgd_eps = " << num(c.svgd_eps) << "\n";
    os << "svgd_bandwidth = " << (c.svgd_bandwidth > 0.0 ? num(c.svgd_bandwidth) : "median")
       << "\n";
    os << "use_exact_score = " << (c.baselines_exact_score ? "true" : "false") << "\n";
    os << "\n[run]\n";
    os << "seed = " << c.seed << "\n";
    os << "out_dir = " << c.out_dir << "\n";
    os << "bias_every = " << c.bias_every << "\n";
    return os.str();
}

}  // namespace wt
