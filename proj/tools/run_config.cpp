#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace snep::cli {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::deterministic: return "deterministic";
        case Mode::discretize: return "discretize";
        case Mode::oracle: return "oracle";
        case Mode::ladder: return "ladder";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    if (name == "deterministic") return Mode::deterministic;
    if (name == "discretize") return Mode::discretize;
    if (name == "oracle") return Mode::oracle;
    if (name == "ladder") return Mode::ladder;
    throw std::invalid_argument("unknown mode '" + std::string(name) +
                                "' (expected deterministic, discretize, oracle or ladder)");
}

CournotInstance RunConfig::instance() const {
    return CournotInstance(model.firms, model.a, model.e, factors.r, factors.s, factors.beta,
                           factors.alpha);
}

ConfigError::ConfigError(const std::string& source, int line, const std::string& pointer,
                         const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " +
                         (pointer.empty() ? std::string("/") : pointer) + ": " + message),
      line_(line), pointer_(pointer) {}

// ---------------------------------------------------------------------------
// Line index

JsonLineIndex::JsonLineIndex(std::string_view text) {
    struct Frame {
        bool object;
        std::string key;
        std::size_t index = 0;
        bool expect_key = false;
    };
    std::vector<Frame> stack;
    int line = 1;

    auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    };
    auto current = [&]() {
        std::string p;
        for (const Frame& f : stack) {
            p += '/';
            p += f.object ? escape(f.key) : std::to_string(f.index);
        }
        return p;
    };
    auto read_string = [&](std::size_t& i) {
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
            if (text[i] == '\\' && i + 1 < text.size()) ++i;
            if (text[i] == '\n') ++line;
            s += text[i];
        }
        return s;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
        } else if (c == '{' || c == '[') {
            entries_.emplace_back(current(), line);
            stack.push_back(Frame{c == '{', {}, 0, c == '{'});
        } else if (c == '}' || c == ']') {
            if (!stack.empty()) stack.pop_back();
        } else if (c == ',') {
            if (!stack.empty()) {
                if (stack.back().object) stack.back().expect_key = true;
                else ++stack.back().index;
            }
        } else if (c == '"') {
            if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                stack.back().key = read_string(i);
                stack.back().expect_key = false;
            } else {
                entries_.emplace_back(current(), line);
                read_string(i);
            }
        } else if (c == '-' || (c >= '0' && c <= '9') || c == 't' || c == 'f' || c == 'n') {
            entries_.emplace_back(current(), line);
            while (i + 1 < text.size() && std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos) {
                ++i;
            }
        }
    }
}

int JsonLineIndex::line_of(const std::string& pointer) const {
    std::string p = pointer;
    for (;;) {
        for (const auto& [key, line] : entries_) {
            if (key == p) return line;
        }
        if (p.empty()) return 1;
        p.erase(p.rfind('/'));
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Reader {
public:
    Reader(const JsonLineIndex& index, std::string source) : index_(index), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        throw ConfigError(source_, index_.line_of(pointer), pointer, message);
    }

    const json& object(const json& j, const std::string& ptr) const {
        if (!j.is_object()) fail(ptr, "expected an object");
        return j;
    }

    void only_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) const {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : j.items()) {
            if (!allowed.count(k)) fail(ptr + "/" + k, "unknown key '" + k + "'");
        }
    }

    const json& require(const json& j, const std::string& ptr, const char* key) const {
        if (!j.contains(key)) fail(ptr, std::string("missing required key '") + key + "'");
        return j.at(key);
    }

    double number(const json& j, const std::string& ptr) const {
        if (!j.is_number()) fail(ptr, "expected a number");
        return j.get<double>();
    }

    long long integer(const json& j, const std::string& ptr, long long min) const {
        if (!j.is_number_integer() && !(j.is_number_float() && j.get<double>() == std::floor(j.get<double>()))) {
            fail(ptr, "expected an integer");
        }
        const double v = j.get<double>();
        if (v < static_cast<double>(min)) fail(ptr, "must be >= " + std::to_string(min));
        if (v > 9.0e18) fail(ptr, "too large");
        return static_cast<long long>(v);
    }

    std::string string(const json& j, const std::string& ptr) const {
        if (!j.is_string()) fail(ptr, "expected a string");
        return j.get<std::string>();
    }

    bool boolean(const json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected true or false");
        return j.get<bool>();
    }

    template <class F>
    auto wrap(const std::string& ptr, F&& make) const {
        try {
            return make();
        } catch (const std::invalid_argument& e) {
            fail(ptr, e.what());
        }
    }

    RandomFactor factor(const json& j, const std::string& ptr) const {
        if (j.is_number()) return wrap(ptr, [&] { return RandomFactor::constant(j.get<double>()); });
        object(j, ptr);
        const std::string kind = string(require(j, ptr, "kind"), ptr + "/kind");
        if (kind == "constant") {
            only_keys(j, ptr, {"kind", "value"});
            const double v = number(require(j, ptr, "value"), ptr + "/value");
            return wrap(ptr, [&] { return RandomFactor::constant(v); });
        }
        if (kind == "uniform") {
            only_keys(j, ptr, {"kind", "lo", "hi"});
            const double lo = number(require(j, ptr, "lo"), ptr + "/lo");
            const double hi = number(require(j, ptr, "hi"), ptr + "/hi");
            return wrap(ptr, [&] { return RandomFactor::uniform(lo, hi); });
        }
        if (kind == "truncated_normal") {
            only_keys(j, ptr, {"kind", "mu", "sigma", "lo", "hi"});
            const double mu = number(require(j, ptr, "mu"), ptr + "/mu");
            const double sigma = number(require(j, ptr, "sigma"), ptr + "/sigma");
            const double lo = number(require(j, ptr, "lo"), ptr + "/lo");
            const double hi = number(require(j, ptr, "hi"), ptr + "/hi");
            return wrap(ptr, [&] { return RandomFactor::truncated_normal(mu, sigma, lo, hi); });
        }
        fail(ptr + "/kind", "unknown distribution kind '" + kind +
                                "' (expected constant, uniform or truncated_normal)");
    }

private:
    const JsonLineIndex& index_;
    std::string source_;
};

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source) {
    const JsonLineIndex index(text);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw ConfigError(source, line, "", std::string("malformed JSON: ") + e.what());
    }
    const Reader rd(index, source);
    RunConfig cfg;

    rd.object(doc, "");
    rd.only_keys(doc, "", {"model", "factors", "discretization", "solver", "run"});

    // model
    {
        const std::string p = "/model";
        const json& m = rd.object(rd.require(doc, "", "model"), p);
        rd.only_keys(m, p, {"a", "e", "firms"});
        if (m.contains("a")) cfg.model.a = rd.number(m["a"], p + "/a");
        if (m.contains("e")) cfg.model.e = rd.number(m["e"], p + "/e");
        if (!(cfg.model.a > 0.0 && cfg.model.a < 1.0)) {
            rd.fail(p + "/a", "price exponent a must satisfy 0 < a < 1");
        }
        if (!(cfg.model.e > 0.0)) rd.fail(p + "/e", "scarcity parameter e must be > 0");
        const json& firms = rd.require(m, p, "firms");
        if (!firms.is_array() || firms.empty()) rd.fail(p + "/firms", "expected a non-empty array of firms");
        for (std::size_t i = 0; i < firms.size(); ++i) {
            const std::string fp = p + "/firms/" + std::to_string(i);
            const json& f = rd.object(firms[i], fp);
            rd.only_keys(f, fp, {"c", "k", "b", "q_bar"});
            FirmParams firm;
            firm.c = rd.number(rd.require(f, fp, "c"), fp + "/c");
            firm.k = rd.number(rd.require(f, fp, "k"), fp + "/k");
            firm.b = rd.number(rd.require(f, fp, "b"), fp + "/b");
            firm.q_bar = rd.factor(rd.require(f, fp, "q_bar"), fp + "/q_bar");
            if (!(firm.c >= 0.0)) rd.fail(fp + "/c", "linear cost c must be >= 0");
            if (!(firm.k > 0.0)) rd.fail(fp + "/k", "cost parameter k must be > 0");
            if (!(firm.b > 0.0)) rd.fail(fp + "/b", "cost exponent b must be > 0");
            if (!(firm.q_bar.lo() >= 0.0)) rd.fail(fp + "/q_bar", "production bound must be nonnegative");
            cfg.model.firms.push_back(firm);
        }
    }

    // factors
    {
        const std::string p = "/factors";
        const json& f = rd.object(rd.require(doc, "", "factors"), p);
        rd.only_keys(f, p, {"r", "s", "beta", "alpha"});
        cfg.factors.r = rd.factor(rd.require(f, p, "r"), p + "/r");
        cfg.factors.s = rd.factor(rd.require(f, p, "s"), p + "/s");
        if (!(cfg.factors.s.lo() > 0.0)) rd.fail(p + "/s", "price scale S must have support in (0, inf)");
        if (f.contains("alpha")) cfg.factors.alpha = rd.factor(f["alpha"], p + "/alpha");
        if (f.contains("beta")) {
            const json& b = f["beta"];
            if (!b.is_array() || b.size() != cfg.model.firms.size()) {
                rd.fail(p + "/beta", "expected one beta factor per firm (" +
                                         std::to_string(cfg.model.firms.size()) + ")");
            }
            for (std::size_t i = 0; i < b.size(); ++i) {
                const std::string bp = p + "/beta/" + std::to_string(i);
                cfg.factors.beta.push_back(rd.factor(b[i], bp));
                if (!(cfg.factors.beta.back().lo() > 0.0)) rd.fail(bp, "beta factors must have support in (0, inf)");
            }
        }
    }

    // discretization
    if (doc.contains("discretization")) {
        const std::string p = "/discretization";
        const json& d = rd.object(doc["discretization"], p);
        rd.only_keys(d, p, {"r", "s", "alpha", "beta", "q_bar"});
        auto read = [&](const char* name, FactorDiscretization& out) {
            if (!d.contains(name)) return;
            const std::string fp = p + "/" + name;
            const json& f = rd.object(d[name], fp);
            rd.only_keys(f, fp, {"cells", "representative"});
            if (f.contains("cells")) {
                const long long n = rd.integer(f["cells"], fp + "/cells", 1);
                if (n > std::numeric_limits<int>::max()) rd.fail(fp + "/cells", "too many cells");
                out.cells = static_cast<int>(n);
            }
            if (f.contains("representative")) {
                const std::string rule = rd.string(f["representative"], fp + "/representative");
                out.rule = rd.wrap(fp + "/representative", [&] { return parse_representative_rule(rule); });
            }
        };
        read("r", cfg.discretization.r);
        read("s", cfg.discretization.s);
        read("alpha", cfg.discretization.alpha);
        read("beta", cfg.discretization.beta);
        read("q_bar", cfg.discretization.q_bar);
    }

    // solver
    if (doc.contains("solver")) {
        const std::string p = "/solver";
        const json& s = rd.object(doc["solver"], p);
        rd.only_keys(s, p, {"tolerance", "max_iterations", "initial_step", "step_shrink", "gamma"});
        if (s.contains("tolerance")) cfg.solver.tolerance = rd.number(s["tolerance"], p + "/tolerance");
        if (s.contains("max_iterations")) {
            cfg.solver.max_iterations =
                static_cast<int>(std::min<long long>(rd.integer(s["max_iterations"], p + "/max_iterations", 1),
                                                     std::numeric_limits<int>::max()));
        }
        if (s.contains("initial_step")) cfg.solver.initial_step = rd.number(s["initial_step"], p + "/initial_step");
        if (s.contains("step_shrink")) cfg.solver.step_shrink = rd.number(s["step_shrink"], p + "/step_shrink");
        if (s.contains("gamma")) cfg.solver.gamma = rd.number(s["gamma"], p + "/gamma");
        rd.wrap(p, [&] {
            cfg.solver.validate();
            return 0;
        });
    }

    // run
    if (doc.contains("run")) {
        const std::string p = "/run";
        const json& r = rd.object(doc["run"], p);
        rd.only_keys(r, p, {"mode", "threads", "out", "seed", "n_samples", "cells_csv", "ladder_levels",
                            "ladder_factor", "cell_cap", "max_flagged_fraction"});
        if (r.contains("mode")) {
            const std::string m = rd.string(r["mode"], p + "/mode");
            cfg.run.mode = rd.wrap(p + "/mode", [&] { return parse_mode(m); });
        }
        if (r.contains("threads")) cfg.run.threads = static_cast<unsigned>(rd.integer(r["threads"], p + "/threads", 1));
        if (r.contains("out")) cfg.run.out = rd.string(r["out"], p + "/out");
        if (r.contains("seed")) cfg.run.seed = static_cast<std::uint64_t>(rd.integer(r["seed"], p + "/seed", 0));
        if (r.contains("n_samples")) {
            cfg.run.n_samples = static_cast<std::size_t>(rd.integer(r["n_samples"], p + "/n_samples", 1));
        }
        if (r.contains("cells_csv")) cfg.run.cells_csv = rd.boolean(r["cells_csv"], p + "/cells_csv");
        if (r.contains("ladder_levels")) {
            cfg.run.ladder_levels = static_cast<int>(rd.integer(r["ladder_levels"], p + "/ladder_levels", 2));
        }
        if (r.contains("ladder_factor")) {
            cfg.run.ladder_factor = static_cast<int>(rd.integer(r["ladder_factor"], p + "/ladder_factor", 2));
        }
        if (r.contains("cell_cap")) {
            cfg.run.cell_cap = static_cast<std::size_t>(rd.integer(r["cell_cap"], p + "/cell_cap", 1));
        }
        if (r.contains("max_flagged_fraction")) {
            cfg.run.max_flagged_fraction = rd.number(r["max_flagged_fraction"], p + "/max_flagged_fraction");
            if (!(cfg.run.max_flagged_fraction >= 0.0 && cfg.run.max_flagged_fraction <= 1.0)) {
                rd.fail(p + "/max_flagged_fraction", "must lie in [0, 1]");
            }
        }
    }

    rd.wrap("/model", [&] { return cfg.instance(); });
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json factor_json(const RandomFactor& f) {
    ordered_json j;
    j["kind"] = to_string(f.kind());
    switch (f.kind()) {
        case FactorKind::constant: j["value"] = f.mu(); break;
        case FactorKind::uniform:
            j["lo"] = f.lo();
            j["hi"] = f.hi();
            break;
        case FactorKind::truncated_normal:
            j["mu"] = f.mu();
            j["sigma"] = f.sigma();
            j["lo"] = f.lo();
            j["hi"] = f.hi();
            break;
    }
    return j;
}

ordered_json discretization_json(const FactorDiscretization& d) {
    return ordered_json{{"cells", d.cells}, {"representative", to_string(d.rule)}};
}

}  // namespace

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    ordered_json firms = ordered_json::array();
    for (const auto& f : c.model.firms) {
        firms.push_back(ordered_json{{"c", f.c}, {"k", f.k}, {"b", f.b}, {"q_bar", factor_json(f.q_bar)}});
    }
    j["model"] = ordered_json{{"a", c.model.a}, {"e", c.model.e}, {"firms", firms}};

    ordered_json factors{{"r", factor_json(c.factors.r)}, {"s", factor_json(c.factors.s)}};
    if (!c.factors.beta.empty()) {
        ordered_json beta = ordered_json::array();
        for (const auto& b : c.factors.beta) beta.push_back(factor_json(b));
        factors["beta"] = beta;
    }
    factors["alpha"] = factor_json(c.factors.alpha);
    j["factors"] = factors;

    j["discretization"] = ordered_json{{"r", discretization_json(c.discretization.r)},
                                       {"s", discretization_json(c.discretization.s)},
                                       {"alpha", discretization_json(c.discretization.alpha)},
                                       {"beta", discretization_json(c.discretization.beta)},
                                       {"q_bar", discretization_json(c.discretization.q_bar)}};
    j["solver"] = ordered_json{{"tolerance", c.solver.tolerance},
                               {"max_iterations", c.solver.max_iterations},
                               {"initial_step", c.solver.initial_step},
                               {"step_shrink", c.solver.step_shrink},
                               {"gamma", c.solver.gamma}};
    j["run"] = ordered_json{{"mode", to_string(c.run.mode)},
                            {"threads", c.run.threads},
                            {"out", c.run.out},
                            {"seed", c.run.seed},
                            {"n_samples", c.run.n_samples},
                            {"cells_csv", c.run.cells_csv},
                            {"ladder_levels", c.run.ladder_levels},
                            {"ladder_factor", c.run.ladder_factor},
                            {"cell_cap", c.run.cell_cap},
                            {"max_flagged_fraction", c.run.max_flagged_fraction}};
    return j;
}

}  // namespace snep::cli
